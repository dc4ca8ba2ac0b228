#include "coref/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "coref/errors.hpp"

namespace coref {

ObjectiveConfig parse_objectives(const std::string& list) {
  ObjectiveConfig out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "cl_s") out.cl_source = true;
    else if (item == "cl_t") out.cl_target = true;
    else if (item == "md_t") out.md_target = true;
    else if (item == "mlm_t") out.mlm_target = true;
    else if (!item.empty()) throw ConfigError("unknown objective '" + item + "'");
  }
  if (!out.any()) throw ConfigError("at least one objective must be enabled");
  return out;
}

std::string to_string(const ObjectiveConfig& o) {
  std::vector<std::string> parts;
  if (o.cl_source) parts.push_back("cl_s");
  if (o.cl_target) parts.push_back("cl_t");
  if (o.md_target) parts.push_back("md_t");
  if (o.mlm_target) parts.push_back("mlm_t");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

bool FreezeConfig::frozen(Component component) const {
  switch (component) {
    case Component::kEncoder: return encoder;
    case Component::kMentionDetector: return mention_detector;
    case Component::kAntecedentLinker: return antecedent_linker;
  }
  return false;
}

FreezeConfig parse_freeze(const std::string& list) {
  FreezeConfig out;
  if (list == "none") return out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "enc") out.encoder = true;
    else if (item == "md") out.mention_detector = true;
    else if (item == "al") out.antecedent_linker = true;
    else if (!item.empty()) throw ConfigError("unknown component '" + item + "'");
  }
  return out;
}

std::string to_string(const FreezeConfig& f) {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (on) out += (out.empty() ? "" : ",") + std::string(name);
  };
  add(f.encoder, "enc");
  add(f.mention_detector, "md");
  add(f.antecedent_linker, "al");
  return out.empty() ? "none" : out;
}

void TrainSchedule::validate() const {
  if (source_epochs < 0 || target_epochs < 0) throw ConfigError("epochs must be non-negative");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be at least 1");
  if (!(lr_encoder > 0.0) || !(lr_other > 0.0)) throw ConfigError("learning rates must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw ConfigError("mask_rate must lie in (0,1]");
  if (interleave_threshold_mentions < 0) {
    throw ConfigError("interleave_threshold_mentions must be non-negative");
  }
}

AdamW::AdamW(const ModelWeights& shape, const TrainSchedule& schedule)
    : m_(shape), v_(shape), schedule_(schedule) {
  ModelWeights::visit(m_, [](const std::string&, Matrix& t) { t.setZero(); });
  ModelWeights::visit(v_, [](const std::string&, Matrix& t) { t.setZero(); });
}

namespace {

// Visits matching tensors of several ModelWeights in lockstep.
template <typename Fn>
void zip(ModelWeights& a, ModelWeights& b, ModelWeights& c, ModelWeights& d, Fn&& fn) {
  std::vector<Matrix*> pa, pb, pc, pd;
  std::vector<std::string> names;
  ModelWeights::visit(a, [&](const std::string& n, Matrix& t) { names.push_back(n); pa.push_back(&t); });
  ModelWeights::visit(b, [&](const std::string&, Matrix& t) { pb.push_back(&t); });
  ModelWeights::visit(c, [&](const std::string&, Matrix& t) { pc.push_back(&t); });
  ModelWeights::visit(d, [&](const std::string&, Matrix& t) { pd.push_back(&t); });
  for (std::size_t i = 0; i < names.size(); ++i) fn(names[i], *pa[i], *pb[i], *pc[i], *pd[i]);
}

}  // namespace

double AdamW::step(ModelWeights& weights, ModelWeights& grads, const FreezeConfig& freeze) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double squared = 0.0;
  ModelWeights::visit(grads, [&](const std::string& name, Matrix& g) {
    if (!freeze.frozen(component_of(name))) squared += g.squaredNorm();
  });
  const double norm = std::sqrt(squared);
  const double scale = norm > schedule_.clip_norm ? schedule_.clip_norm / norm : 1.0;
  ++steps_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  zip(weights, grads, m_, v_,
      [&](const std::string& name, Matrix& w, Matrix& g, Matrix& m, Matrix& v) {
        const Component component = component_of(name);
        if (freeze.frozen(component)) return;
        const double lr = component == Component::kEncoder ? schedule_.lr_encoder
                                                           : schedule_.lr_other;
        g *= scale;
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
        const auto update = (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
        w.array() -= lr * (update + schedule_.weight_decay * w.array());
      });
  return norm;
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double train_step(CorefModel& model, AdamW& optimizer, const FreezeConfig& freeze,
                  const Document& doc, const LossTargets& targets) {
  ModelWeights grads = ModelWeights::zeros(model.config());
  const LossBreakdown loss = model.loss(doc, targets, &grads);
  optimizer.step(model.mutable_weights(), grads, freeze);
  return loss.total();
}

const ClusterSet* clusters_of(const Corpus& corpus, const std::string& doc_id) {
  auto it = corpus.coref_annotations.find(doc_id);
  return it == corpus.coref_annotations.end() ? nullptr : &it->second;
}

const MentionAnnotation* mentions_of(const Corpus& corpus, const std::string& doc_id) {
  auto it = corpus.mention_annotations.find(doc_id);
  return it == corpus.mention_annotations.end() ? nullptr : &it->second;
}

std::vector<std::size_t> annotated_docs(const Corpus& corpus) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (clusters_of(corpus, corpus.documents[i].doc_id) != nullptr) out.push_back(i);
  }
  return out;
}

// Cycles through a shuffled list, reshuffling after each pass.
class Stream {
 public:
  Stream(std::vector<std::size_t> items, std::mt19937_64& rng)
      : items_(std::move(items)), rng_(rng) {}
  std::size_t next() {
    if (cursor_ == 0) std::shuffle(items_.begin(), items_.end(), rng_);
    const std::size_t out = items_[cursor_];
    cursor_ = (cursor_ + 1) % items_.size();
    return out;
  }
  bool empty() const { return items_.empty(); }

 private:
  std::vector<std::size_t> items_;
  std::mt19937_64& rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

TrainResult train_source(const CorefModel& init, const Corpus& source,
                         const TrainSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  const std::vector<std::size_t> docs = annotated_docs(source);
  if (docs.empty()) throw ConfigError("source corpus has no coreference annotations");
  TrainResult result{init, {}, 0, false};
  AdamW optimizer(init.weights(), schedule);
  const FreezeConfig none;
  std::mt19937_64 rng(seed);
  for (int epoch = 1; epoch <= schedule.source_epochs; ++epoch) {
    std::vector<std::size_t> order = docs;
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record{epoch, 0.0, 0, std::nullopt};
    for (std::size_t i : order) {
      const Document& doc = source.documents[i];
      LossTargets targets;
      targets.clusters = clusters_of(source, doc.doc_id);
      record.mean_loss += train_step(result.model, optimizer, none, doc, targets);
      ++record.steps;
    }
    record.mean_loss /= static_cast<double>(record.steps);
    result.history.push_back(record);
    result.best_epoch = epoch;
  }
  return result;
}

bool interleaves_source(const ObjectiveConfig& objectives, const Corpus& target,
                        const TrainSchedule& schedule) {
  if (objectives.cl_source) return true;
  std::size_t mentions = 0;
  for (const auto& [id, clusters] : target.coref_annotations) mentions += clusters.mention_count();
  return objectives.cl_target &&
         mentions < static_cast<std::size_t>(schedule.interleave_threshold_mentions);
}

void check_adaptation(const ObjectiveConfig& objectives, const FreezeConfig& freeze,
                      const AdaptationData& data, const TrainSchedule& schedule) {
  schedule.validate();
  if (!objectives.any()) throw ConfigError("at least one objective must be enabled");
  if (freeze.all()) {
    throw ConfigError("all components are frozen; no enabled loss can update the model");
  }
  if (objectives.any_target() && data.target_train == nullptr) {
    throw ConfigError("target objectives need a target training corpus");
  }
  if (objectives.cl_target && data.target_train->coref_annotations.empty()) {
    throw ConfigError("cl_t needs coreference annotations on the target corpus");
  }
  if (objectives.md_target && data.target_train->mention_annotations.empty()) {
    throw ConfigError("md_t needs mention annotations on the target corpus");
  }
  const bool interleave =
      objectives.cl_source ||
      (data.target_train != nullptr && interleaves_source(objectives, *data.target_train, schedule));
  if (interleave && (data.source_train == nullptr || annotated_docs(*data.source_train).empty())) {
    throw ConfigError("interleaving needs a source corpus with coreference annotations");
  }
}

TrainResult adapt(const CorefModel& init, const AdaptationData& data,
                  const ObjectiveConfig& objectives, const FreezeConfig& freeze,
                  const TrainSchedule& schedule, std::uint64_t seed) {
  check_adaptation(objectives, freeze, data, schedule);
  const bool interleave =
      objectives.cl_source ||
      (data.target_train != nullptr && interleaves_source(objectives, *data.target_train, schedule));

  std::vector<std::size_t> target_docs;
  if (objectives.any_target()) {
    const Corpus& target = *data.target_train;
    for (std::size_t i = 0; i < target.documents.size(); ++i) {
      const std::string& id = target.documents[i].doc_id;
      if (objectives.mlm_target || (objectives.cl_target && clusters_of(target, id)) ||
          (objectives.md_target && mentions_of(target, id))) {
        target_docs.push_back(i);
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::mt19937_64 source_rng(mix(seed, 1));
  Stream source_stream(interleave ? annotated_docs(*data.source_train) : std::vector<std::size_t>{},
                       source_rng);

  TrainResult result{init, {}, 0, false};
  AdamW optimizer(init.weights(), schedule);
  std::optional<double> previous;
  double best = -std::numeric_limits<double>::infinity();
  ModelWeights best_weights = init.weights();
  int drops = 0;

  auto source_step = [&](EpochRecord& record) {
    const Document& doc = data.source_train->documents[source_stream.next()];
    LossTargets targets;
    targets.clusters = clusters_of(*data.source_train, doc.doc_id);
    record.mean_loss += train_step(result.model, optimizer, freeze, doc, targets);
    ++record.steps;
  };

  for (int epoch = 1; epoch <= schedule.target_epochs; ++epoch) {
    EpochRecord record{epoch, 0.0, 0, std::nullopt};
    std::vector<std::size_t> order = target_docs;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t step = 0; step < order.size(); ++step) {
      const Corpus& target = *data.target_train;
      const Document& doc = target.documents[order[step]];
      LossTargets targets;
      if (objectives.cl_target) targets.clusters = clusters_of(target, doc.doc_id);
      if (objectives.md_target) targets.mentions = mentions_of(target, doc.doc_id);
      MaskingPlan plan;
      if (objectives.mlm_target) {
        plan = make_masking_plan(result.model.vocab().encode(doc.tokens), schedule.mask_rate,
                                 mix(mix(seed, static_cast<std::uint64_t>(epoch)), step));
        targets.mlm = &plan;
      }
      record.mean_loss += train_step(result.model, optimizer, freeze, doc, targets);
      ++record.steps;
      if (interleave) source_step(record);
    }
    // Source-only objectives: one pass over the source corpus per epoch.
    if (target_docs.empty() && interleave) {
      for (std::size_t k = 0; k < annotated_docs(*data.source_train).size(); ++k) source_step(record);
    }
    if (record.steps > 0) record.mean_loss /= static_cast<double>(record.steps);

    if (data.target_dev != nullptr) {
      const double score = dev_avg_f1(result.model, *data.target_dev);
      record.dev_avg_f1 = score;
      if (score > best) {
        best = score;
        best_weights = result.model.weights();
        result.best_epoch = epoch;
      }
      drops = previous && score < *previous ? drops + 1 : 0;
      previous = score;
      result.history.push_back(record);
      if (drops >= schedule.early_stop_patience) {
        result.stopped_early = true;
        break;
      }
    } else {
      result.history.push_back(record);
      result.best_epoch = epoch;
    }
  }
  if (data.target_dev != nullptr && !result.history.empty()) {
    result.model.mutable_weights() = best_weights;
  }
  return result;
}

int seed_count(long long target_mentions) {
  if (target_mentions <= 0) throw ConfigError("target mention count must be positive");
  const long long ratio = 15000 / target_mentions;
  return static_cast<int>(std::min<long long>(std::max<long long>(6, ratio), 15));
}

std::map<std::string, ClusterSet> predict_corpus(const CorefModel& model,
                                                 const Corpus& corpus) {
  std::map<std::string, ClusterSet> out;
  for (const auto& doc : corpus.documents) out.emplace(doc.doc_id, model.predict(doc).clusters);
  return out;
}

Scheme matching_scheme(const Corpus& corpus) {
  return corpus.style.singletons_annotated ? Scheme::kWithSingletons
                                           : Scheme::kWithoutSingletons;
}

double dev_avg_f1(const CorefModel& model, const Corpus& dev) {
  return report(dev, predict_corpus(model, dev), matching_scheme(dev), MetricSet::kAll).avg_f1;
}

}  // namespace coref
