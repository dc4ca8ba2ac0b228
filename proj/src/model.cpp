#include "coref/model.hpp"

#include <set>

#include "coref/errors.hpp"
#include "coref/hashing.hpp"

namespace coref {

std::string to_string(SingletonMode mode) {
  switch (mode) {
    case SingletonMode::kAuto: return "auto";
    case SingletonMode::kOn: return "true";
    case SingletonMode::kOff: return "false";
  }
  return "auto";
}

SingletonMode parse_singleton_mode(const std::string& name) {
  if (name == "auto") return SingletonMode::kAuto;
  if (name == "true" || name == "on") return SingletonMode::kOn;
  if (name == "false" || name == "off") return SingletonMode::kOff;
  throw ConfigError("emit_singletons must be auto, true or false, got '" + name + "'");
}

bool LinkerConfig::emits_singletons(double q) const {
  switch (emit_singletons) {
    case SingletonMode::kOn: return true;
    case SingletonMode::kOff: return false;
    case SingletonMode::kAuto: return q > 0.0;
  }
  return false;
}

void ModelConfig::validate() const {
  encoder.validate();
  if (detector.max_width < 1) throw ConfigError("max_width must be at least 1");
  if (!(detector.lambda_keep > 0.0)) throw ConfigError("lambda_keep must be positive");
  if (!(detector.q >= 0.0 && detector.q <= 1.0)) throw ConfigError("q must lie in [0,1]");
  if (detector.hidden_dim < 1) throw ConfigError("mention_detector.hidden_dim must be positive");
  if (linker.top_k < 1) throw ConfigError("top_k_antecedents must be at least 1");
  if (linker.hidden_dim < 1 || linker.distance_dim < 1) {
    throw ConfigError("antecedent_linker dimensions must be positive");
  }
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::string& section,
                    const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key " + section + "." + key);
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out,
          const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for " + section + "." + key);
  }
}

}  // namespace

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"encoder",
       {{"vocab_size", c.encoder.vocab_size},
        {"embedding_dim", c.encoder.embedding_dim},
        {"context_layers", c.encoder.context_layers},
        {"hidden_dim", c.encoder.hidden_dim},
        {"max_segment_length", c.encoder.max_segment_length},
        {"width_buckets", c.encoder.width_buckets},
        {"width_dim", c.encoder.width_dim}}},
      {"mention_detector",
       {{"max_width", c.detector.max_width},
        {"lambda_keep", c.detector.lambda_keep},
        {"q", c.detector.q},
        {"hidden_dim", c.detector.hidden_dim}}},
      {"antecedent_linker",
       {{"top_k_antecedents", c.linker.top_k},
        {"emit_singletons", to_string(c.linker.emit_singletons)},
        {"hidden_dim", c.linker.hidden_dim},
        {"distance_dim", c.linker.distance_dim}}},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  reject_unknown(j, "model", {"encoder", "mention_detector", "antecedent_linker"});
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    reject_unknown(e, "encoder",
                   {"vocab_size", "embedding_dim", "context_layers", "hidden_dim",
                    "max_segment_length", "width_buckets", "width_dim"});
    read(e, "vocab_size", c.encoder.vocab_size, "encoder");
    read(e, "embedding_dim", c.encoder.embedding_dim, "encoder");
    read(e, "context_layers", c.encoder.context_layers, "encoder");
    read(e, "hidden_dim", c.encoder.hidden_dim, "encoder");
    read(e, "max_segment_length", c.encoder.max_segment_length, "encoder");
    read(e, "width_buckets", c.encoder.width_buckets, "encoder");
    read(e, "width_dim", c.encoder.width_dim, "encoder");
  }
  if (j.contains("mention_detector")) {
    const auto& m = j.at("mention_detector");
    reject_unknown(m, "mention_detector", {"max_width", "lambda_keep", "q", "hidden_dim"});
    read(m, "max_width", c.detector.max_width, "mention_detector");
    read(m, "lambda_keep", c.detector.lambda_keep, "mention_detector");
    read(m, "q", c.detector.q, "mention_detector");
    read(m, "hidden_dim", c.detector.hidden_dim, "mention_detector");
  }
  if (j.contains("antecedent_linker")) {
    const auto& a = j.at("antecedent_linker");
    reject_unknown(a, "antecedent_linker",
                   {"top_k_antecedents", "emit_singletons", "hidden_dim", "distance_dim"});
    read(a, "top_k_antecedents", c.linker.top_k, "antecedent_linker");
    if (a.contains("emit_singletons")) {
      const auto& v = a.at("emit_singletons");
      if (v.is_boolean()) {
        c.linker.emit_singletons = v.get<bool>() ? SingletonMode::kOn : SingletonMode::kOff;
      } else if (v.is_string()) {
        c.linker.emit_singletons = parse_singleton_mode(v.get<std::string>());
      } else {
        throw ConfigError("bad value for antecedent_linker.emit_singletons");
      }
    }
    read(a, "hidden_dim", c.linker.hidden_dim, "antecedent_linker");
    read(a, "distance_dim", c.linker.distance_dim, "antecedent_linker");
  }
  c.validate();
  return c;
}

ModelWeights ModelWeights::zeros(const ModelConfig& config) {
  const int span_dim = config.encoder.span_dim();
  return {EncoderWeights::zeros(config.encoder),
          MentionScorerWeights::zeros(span_dim, config.detector.hidden_dim),
          LinkerWeights::zeros(span_dim, config.linker.distance_dim,
                               config.linker.hidden_dim)};
}

Component component_of(const std::string& tensor_name) {
  if (tensor_name.starts_with("encoder.")) return Component::kEncoder;
  if (tensor_name.starts_with("mention.")) return Component::kMentionDetector;
  if (tensor_name.starts_with("linker.")) return Component::kAntecedentLinker;
  throw ValidationError("unknown tensor " + tensor_name);
}

CorefModel::CorefModel(ModelConfig config, Vocabulary vocab, ModelWeights weights)
    : config_(std::move(config)), vocab_(std::move(vocab)), weights_(std::move(weights)) {
  config_.validate();
  if (config_.encoder.vocab_size != static_cast<int>(vocab_.size())) {
    throw ConfigError("encoder vocab_size does not match the vocabulary");
  }
}

CorefModel CorefModel::initialize(ModelConfig config, Vocabulary vocab,
                                  std::uint64_t seed) {
  config.encoder.vocab_size = static_cast<int>(vocab.size());
  config.encoder.seed = seed;
  config.validate();
  std::mt19937_64 rng(seed);
  const int span_dim = config.encoder.span_dim();
  ModelWeights w;
  w.encoder = EncoderWeights::random(config.encoder, rng);
  w.mention = MentionScorerWeights::random(span_dim, config.detector.hidden_dim, rng);
  w.linker = LinkerWeights::random(span_dim, config.linker.distance_dim,
                                   config.linker.hidden_dim, rng);
  return CorefModel(std::move(config), std::move(vocab), std::move(w));
}

namespace {

Matrix gather_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

Vector gather(const Vector& v, const std::vector<std::size_t>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

}  // namespace

DetectorOutput CorefModel::detect(const Document& doc, double q) const {
  const std::vector<int> ids = vocab_.encode(doc.tokens);
  const EncoderActivations enc = encode(config_.encoder, weights_.encoder, ids);
  DetectorOutput out;
  out.candidates = enumerate_candidates(doc.length(), config_.detector.max_width);
  const SpanActivations spans = span_representations(
      config_.encoder, weights_.encoder, enc.token_vectors, out.candidates.spans);
  out.scores = mention_scores(spans.reps, weights_.mention);
  out.pruned = c2f_prune(out.candidates, out.scores, config_.detector.lambda_keep,
                         doc.length());
  if (q > 0.0) out.pruned = high_precision_prune(out.pruned, out.scores, q);
  for (std::size_t k : out.pruned.kept) out.kept_spans.push_back(out.candidates.spans[k]);
  return out;
}

Prediction CorefModel::predict(const Document& doc) const {
  const std::vector<int> ids = vocab_.encode(doc.tokens);
  const EncoderActivations enc = encode(config_.encoder, weights_.encoder, ids);
  const CandidateSet candidates =
      enumerate_candidates(doc.length(), config_.detector.max_width);
  const SpanActivations spans = span_representations(
      config_.encoder, weights_.encoder, enc.token_vectors, candidates.spans);
  const MentionScores scores = mention_scores(spans.reps, weights_.mention);
  const double q = config_.detector.q;
  PrunedCandidates pruned =
      c2f_prune(candidates, scores, config_.detector.lambda_keep, doc.length());
  if (q > 0.0) pruned = high_precision_prune(pruned, scores, q);

  Prediction out;
  for (std::size_t k : pruned.kept) out.kept_spans.push_back(candidates.spans[k]);
  const Matrix kept_reps = gather_rows(spans.reps, pruned.kept);
  const Vector kept_logits = gather(scores.logit, pruned.kept);
  const auto candidates_per_span = top_antecedents(
      coarse_scores(kept_reps, weights_.linker), kept_logits, config_.linker.top_k);
  const AntecedentScores antecedents =
      antecedent_scores(kept_reps, kept_logits, candidates_per_span, weights_.linker);
  out.clusters = decode(doc.doc_id, out.kept_spans, antecedents,
                        config_.linker.emits_singletons(q));
  return out;
}

LossBreakdown CorefModel::loss(const Document& doc, const LossTargets& targets,
                               ModelWeights* grads) const {
  LossBreakdown out;
  const std::vector<int> ids = vocab_.encode(doc.tokens);

  if (targets.clusters != nullptr || targets.mentions != nullptr) {
    const EncoderActivations enc = encode(config_.encoder, weights_.encoder, ids);
    const CandidateSet candidates =
        enumerate_candidates(doc.length(), config_.detector.max_width);
    const SpanActivations spans = span_representations(
        config_.encoder, weights_.encoder, enc.token_vectors, candidates.spans);
    const MentionScores scores = mention_scores(spans.reps, weights_.mention);
    Vector d_logit = Vector::Zero(scores.logit.size());
    Matrix d_reps = Matrix::Zero(spans.reps.rows(), spans.reps.cols());

    if (targets.mentions != nullptr) {
      const MentionLoss md = md_loss(candidates, scores, *targets.mentions);
      out.md = md.loss;
      out.skipped_gold = md.skipped_gold;
      d_logit += md.d_logit;
    }

    if (targets.clusters != nullptr) {
      const PrunedCandidates pruned =
          c2f_prune(candidates, scores, config_.detector.lambda_keep, doc.length());
      std::vector<Span> kept_spans;
      for (std::size_t k : pruned.kept) kept_spans.push_back(candidates.spans[k]);
      const Matrix kept_reps = gather_rows(spans.reps, pruned.kept);
      const Vector kept_logits = gather(scores.logit, pruned.kept);
      const auto candidates_per_span = top_antecedents(
          coarse_scores(kept_reps, weights_.linker), kept_logits, config_.linker.top_k);
      const AntecedentScores antecedents = antecedent_scores(
          kept_reps, kept_logits, candidates_per_span, weights_.linker);
      const CorefLoss cl = coref_loss(kept_spans, antecedents, *targets.clusters);
      out.cl = cl.loss;
      if (grads != nullptr) {
        Matrix d_kept_reps = Matrix::Zero(kept_reps.rows(), kept_reps.cols());
        Vector d_kept_logits = Vector::Zero(kept_logits.size());
        antecedent_scores_backward(kept_reps, antecedents, cl.d_scores, weights_.linker,
                                   d_kept_reps, d_kept_logits, grads->linker);
        for (std::size_t r = 0; r < pruned.kept.size(); ++r) {
          const auto k = static_cast<Eigen::Index>(pruned.kept[r]);
          d_reps.row(k) += d_kept_reps.row(static_cast<Eigen::Index>(r));
          d_logit(k) += d_kept_logits(static_cast<Eigen::Index>(r));
        }
      }
    }

    if (grads != nullptr) {
      mention_scores_backward(spans.reps, weights_.mention, scores, d_logit, d_reps,
                              grads->mention);
      Matrix d_tokens = Matrix::Zero(enc.token_vectors.rows(), enc.token_vectors.cols());
      span_representations_backward(config_.encoder, weights_.encoder, enc.token_vectors,
                                    spans, d_reps, d_tokens, grads->encoder);
      encode_backward(config_.encoder, weights_.encoder, enc, d_tokens, grads->encoder);
    }
  }

  if (targets.mlm != nullptr) {
    out.mlm = mlm_loss(config_.encoder, weights_.encoder, ids, *targets.mlm,
                       grads != nullptr ? &grads->encoder : nullptr);
  }
  return out;
}

std::string config_hash(const ModelConfig& config) {
  return hex64(fnv1a64(to_json(config).dump()));
}

}  // namespace coref
