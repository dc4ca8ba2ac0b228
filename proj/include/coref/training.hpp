#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/metrics.hpp"
#include "coref/model.hpp"

namespace coref {

struct ObjectiveConfig {
  bool cl_source = false;
  bool cl_target = false;
  bool md_target = false;
  bool mlm_target = false;

  bool any() const { return cl_source || cl_target || md_target || mlm_target; }
  bool any_target() const { return cl_target || md_target || mlm_target; }
};

// Comma-separated subset of cl_s, cl_t, md_t, mlm_t.
ObjectiveConfig parse_objectives(const std::string& list);
std::string to_string(const ObjectiveConfig& objectives);

struct FreezeConfig {
  bool encoder = false;
  bool mention_detector = false;
  bool antecedent_linker = false;

  bool frozen(Component component) const;
  bool all() const { return encoder && mention_detector && antecedent_linker; }
};

// Comma-separated subset of enc, md, al; empty or "none" freezes nothing.
FreezeConfig parse_freeze(const std::string& list);
std::string to_string(const FreezeConfig& freeze);

struct TrainSchedule {
  int source_epochs = 20;
  int target_epochs = 20;
  int early_stop_patience = 2;
  double lr_encoder = 2e-5;
  double lr_other = 1e-4;
  double weight_decay = 0.01;
  double clip_norm = 1.0;
  double mask_rate = 0.15;
  int interleave_threshold_mentions = 1000;

  void validate() const;
};

// Decoupled weight decay Adam with one rate for the encoder and one for the
// rest. Frozen tensors are left untouched, decay included.
class AdamW {
 public:
  AdamW(const ModelWeights& shape, const TrainSchedule& schedule);

  // Clips the trainable gradients to the schedule's global norm, then updates.
  // Returns the pre-clipping norm.
  double step(ModelWeights& weights, ModelWeights& grads, const FreezeConfig& freeze);

 private:
  ModelWeights m_, v_;
  TrainSchedule schedule_;
  long steps_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::optional<double> dev_avg_f1;
};

struct TrainResult {
  CorefModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // epoch whose weights were returned
  bool stopped_early = false;
};

// CL on the source corpus for source_epochs, one document per step.
// Throws ConfigError when the corpus has no coreference annotations.
TrainResult train_source(const CorefModel& init, const Corpus& source,
                         const TrainSchedule& schedule, std::uint64_t seed);

struct AdaptationData {
  const Corpus* target_train = nullptr;
  const Corpus* target_dev = nullptr;    // enables early stopping
  const Corpus* source_train = nullptr;  // needed when source examples are mixed in
};

// Whether source coreference examples alternate with target examples.
bool interleaves_source(const ObjectiveConfig& objectives, const Corpus& target,
                        const TrainSchedule& schedule);

// Throws ConfigError on objective/annotation or freezing conflicts.
void check_adaptation(const ObjectiveConfig& objectives, const FreezeConfig& freeze,
                      const AdaptationData& data, const TrainSchedule& schedule);

// Continued training from `init`. Each step sums the enabled losses of one
// document. Evaluates on target_dev after every epoch and stops after
// early_stop_patience consecutive drops, returning the best epoch's weights.
TrainResult adapt(const CorefModel& init, const AdaptationData& data,
                  const ObjectiveConfig& objectives, const FreezeConfig& freeze,
                  const TrainSchedule& schedule, std::uint64_t seed);

// min(max(6, floor(15000 / m)), 15). Throws ConfigError for m <= 0.
int seed_count(long long target_mentions);

std::map<std::string, ClusterSet> predict_corpus(const CorefModel& model,
                                                 const Corpus& corpus);

// The scheme that matches how the corpus annotates singletons.
Scheme matching_scheme(const Corpus& corpus);

// Avg F1 on `dev` under its matching scheme.
double dev_avg_f1(const CorefModel& model, const Corpus& dev);

}  // namespace coref
