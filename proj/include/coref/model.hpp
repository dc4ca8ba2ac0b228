#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coref/antecedent_linker.hpp"
#include "coref/corpus.hpp"
#include "coref/encoder.hpp"
#include "coref/mention_detector.hpp"
#include "coref/vocabulary.hpp"

namespace coref {

struct DetectorConfig {
  int max_width = 10;
  double lambda_keep = 0.4;
  double q = 0.0;  // 0 disables high-precision pruning
  int hidden_dim = 32;
};

enum class SingletonMode { kAuto, kOn, kOff };

std::string to_string(SingletonMode mode);
SingletonMode parse_singleton_mode(const std::string& name);

struct LinkerConfig {
  int top_k = 50;
  SingletonMode emit_singletons = SingletonMode::kAuto;
  int hidden_dim = 32;
  int distance_dim = 8;

  // kAuto emits singletons exactly when high-precision pruning is on.
  bool emits_singletons(double q) const;
};

struct ModelConfig {
  EncoderConfig encoder;
  DetectorConfig detector;
  LinkerConfig linker;

  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
// Missing keys keep their defaults; unknown keys raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

struct ModelWeights {
  EncoderWeights encoder;
  MentionScorerWeights mention;
  LinkerWeights linker;

  static ModelWeights zeros(const ModelConfig& config);

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    EncoderWeights::visit(self.encoder, fn);
    MentionScorerWeights::visit(self.mention, fn);
    LinkerWeights::visit(self.linker, fn);
  }
};

// Which parameter group a tensor name belongs to.
enum class Component { kEncoder, kMentionDetector, kAntecedentLinker };
Component component_of(const std::string& tensor_name);

struct DetectorOutput {
  CandidateSet candidates;
  MentionScores scores;
  PrunedCandidates pruned;  // c2f, then the q filter when q > 0
  std::vector<Span> kept_spans;
};

struct Prediction {
  ClusterSet clusters;
  std::vector<Span> kept_spans;
};

struct LossTargets {
  const ClusterSet* clusters = nullptr;        // enables CL
  const MentionAnnotation* mentions = nullptr;  // enables MD
  const MaskingPlan* mlm = nullptr;            // enables MLM
};

struct LossBreakdown {
  double cl = 0.0;
  double md = 0.0;
  double mlm = 0.0;
  std::size_t skipped_gold = 0;

  double total() const { return cl + md + mlm; }
};

class CorefModel {
 public:
  CorefModel() = default;
  CorefModel(ModelConfig config, Vocabulary vocab, ModelWeights weights);

  // Xavier-initialized weights sized to the vocabulary.
  static CorefModel initialize(ModelConfig config, Vocabulary vocab,
                               std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ModelWeights& weights() const { return weights_; }
  ModelWeights& mutable_weights() { return weights_; }

  // Mention scoring and pruning with `q` in place of the configured threshold.
  DetectorOutput detect(const Document& doc, double q) const;
  DetectorOutput detect(const Document& doc) const {
    return detect(doc, config_.detector.q);
  }

  Prediction predict(const Document& doc) const;

  // Sum of the enabled losses on one document. The coreference loss ranks
  // antecedents among the c2f survivors; q applies only at prediction time.
  // Gradients are accumulated into `grads` when non-null.
  LossBreakdown loss(const Document& doc, const LossTargets& targets,
                     ModelWeights* grads) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ModelWeights weights_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Hash of the canonical JSON form of a model configuration.
std::string config_hash(const ModelConfig& config);

void save_checkpoint(const CorefModel& model, const std::filesystem::path& path);
// Throws FormatError on a bad magic, version, or truncated payload.
CorefModel load_checkpoint(const std::filesystem::path& path);

}  // namespace coref
