#ifndef QREFORM_TRAINER_H_
#define QREFORM_TRAINER_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qreform/anchor_corpus.h"
#include "qreform/model.h"
#include "qreform/text_codec.h"

namespace qreform {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  double clip_threshold = 1.0;
  double init_range = 0.01;
  int max_steps = 1000;
  int validation_interval = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

struct AdamState {
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(const ParamSet& params);
};

struct ValidationPoint {
  std::int64_t step = 0;
  double loss = 0.0;
};
using ValidationCurve = std::vector<ValidationPoint>;

// Source ids and EOS-terminated target ids of one pair.
struct EncodedPair {
  CharSequence source;
  CharSequence target;
};

// Drops pairs whose source encodes to nothing.
std::vector<EncodedPair> encode_pairs(const Alphabet& alphabet,
                                      const std::vector<TrainingPair>& pairs);

// Weights ~ U[-range, range] from a seeded generator, biases zero.
void init_params(Model& model, std::uint64_t seed, double range);

// Rescales all gradients by threshold / norm when the global L2 norm exceeds
// the threshold. Returns the pre-clip norm.
double clip_global_norm(Gradients& grads, double threshold);

// Bias-corrected Adam step.
void adam_update(ParamSet& params, const Gradients& grads, AdamState& state,
                 double learning_rate);

// Per-character negative log-likelihood: total NLL / total target symbols.
double mean_loss(const Model& model, std::span<const EncodedPair> pairs, int batch_size = 64);

class Trainer {
 public:
  Trainer(Model& model, TrainConfig config);

  // One optimisation step; returns the loss before the update. A numeric
  // failure throws and leaves parameters and optimizer state untouched.
  double train_step(std::span<const EncodedPair> batch);

  double validate(std::span<const EncodedPair> validation) const;

  // Runs config.max_steps steps over shuffled, length-bucketed batches.
  // Validation loss is recorded every validation_interval steps and after
  // the final step.
  ValidationCurve fit(const std::vector<EncodedPair>& train,
                      const std::vector<EncodedPair>& validation,
                      const std::function<void(std::int64_t step, double loss)>& on_step = {});

  const AdamState& adam() const { return adam_; }
  AdamState& adam() { return adam_; }
  const TrainConfig& config() const { return config_; }
  double last_grad_norm() const { return last_grad_norm_; }

 private:
  std::vector<std::vector<std::size_t>> make_epoch(const std::vector<EncodedPair>& train);

  Model& model_;
  TrainConfig config_;
  AdamState adam_;
  std::mt19937_64 rng_;
  double last_grad_norm_ = 0.0;
};

// Checkpoint = model config, alphabet, parameters and (optionally) Adam state.
void save_checkpoint(const std::string& path, const Model& model, const AdamState* adam);
Model load_checkpoint(const std::string& path, AdamState* adam = nullptr);

}  // namespace qreform

#endif  // QREFORM_TRAINER_H_
