#include "qreform/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qreform/checkpoint.h"
#include "qreform/decoder.h"
#include "qreform/errors.h"

namespace qreform {

void TrainConfig::validate() const {
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(clip_threshold > 0.0, "clip_threshold must be positive");
  require(init_range >= 0.0, "init_range must be non-negative");
  require(max_steps >= 0, "max_steps must be non-negative");
  require(validation_interval >= 1, "validation_interval must be >= 1");
}

AdamState AdamState::zeros(const ParamSet& params) {
  AdamState s;
  s.first_moment = zero_gradients(params);
  s.second_moment = zero_gradients(params);
  return s;
}

std::vector<EncodedPair> encode_pairs(const Alphabet& alphabet,
                                      const std::vector<TrainingPair>& pairs) {
  std::vector<EncodedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    EncodedPair e{encode(alphabet, p.source), encode_with_eos(alphabet, p.target)};
    if (e.source.empty()) continue;
    out.push_back(std::move(e));
  }
  return out;
}

void init_params(Model& model, std::uint64_t seed, double range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-range, range);
  for (Parameter& p : model.params()) {
    if (p.is_bias) {
      p.value.setZero();
      continue;
    }
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
  }
}

double clip_global_norm(Gradients& grads, double threshold) {
  require(threshold > 0.0, "clip_global_norm: threshold must be positive");
  const double norm = global_norm(grads);
  if (!std::isfinite(norm)) throw NumericError("clip_global_norm: non-finite gradient norm");
  if (norm > threshold) {
    const double factor = threshold / norm;
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

void adam_update(ParamSet& params, const Gradients& grads, AdamState& state,
                 double learning_rate) {
  require(static_cast<int>(grads.size()) == params.size() &&
              static_cast<int>(state.first_moment.size()) == params.size() &&
              static_cast<int>(state.second_moment.size()) == params.size(),
          "adam_update: parameter, gradient and moment counts differ");
  for (int i = 0; i < params.size(); ++i) {
    const Matrix& g = grads[static_cast<std::size_t>(i)];
    require(g.rows() == params.value(i).rows() && g.cols() == params.value(i).cols(),
            "adam_update: gradient shape mismatch for '" + params[i].path + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (int i = 0; i < params.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const auto g = grads[idx].array();
    auto m = state.first_moment[idx].array();
    auto v = state.second_moment[idx].array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    params.value(i).array() -=
        learning_rate * (m / correction1) / ((v / correction2).sqrt() + state.epsilon);
  }
}

namespace {

void split_batch(std::span<const EncodedPair> batch, std::vector<CharSequence>& sources,
                 std::vector<CharSequence>& targets) {
  sources.clear();
  targets.clear();
  for (const auto& p : batch) {
    sources.push_back(p.source);
    targets.push_back(p.target);
  }
}

}  // namespace

double mean_loss(const Model& model, std::span<const EncodedPair> pairs, int batch_size) {
  require(!pairs.empty(), "mean_loss: empty pair set");
  require(batch_size >= 1, "mean_loss: batch_size must be >= 1");
  double total = 0.0;
  long symbols = 0;
  std::vector<CharSequence> sources, targets;
  for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t n = std::min(pairs.size() - start, static_cast<std::size_t>(batch_size));
    split_batch(pairs.subspan(start, n), sources, targets);
    ad::Tape tape(false);
    BatchLoss loss = teacher_forced_nll(tape, model, sources, targets);
    total += loss.total_nll.scalar();
    symbols += loss.target_symbols;
  }
  return total / static_cast<double>(symbols);
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model),
      config_(config),
      adam_(AdamState::zeros(model.params())),
      rng_(config.seed) {
  config_.validate();
}

double Trainer::train_step(std::span<const EncodedPair> batch) {
  require(!batch.empty(), "train_step: empty batch");
  std::vector<CharSequence> sources, targets;
  split_batch(batch, sources, targets);
  ad::Tape tape;
  BatchLoss nll = teacher_forced_nll(tape, model_, sources, targets);
  ad::Var loss = ad::scale(nll.total_nll, 1.0 / nll.target_symbols);
  tape.backward(loss);
  Gradients grads = tape.gradients(model_.params());
  last_grad_norm_ = clip_global_norm(grads, config_.clip_threshold);
  adam_update(model_.params(), grads, adam_, config_.learning_rate);
  return loss.scalar();
}

double Trainer::validate(std::span<const EncodedPair> validation) const {
  return mean_loss(model_, validation, config_.batch_size);
}

std::vector<std::vector<std::size_t>> Trainer::make_epoch(
    const std::vector<EncodedPair>& train) {
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  // Length bucketing inside windows of several batches keeps padding low
  // while the window shuffle keeps batches varied.
  const std::size_t batch = static_cast<std::size_t>(config_.batch_size);
  const std::size_t window = batch * 16;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += window) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(start + window, order.size()));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return train[a].target.size() < train[b].target.size();
    });
    for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(batch)) {
      const auto end = std::min(it + static_cast<std::ptrdiff_t>(batch), last);
      batches.emplace_back(it, end);
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng_);
  return batches;
}

ValidationCurve Trainer::fit(const std::vector<EncodedPair>& train,
                             const std::vector<EncodedPair>& validation,
                             const std::function<void(std::int64_t, double)>& on_step) {
  require(!train.empty(), "fit: empty training set");
  ValidationCurve curve;
  std::vector<std::vector<std::size_t>> epoch;
  std::size_t cursor = 0;
  std::vector<EncodedPair> batch;
  for (int step = 1; step <= config_.max_steps; ++step) {
    if (cursor >= epoch.size()) {
      epoch = make_epoch(train);
      cursor = 0;
    }
    batch.clear();
    for (std::size_t idx : epoch[cursor]) batch.push_back(train[idx]);
    ++cursor;
    const double loss = train_step(batch);
    if (on_step) on_step(step, loss);
    const bool last = step == config_.max_steps;
    if (!validation.empty() && (step % config_.validation_interval == 0 || last))
      curve.push_back(ValidationPoint{step, validate(validation)});
  }
  return curve;
}

void save_checkpoint(const std::string& path, const Model& model, const AdamState* adam) {
  Checkpoint ckpt;
  ckpt.meta = model.config().to_meta();
  ckpt.meta["alphabet"] = utf8_encode(model.alphabet().symbols());
  for (const Parameter& p : model.params()) ckpt.tensors.emplace_back("param/" + p.path, p.value);
  if (adam != nullptr) {
    ckpt.meta["adam.step"] = std::to_string(adam->step);
    Matrix hyper(1, 3);
    hyper << adam->beta1, adam->beta2, adam->epsilon;
    ckpt.tensors.emplace_back("adam/hyper", hyper);
    int i = 0;
    for (const Parameter& p : model.params()) {
      const auto idx = static_cast<std::size_t>(i++);
      ckpt.tensors.emplace_back("adam/m/" + p.path, adam->first_moment[idx]);
      ckpt.tensors.emplace_back("adam/v/" + p.path, adam->second_moment[idx]);
    }
  }
  ckpt.save(path);
}

Model load_checkpoint(const std::string& path, AdamState* adam) {
  const Checkpoint ckpt = Checkpoint::load(path);
  auto alphabet_it = ckpt.meta.find("alphabet");
  if (alphabet_it == ckpt.meta.end()) throw DataError("checkpoint has no alphabet");
  Model model(Alphabet(utf8_decode(alphabet_it->second)), ModelConfig::from_meta(ckpt.meta));
  auto fetch = [&](const std::string& name, const Matrix& like) -> const Matrix& {
    const Matrix* m = ckpt.find(name);
    if (m == nullptr) throw DataError("checkpoint is missing tensor '" + name + "'");
    if (m->rows() != like.rows() || m->cols() != like.cols())
      throw DataError("checkpoint tensor '" + name + "' has the wrong shape");
    return *m;
  };
  for (Parameter& p : model.params()) p.value = fetch("param/" + p.path, p.value);
  if (adam != nullptr) {
    *adam = AdamState::zeros(model.params());
    auto step_it = ckpt.meta.find("adam.step");
    if (step_it == ckpt.meta.end()) throw DataError("checkpoint has no optimizer state");
    adam->step = std::stoll(step_it->second);
    const Matrix& hyper = fetch("adam/hyper", Matrix::Zero(1, 3));
    adam->beta1 = hyper(0, 0);
    adam->beta2 = hyper(0, 1);
    adam->epsilon = hyper(0, 2);
    int i = 0;
    for (const Parameter& p : model.params()) {
      const auto idx = static_cast<std::size_t>(i++);
      adam->first_moment[idx] = fetch("adam/m/" + p.path, p.value);
      adam->second_moment[idx] = fetch("adam/v/" + p.path, p.value);
    }
  }
  return model;
}

}  // namespace qreform
