#include "qreform/tensor.h"

#include <cmath>

#include "qreform/errors.h"

namespace qreform {

ParamId ParamSet::add(std::string path, Eigen::Index rows, Eigen::Index cols,
                      bool is_bias) {
  require(rows > 0 && cols > 0, "parameter '" + path + "' has empty shape");
  require(!find(path).has_value(), "duplicate parameter path '" + path + "'");
  params_.push_back(Parameter{std::move(path), Matrix::Zero(rows, cols), is_bias});
  return static_cast<ParamId>(params_.size() - 1);
}

std::optional<ParamId> ParamSet::find(std::string_view path) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].path == path) return static_cast<ParamId>(i);
  return std::nullopt;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Gradients zero_gradients(const ParamSet& params) {
  Gradients grads;
  grads.reserve(params.size());
  for (const auto& p : params)
    grads.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return grads;
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace qreform
