#ifndef QREFORM_TENSOR_H_
#define QREFORM_TENSOR_H_

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qreform {

// All tensors in the model are at most two-dimensional; vectors are 1 x n.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ParamId = int;

struct Parameter {
  std::string path;
  Matrix value;
  bool is_bias = false;
};

// Owns every learnable tensor of a model, addressed by a stable ParamId and a
// slash-separated path used in checkpoints. Never resized after the model is
// built, so references handed to a Tape stay valid.
class ParamSet {
 public:
  ParamId add(std::string path, Eigen::Index rows, Eigen::Index cols,
              bool is_bias = false);

  Parameter& operator[](ParamId id) { return params_.at(id); }
  const Parameter& operator[](ParamId id) const { return params_.at(id); }
  Matrix& value(ParamId id) { return params_.at(id).value; }
  const Matrix& value(ParamId id) const { return params_.at(id).value; }

  std::optional<ParamId> find(std::string_view path) const;
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
};

// One gradient matrix per parameter, aligned with ParamSet ids.
using Gradients = std::vector<Matrix>;

Gradients zero_gradients(const ParamSet& params);
double global_norm(const Gradients& grads);

}  // namespace qreform

#endif  // QREFORM_TENSOR_H_
