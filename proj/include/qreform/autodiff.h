#ifndef QREFORM_AUTODIFF_H_
#define QREFORM_AUTODIFF_H_

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "qreform/tensor.h"

namespace qreform::ad {

// A contiguous run of rows [offset, offset + length) inside a packed matrix.
// Variable-length sequences are stored back to back and addressed this way.
struct Segment {
  int offset = 0;
  int length = 0;
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the Tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Append-only record of executed operations. Every node's inputs precede it,
// so walking the node list backwards is a reverse topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  // With record_backward = false, values are computed but no gradient rules
  // are kept (inference).
  explicit Tape(bool record_backward = true) : record_(record_backward) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Binds a parameter as a leaf. Repeated binds of one id return the same node.
  Var param(const ParamSet& params, ParamId id);

  // Reverse sweep from a 1x1 node. May be called once per tape.
  void backward(Var loss);
  Gradients gradients(const ParamSet& params) const;

  const Matrix& value(int id) const;
  const Matrix& grad(int id) const { return nodes_.at(id).grad; }
  // Gradient accumulator of node `id`, zero-initialised on first touch.
  Matrix& grad_acc(int id);
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Op plumbing: validates finiteness and appends a node.
  Var record(std::string_view op, Matrix value, std::span<const Var> inputs,
             BackwardFn backward);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    int param = -1;
  };

  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;
  bool record_;
  bool backward_done_ = false;
};

// Elementary differentiable operations. All inputs must live on one tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var one_minus(Var a);
Var add_bias(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var sum(Var a);  // -> 1 x 1

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, int begin, int count);
// Row gather; index -1 yields a zero row. Used for embedding lookup.
Var gather_rows(Var table, std::span<const int> rows);
// Row-wise select: mask[i] * a[i] + (1 - mask[i]) * b[i].
Var blend_rows(std::span<const double> mask, Var a, Var b);

Var softmax_rows(Var a);
// -sum_i log p[i, target[i]] for rows of probabilities.
Var cross_entropy(Var probs, std::span<const int> targets);
// sum_i weight[i] * -log softmax(logits[i])[target[i]], numerically stable.
Var softmax_cross_entropy(Var logits, std::span<const int> targets,
                          std::span<const double> weights);

// Same-padded 1-D convolution applied independently to each segment of the
// packed input (rows = positions, cols = channels). `weights` has
// width * in_channels rows laid out tap-major; output keeps the row layout.
Var conv1d(Var input, std::span<const Segment> segments, Var weights, Var bias,
           int width);

std::vector<Segment> pooled_segments(std::span<const Segment> segments,
                                     int stride);
// Channel-wise max over windows of `stride` rows within each segment.
// Gradient flows to the first maximal row of each window.
Var segment_maxpool(Var input, std::span<const Segment> segments, int stride);

struct AttentionResult {
  Var context;                               // rows x value_dim
  std::vector<std::vector<double>> weights;  // per row, over its segment
};

// Additive attention. For output row b with memory segment S_b:
//   score_t = v . tanh(keys[t] + query[b]),  t in S_b
//   alpha   = softmax(score),  context[b] = sum_t alpha_t values[t]
// Segments may overlap (several rows attending to one memory).
AttentionResult attention(Var keys, Var values, Var query, Var score_vector,
                          std::span<const Segment> row_segments);

}  // namespace qreform::ad

#endif  // QREFORM_AUTODIFF_H_
