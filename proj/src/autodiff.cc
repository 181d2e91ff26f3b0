#include "qreform/autodiff.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "qreform/errors.h"

namespace qreform::ad {

const Matrix& Var::value() const {
  require(valid(), "use of an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar() on a non 1x1 node");
  return v(0, 0);
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.external != nullptr ? *n.external : n.value;
}

Matrix& Tape::grad_acc(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const Matrix& v = n.external != nullptr ? *n.external : n.value;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NumericError("constant: non-finite value");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(const ParamSet& params, ParamId id) {
  require(id >= 0 && id < params.size(), "param: id out of range");
  if (param_nodes_.size() < static_cast<std::size_t>(params.size()))
    param_nodes_.resize(static_cast<std::size_t>(params.size()), -1);
  int& slot = param_nodes_[static_cast<std::size_t>(id)];
  if (slot >= 0) return Var(this, slot);
  Node n;
  n.external = &params.value(id);
  n.needs_grad = record_;
  n.param = id;
  nodes_.push_back(std::move(n));
  slot = static_cast<int>(nodes_.size() - 1);
  return Var(this, slot);
}

Var Tape::record(std::string_view op, Matrix value, std::span<const Var> inputs,
                 BackwardFn backward) {
  const int self = static_cast<int>(nodes_.size());
  Node n;
  bool needs = false;
  for (const Var& in : inputs) {
    require(in.tape() == this, std::string(op) + ": inputs on a different tape");
    require(in.id() >= 0 && in.id() < self,
            std::string(op) + ": input does not precede its consumer");
    needs = needs || nodes_[static_cast<std::size_t>(in.id())].needs_grad;
  }
  if (!value.allFinite())
    throw NumericError(std::string(op) + ": non-finite value");
  n.value = std::move(value);
  n.needs_grad = record_ && needs;
  if (n.needs_grad) {
    n.backward = std::move(backward);
    n.inputs.reserve(inputs.size());
    for (const Var& in : inputs) n.inputs.push_back(in.id());
  }
  nodes_.push_back(std::move(n));
  return Var(this, self);
}

void Tape::backward(Var loss) {
  require(loss.tape() == this, "backward: loss on a different tape");
  require(!backward_done_, "backward: tape already differentiated");
  const Matrix& lv = value(loss.id());
  require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be scalar");
  backward_done_ = true;
  if (!nodes_[static_cast<std::size_t>(loss.id())].needs_grad) return;
  grad_acc(loss.id())(0, 0) += 1.0;
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
    if (!n.grad.allFinite()) throw NumericError("backward: non-finite gradient");
  }
}

Gradients Tape::gradients(const ParamSet& params) const {
  Gradients grads = zero_gradients(params);
  for (std::size_t id = 0; id < param_nodes_.size(); ++id) {
    const int node = param_nodes_[id];
    if (node < 0) continue;
    const Matrix& g = nodes_[static_cast<std::size_t>(node)].grad;
    if (g.size() != 0) grads[id] = g;
  }
  return grads;
}

namespace {

Tape& tape_of(Var a) {
  require(a.valid(), "operation on an unbound Var");
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
              "x" + std::to_string(a.cols()) + " vs " +
              std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  const int ia = a.id(), ib = b.id();
  const Var ins[] = {a, b};
  return t.record("matmul", std::move(out), ins, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_acc(ia).noalias() += g * t.value(ib).transpose();
    if (t.needs_grad(ib)) t.grad_acc(ib).noalias() += t.value(ia).transpose() * g;
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value() + b.value();
  const int ia = a.id(), ib = b.id();
  const Var ins[] = {a, b};
  return t.record("add", std::move(out), ins, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_acc(ia) += g;
    if (t.needs_grad(ib)) t.grad_acc(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value() - b.value();
  const int ia = a.id(), ib = b.id();
  const Var ins[] = {a, b};
  return t.record("sub", std::move(out), ins, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_acc(ia) += g;
    if (t.needs_grad(ib)) t.grad_acc(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value().cwiseProduct(b.value());
  const int ia = a.id(), ib = b.id();
  const Var ins[] = {a, b};
  return t.record("mul", std::move(out), ins, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_acc(ia) += g.cwiseProduct(t.value(ib));
    if (t.needs_grad(ib)) t.grad_acc(ib) += g.cwiseProduct(t.value(ia));
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  Matrix out = a.value() * factor;
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("scale", std::move(out), ins, [ia, factor](Tape& t, int self) {
    t.grad_acc(ia) += t.grad(self) * factor;
  });
}

Var one_minus(Var a) {
  Tape& t = tape_of(a);
  Matrix out = (1.0 - a.value().array()).matrix();
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("one_minus", std::move(out), ins, [ia](Tape& t, int self) {
    t.grad_acc(ia) -= t.grad(self);
  });
}

Var add_bias(Var a, Var bias) {
  Tape& t = tape_of(a);
  const Matrix& bv = bias.value();
  require(bv.rows() == 1 && bv.cols() == a.cols(), "add_bias: bias shape mismatch");
  Matrix out = a.value().rowwise() + bv.row(0);
  const int ia = a.id(), ib = bias.id();
  const Var ins[] = {a, bias};
  return t.record("add_bias", std::move(out), ins, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad_acc(ia) += g;
    if (t.needs_grad(ib)) t.grad_acc(ib) += g.colwise().sum();
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("sigmoid", std::move(out), ins, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.grad_acc(ia).array() += t.grad(self).array() * y * (1.0 - y);
  });
}

Var tanh(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().array().tanh().matrix();
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("tanh", std::move(out), ins, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.grad_acc(ia).array() += t.grad(self).array() * (1.0 - y.square());
  });
}

Var relu(Var a) {
  Tape& t = tape_of(a);
  Matrix out = a.value().cwiseMax(0.0);
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("relu", std::move(out), ins, [ia](Tape& t, int self) {
    const auto x = t.value(ia).array();
    t.grad_acc(ia).array() +=
        (x > 0.0).select(t.grad(self).array(), 0.0);
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("sum", std::move(out), ins, [ia](Tape& t, int self) {
    t.grad_acc(ia).array() += t.grad(self)(0, 0);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    layout.emplace_back(p.id(), c);
    c += p.cols();
  }
  return t.record("concat_cols", std::move(out), parts,
                  [layout = std::move(layout)](Tape& t, int self) {
                    const Matrix& g = t.grad(self);
                    for (const auto& [id, offset] : layout) {
                      if (!t.needs_grad(id)) continue;
                      Matrix& acc = t.grad_acc(id);
                      acc += g.middleCols(offset, acc.cols());
                    }
                  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    layout.emplace_back(p.id(), r);
    r += p.rows();
  }
  return t.record("concat_rows", std::move(out), parts,
                  [layout = std::move(layout)](Tape& t, int self) {
                    const Matrix& g = t.grad(self);
                    for (const auto& [id, offset] : layout) {
                      if (!t.needs_grad(id)) continue;
                      Matrix& acc = t.grad_acc(id);
                      acc += g.middleRows(offset, acc.rows());
                    }
                  });
}

Var slice_cols(Var a, int begin, int count) {
  Tape& t = tape_of(a);
  require(begin >= 0 && count > 0 && begin + count <= a.cols(),
          "slice_cols: range out of bounds");
  Matrix out = a.value().middleCols(begin, count);
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("slice_cols", std::move(out), ins,
                  [ia, begin, count](Tape& t, int self) {
                    t.grad_acc(ia).middleCols(begin, count) += t.grad(self);
                  });
}

Var gather_rows(Var table, std::span<const int> rows) {
  Tape& t = tape_of(table);
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    require(r >= -1 && r < tv.rows(), "gather_rows: row index out of range");
    if (r < 0)
      out.row(static_cast<Eigen::Index>(i)).setZero();
    else
      out.row(static_cast<Eigen::Index>(i)) = tv.row(r);
  }
  const int it = table.id();
  const Var ins[] = {table};
  return t.record("gather_rows", std::move(out), ins,
                  [it, idx = std::vector<int>(rows.begin(), rows.end())](
                      Tape& t, int self) {
                    const Matrix& g = t.grad(self);
                    Matrix& acc = t.grad_acc(it);
                    for (std::size_t i = 0; i < idx.size(); ++i)
                      if (idx[i] >= 0)
                        acc.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
                  });
}

Var blend_rows(std::span<const double> mask, Var a, Var b) {
  Tape& t = tape_of(a);
  require_same_shape(a.value(), b.value(), "blend_rows");
  require(static_cast<Eigen::Index>(mask.size()) == a.rows(),
          "blend_rows: mask length mismatch");
  Eigen::Map<const Eigen::VectorXd> m(mask.data(),
                                      static_cast<Eigen::Index>(mask.size()));
  Matrix out = (a.value().array().colwise() * m.array() +
                b.value().array().colwise() * (1.0 - m.array()))
                   .matrix();
  const int ia = a.id(), ib = b.id();
  const Var ins[] = {a, b};
  return t.record(
      "blend_rows", std::move(out), ins,
      [ia, ib, mv = Eigen::VectorXd(m)](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(ia))
          t.grad_acc(ia).array() += g.array().colwise() * mv.array();
        if (t.needs_grad(ib))
          t.grad_acc(ib).array() += g.array().colwise() * (1.0 - mv.array());
      });
}

namespace {

Matrix row_softmax(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    out.row(i) = (x.row(i).array() - mx).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  Matrix out = row_softmax(a.value());
  const int ia = a.id();
  const Var ins[] = {a};
  return t.record("softmax_rows", std::move(out), ins, [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    t.grad_acc(ia).array() +=
        y.array() * (g.array().colwise() - dots.array());
  });
}

Var cross_entropy(Var probs, std::span<const int> targets) {
  Tape& t = tape_of(probs);
  const Matrix& p = probs.value();
  require(static_cast<Eigen::Index>(targets.size()) == p.rows(),
          "cross_entropy: one target per row required");
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i] >= 0 && targets[i] < p.cols(),
            "cross_entropy: target id out of range");
    out(0, 0) -= std::log(p(static_cast<Eigen::Index>(i), targets[i]));
  }
  const int ip = probs.id();
  const Var ins[] = {probs};
  return t.record("cross_entropy", std::move(out), ins,
                  [ip, tg = std::vector<int>(targets.begin(), targets.end())](
                      Tape& t, int self) {
                    const double g = t.grad(self)(0, 0);
                    const Matrix& p = t.value(ip);
                    Matrix& acc = t.grad_acc(ip);
                    for (std::size_t i = 0; i < tg.size(); ++i) {
                      const auto r = static_cast<Eigen::Index>(i);
                      acc(r, tg[i]) -= g / p(r, tg[i]);
                    }
                  });
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets,
                          std::span<const double> weights) {
  Tape& t = tape_of(logits);
  const Matrix& z = logits.value();
  require(static_cast<Eigen::Index>(targets.size()) == z.rows() &&
              targets.size() == weights.size(),
          "softmax_cross_entropy: one target and weight per row required");
  auto probs = std::make_shared<Matrix>(row_softmax(z));
  Matrix out = Matrix::Zero(1, 1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto r = static_cast<Eigen::Index>(i);
    require(targets[i] >= 0 && targets[i] < z.cols(),
            "softmax_cross_entropy: target id out of range");
    const double mx = z.row(r).maxCoeff();
    const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    out(0, 0) += weights[i] * (lse - z(r, targets[i]));
  }
  const int iz = logits.id();
  const Var ins[] = {logits};
  return t.record(
      "softmax_cross_entropy", std::move(out), ins,
      [iz, probs, tg = std::vector<int>(targets.begin(), targets.end()),
       w = std::vector<double>(weights.begin(), weights.end())](Tape& t,
                                                                  int self) {
        const double g = t.grad(self)(0, 0);
        Matrix& acc = t.grad_acc(iz);
        for (std::size_t i = 0; i < tg.size(); ++i) {
          if (w[i] == 0.0) continue;
          const auto r = static_cast<Eigen::Index>(i);
          acc.row(r) += (g * w[i]) * probs->row(r);
          acc(r, tg[i]) -= g * w[i];
        }
      });
}

Var conv1d(Var input, std::span<const Segment> segments, Var weights, Var bias,
           int width) {
  require(width >= 1, "conv1d: width must be >= 1");
  Tape& t = tape_of(input);
  const Matrix& x = input.value();
  const Eigen::Index in = x.cols();
  const Matrix& w = weights.value();
  require(w.rows() == width * in, "conv1d: weight rows must be width * in_channels");
  require(bias.rows() == 1 && bias.cols() == w.cols(), "conv1d: bias shape mismatch");
  const int left = (width - 1) / 2;

  auto cols = std::make_shared<Matrix>(Matrix::Zero(x.rows(), width * in));
  for (const Segment& s : segments) {
    require(s.offset >= 0 && s.length >= 1 && s.offset + s.length <= x.rows(),
            "conv1d: segment out of range");
    for (int p = 0; p < s.length; ++p)
      for (int k = 0; k < width; ++k) {
        const int src = p - left + k;
        if (src < 0 || src >= s.length) continue;
        cols->block(s.offset + p, k * in, 1, in) = x.row(s.offset + src);
      }
  }
  Matrix out(x.rows(), w.cols());
  out.noalias() = *cols * w;
  out.rowwise() += bias.value().row(0);

  const int ix = input.id(), iw = weights.id(), ib = bias.id();
  const Var ins[] = {input, weights, bias};
  return t.record(
      "conv1d", std::move(out), ins,
      [ix, iw, ib, cols, left, width, in,
       segs = std::vector<Segment>(segments.begin(), segments.end())](
          Tape& t, int self) {
        const Matrix& g = t.grad(self);
        if (t.needs_grad(iw)) t.grad_acc(iw).noalias() += cols->transpose() * g;
        if (t.needs_grad(ib)) t.grad_acc(ib) += g.colwise().sum();
        if (!t.needs_grad(ix)) return;
        Matrix gcols(g.rows(), width * in);
        gcols.noalias() = g * t.value(iw).transpose();
        Matrix& gx = t.grad_acc(ix);
        for (const Segment& s : segs)
          for (int p = 0; p < s.length; ++p)
            for (int k = 0; k < width; ++k) {
              const int src = p - left + k;
              if (src < 0 || src >= s.length) continue;
              gx.row(s.offset + src) += gcols.block(s.offset + p, k * in, 1, in);
            }
      });
}

std::vector<Segment> pooled_segments(std::span<const Segment> segments,
                                     int stride) {
  require(stride >= 1, "segment_maxpool: stride must be >= 1");
  std::vector<Segment> out;
  out.reserve(segments.size());
  int offset = 0;
  for (const Segment& s : segments) {
    const int n = (s.length + stride - 1) / stride;
    out.push_back(Segment{offset, n});
    offset += n;
  }
  return out;
}

Var segment_maxpool(Var input, std::span<const Segment> segments, int stride) {
  Tape& t = tape_of(input);
  const Matrix& x = input.value();
  const std::vector<Segment> pooled = pooled_segments(segments, stride);
  const int out_rows = pooled.empty() ? 0 : pooled.back().offset + pooled.back().length;
  Matrix out(out_rows, x.cols());
  std::vector<int> argmax(static_cast<std::size_t>(out_rows * x.cols()));
  for (std::size_t si = 0; si < segments.size(); ++si) {
    const Segment& s = segments[si];
    require(s.offset >= 0 && s.length >= 1 && s.offset + s.length <= x.rows(),
            "segment_maxpool: segment out of range");
    for (int w = 0; w < pooled[si].length; ++w) {
      const int row = pooled[si].offset + w;
      const int lo = s.offset + w * stride;
      const int hi = s.offset + std::min((w + 1) * stride, s.length);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        int best = lo;
        for (int r = lo + 1; r < hi; ++r)
          if (x(r, c) > x(best, c)) best = r;
        out(row, c) = x(best, c);
        argmax[static_cast<std::size_t>(row * x.cols() + c)] = best;
      }
    }
  }
  const int ix = input.id();
  const Var ins[] = {input};
  return t.record("segment_maxpool", std::move(out), ins,
                  [ix, argmax = std::move(argmax)](Tape& t, int self) {
                    const Matrix& g = t.grad(self);
                    Matrix& gx = t.grad_acc(ix);
                    for (Eigen::Index r = 0; r < g.rows(); ++r)
                      for (Eigen::Index c = 0; c < g.cols(); ++c)
                        gx(argmax[static_cast<std::size_t>(r * g.cols() + c)], c) +=
                            g(r, c);
                  });
}

AttentionResult attention(Var keys, Var values, Var query, Var score_vector,
                          std::span<const Segment> row_segments) {
  Tape& t = tape_of(keys);
  const Matrix& k = keys.value();
  const Matrix& h = values.value();
  const Matrix& q = query.value();
  const Matrix& v = score_vector.value();
  const Eigen::Index dim = k.cols();
  require(h.rows() == k.rows(), "attention: keys and values differ in length");
  require(q.cols() == dim && v.rows() == dim && v.cols() == 1,
          "attention: projection dimensions mismatch");
  require(static_cast<Eigen::Index>(row_segments.size()) == q.rows(),
          "attention: one memory segment per query row required");

  int total = 0;
  for (const Segment& s : row_segments) {
    require(s.length >= 1 && s.offset >= 0 && s.offset + s.length <= k.rows(),
            "attention: empty or out-of-range memory segment");
    total += s.length;
  }
  // Hidden activations tanh(keys + query), one row per (query row, position).
  auto hidden = std::make_shared<Matrix>(total, dim);
  AttentionResult result;
  result.weights.resize(row_segments.size());
  Matrix context = Matrix::Zero(q.rows(), h.cols());
  int cursor = 0;
  for (std::size_t b = 0; b < row_segments.size(); ++b) {
    const Segment& s = row_segments[b];
    const auto br = static_cast<Eigen::Index>(b);
    auto e = hidden->middleRows(cursor, s.length);
    e = (k.middleRows(s.offset, s.length).rowwise() + q.row(br)).array().tanh().matrix();
    Eigen::VectorXd scores = e * v;
    scores = (scores.array() - scores.maxCoeff()).exp().matrix();
    scores /= scores.sum();
    result.weights[b].assign(scores.data(), scores.data() + scores.size());
    context.row(br) = scores.transpose() * h.middleRows(s.offset, s.length);
    cursor += s.length;
  }

  const int ik = keys.id(), ih = values.id(), iq = query.id(), iv = score_vector.id();
  const Var ins[] = {keys, values, query, score_vector};
  result.context = t.record(
      "attention", std::move(context), ins,
      [ik, ih, iq, iv, hidden, alphas = result.weights,
       segs = std::vector<Segment>(row_segments.begin(), row_segments.end())](
          Tape& t, int self) {
        const Matrix& g = t.grad(self);
        const Matrix& h = t.value(ih);
        const Matrix& v = t.value(iv);
        const bool need_k = t.needs_grad(ik), need_h = t.needs_grad(ih);
        const bool need_q = t.needs_grad(iq), need_v = t.needs_grad(iv);
        int cursor = 0;
        for (std::size_t b = 0; b < segs.size(); ++b) {
          const Segment& s = segs[b];
          const auto br = static_cast<Eigen::Index>(b);
          const auto n = static_cast<Eigen::Index>(s.length);
          Eigen::Map<const Eigen::VectorXd> alpha(alphas[b].data(), n);
          const auto e = hidden->middleRows(cursor, s.length);
          // d context / d alpha_t = g_b . h_t
          const Eigen::VectorXd dalpha = h.middleRows(s.offset, s.length) * g.row(br).transpose();
          if (need_h)
            t.grad_acc(ih).middleRows(s.offset, s.length).noalias() +=
                alpha * g.row(br);
          const double mean = alpha.dot(dalpha);
          const Eigen::VectorXd dscore =
              (alpha.array() * (dalpha.array() - mean)).matrix();
          if (need_v) t.grad_acc(iv).noalias() += e.transpose() * dscore;
          if (need_k || need_q) {
            const Matrix dpre =
                ((dscore * v.transpose()).array() * (1.0 - e.array().square())).matrix();
            if (need_k) t.grad_acc(ik).middleRows(s.offset, s.length) += dpre;
            if (need_q) t.grad_acc(iq).row(br) += dpre.colwise().sum();
          }
          cursor += s.length;
        }
      });
  return result;
}

}  // namespace qreform::ad
