#pragma once

#include "bigg/parameter.hpp"
#include "bigg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bigg {

enum class Primitive : std::uint8_t {
  Constant,
  Param,
  Add,
  Sub,
  Mul,
  MatMul,
  Transpose,
  Reshape,
  Concat,
  GatherRows,
  ScatterAddRows,
  SegmentSoftmax,
  RowMax,
  RowSum,
  Sum,
  Sigmoid,
  Tanh,
  Relu,
  Scale,
  ScaleBy,
  RowScale,
  Dropout,
};

inline std::string_view primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Constant: return "constant";
    case Primitive::Param: return "param";
    case Primitive::Add: return "add";
    case Primitive::Sub: return "subtract";
    case Primitive::Mul: return "elementwise-multiply";
    case Primitive::MatMul: return "matrix-multiply";
    case Primitive::Transpose: return "transpose";
    case Primitive::Reshape: return "reshape";
    case Primitive::Concat: return "concatenate";
    case Primitive::GatherRows: return "gather-rows";
    case Primitive::ScatterAddRows: return "scatter-add-rows";
    case Primitive::SegmentSoftmax: return "segment-softmax";
    case Primitive::RowMax: return "row-wise-max-reduce";
    case Primitive::RowSum: return "row-wise-sum";
    case Primitive::Sum: return "sum-reduce";
    case Primitive::Sigmoid: return "sigmoid";
    case Primitive::Tanh: return "tanh";
    case Primitive::Relu: return "relu";
    case Primitive::Scale: return "scalar-scale";
    case Primitive::ScaleBy: return "scale-by-variable";
    case Primitive::RowScale: return "row-scale";
    case Primitive::Dropout: return "dropout";
  }
  return "?";
}

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// owning tape is alive.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  const Tensor<Scalar>& value() const { return tape_->node(id_).value; }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  int id() const { return id_; }
  Tape<Scalar>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class Tape {
 public:
  struct Node {
    Primitive kind = Primitive::Constant;
    std::vector<int> inputs;
    Tensor<Scalar> value;
    // gather/scatter indices, segment keys, or argmax per row
    std::vector<Index> index;
    // scatter row count, segment count, or concat axis
    Index extent = 0;
    Scalar factor = 0;
    Tensor<Scalar> mask;
    Parameter<Scalar>* param = nullptr;
    bool needs_grad = false;
  };

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  Var<Scalar> constant(Tensor<Scalar> value) {
    Node n;
    n.kind = Primitive::Constant;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var<Scalar> param(Parameter<Scalar>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var<Scalar>(this, it->second);
    Node n;
    n.kind = Primitive::Param;
    n.value = p.value;
    n.param = &p;
    n.needs_grad = grad_enabled_;
    Var<Scalar> v = push(std::move(n));
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  /// Computes the node's value from its inputs and appends it.
  Var<Scalar> record(Node n) {
    std::vector<const Tensor<Scalar>*> in;
    in.reserve(n.inputs.size());
    bool needs = false;
    for (int id : n.inputs) {
      in.push_back(&nodes_[static_cast<std::size_t>(id)].value);
      needs = needs || nodes_[static_cast<std::size_t>(id)].needs_grad;
    }
    n.value = evaluate(n, in, n.kind == Primitive::RowMax ? &n.index : nullptr);
    n.needs_grad = grad_enabled_ && needs;
    return push(std::move(n));
  }

  /// Reverse sweep from a scalar root; adds d(root)/d(param) into each
  /// reachable Parameter's grad. Unreached parameters are left untouched.
  void backward(const Var<Scalar>& root) {
    if (root.tape() != this) throw Error("backward: root does not belong to this tape");
    if (root.rows() != 1 || root.cols() != 1) {
      throw ShapeError("backward: root must be a 1x1 scalar, got " + shape_string(root.value()));
    }
    const auto n = static_cast<std::size_t>(root.id()) + 1;
    std::vector<Tensor<Scalar>> grads(n);
    std::vector<char> has(n, 0);
    grads[n - 1] = Tensor<Scalar>::Ones(1, 1);
    has[n - 1] = 1;
    for (std::size_t k = n; k-- > 0;) {
      if (!has[k]) continue;
      Node& node = nodes_[k];
      if (!node.needs_grad) continue;
      if (node.kind == Primitive::Param) {
        node.param->grad += grads[k];
        continue;
      }
      propagate(node, grads[k], grads, has);
      grads[k] = Tensor<Scalar>();
    }
  }

  /// Re-executes every recorded primitive from the leaves and returns the
  /// recomputed values, in node order.
  std::vector<Tensor<Scalar>> replay() const {
    std::vector<Tensor<Scalar>> values(nodes_.size());
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const Node& node = nodes_[k];
      if (node.kind == Primitive::Constant || node.kind == Primitive::Param) {
        values[k] = node.value;
        continue;
      }
      std::vector<const Tensor<Scalar>*> in;
      for (int id : node.inputs) in.push_back(&values[static_cast<std::size_t>(id)]);
      values[k] = evaluate(node, in, nullptr);
    }
    return values;
  }

  /// Negative-control hook for gradient checking: flips the sign of the
  /// input gradients produced by one primitive kind.
  void corrupt_backward_for_testing(Primitive kind) { corrupted_ = kind; corrupt_ = true; }

 private:
  Var<Scalar> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
  }

  static Scalar sigmoid_scalar(Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  }

  static Tensor<Scalar> evaluate(const Node& n, const std::vector<const Tensor<Scalar>*>& in,
                                 std::vector<Index>* argmax) {
    switch (n.kind) {
      case Primitive::Constant:
      case Primitive::Param:
        return n.value;
      case Primitive::Add:
        return *in[0] + *in[1];
      case Primitive::Sub:
        return *in[0] - *in[1];
      case Primitive::Mul:
        return in[0]->cwiseProduct(*in[1]);
      case Primitive::MatMul:
        return (*in[0]) * (*in[1]);
      case Primitive::Transpose:
        return in[0]->transpose();
      case Primitive::Reshape: {
        const Index rows = n.extent;
        const Index cols = in[0]->size() / rows;
        return Eigen::Map<const Tensor<Scalar>>(in[0]->data(), rows, cols);
      }
      case Primitive::Concat: {
        Index rows = 0, cols = 0;
        if (n.extent == 0) {
          cols = in[0]->cols();
          for (auto* t : in) rows += t->rows();
        } else {
          rows = in[0]->rows();
          for (auto* t : in) cols += t->cols();
        }
        Tensor<Scalar> out(rows, cols);
        Index off = 0;
        for (auto* t : in) {
          if (n.extent == 0) {
            out.middleRows(off, t->rows()) = *t;
            off += t->rows();
          } else {
            out.middleCols(off, t->cols()) = *t;
            off += t->cols();
          }
        }
        return out;
      }
      case Primitive::GatherRows: {
        Tensor<Scalar> out(static_cast<Index>(n.index.size()), in[0]->cols());
        for (std::size_t r = 0; r < n.index.size(); ++r) out.row(static_cast<Index>(r)) = in[0]->row(n.index[r]);
        return out;
      }
      case Primitive::ScatterAddRows: {
        Tensor<Scalar> out = Tensor<Scalar>::Zero(n.extent, in[0]->cols());
        for (std::size_t r = 0; r < n.index.size(); ++r) out.row(n.index[r]) += in[0]->row(static_cast<Index>(r));
        return out;
      }
      case Primitive::SegmentSoftmax: {
        const auto& x = *in[0];
        std::vector<Scalar> seg_max(static_cast<std::size_t>(n.extent), -std::numeric_limits<Scalar>::infinity());
        for (std::size_t e = 0; e < n.index.size(); ++e) {
          auto& m = seg_max[static_cast<std::size_t>(n.index[e])];
          m = std::max(m, x(static_cast<Index>(e), 0));
        }
        Tensor<Scalar> out(x.rows(), 1);
        std::vector<Scalar> seg_sum(static_cast<std::size_t>(n.extent), Scalar(0));
        for (std::size_t e = 0; e < n.index.size(); ++e) {
          const auto s = static_cast<std::size_t>(n.index[e]);
          out(static_cast<Index>(e), 0) = std::exp(x(static_cast<Index>(e), 0) - seg_max[s]);
          seg_sum[s] += out(static_cast<Index>(e), 0);
        }
        for (std::size_t e = 0; e < n.index.size(); ++e) {
          out(static_cast<Index>(e), 0) /= seg_sum[static_cast<std::size_t>(n.index[e])];
        }
        return out;
      }
      case Primitive::RowMax: {
        const auto& x = *in[0];
        Tensor<Scalar> out(x.rows(), 1);
        if (argmax) argmax->assign(static_cast<std::size_t>(x.rows()), 0);
        for (Index r = 0; r < x.rows(); ++r) {
          Index best = 0;
          for (Index c = 1; c < x.cols(); ++c) {
            if (x(r, c) > x(r, best)) best = c;
          }
          out(r, 0) = x(r, best);
          if (argmax) (*argmax)[static_cast<std::size_t>(r)] = best;
        }
        return out;
      }
      case Primitive::RowSum: {
        const auto& x = *in[0];
        Tensor<Scalar> out(x.rows(), 1);
        for (Index r = 0; r < x.rows(); ++r) {
          Scalar s = 0;
          for (Index c = 0; c < x.cols(); ++c) s += x(r, c);
          out(r, 0) = s;
        }
        return out;
      }
      case Primitive::Sum: {
        Scalar s = 0;
        const Scalar* d = in[0]->data();
        for (Index i = 0; i < in[0]->size(); ++i) s += d[i];
        Tensor<Scalar> out(1, 1);
        out(0, 0) = s;
        return out;
      }
      case Primitive::Sigmoid:
        return in[0]->unaryExpr([](Scalar v) { return sigmoid_scalar(v); });
      case Primitive::Tanh:
        return in[0]->array().tanh().matrix();
      case Primitive::Relu:
        return in[0]->cwiseMax(Scalar(0));
      case Primitive::Scale:
        return n.factor * (*in[0]);
      case Primitive::ScaleBy:
        return (*in[0])(0, 0) * (*in[1]);
      case Primitive::RowScale: {
        Tensor<Scalar> out = *in[1];
        for (Index r = 0; r < out.rows(); ++r) out.row(r) *= (*in[0])(r, 0);
        return out;
      }
      case Primitive::Dropout:
        return in[0]->cwiseProduct(n.mask) * (Scalar(1) / (Scalar(1) - n.factor));
    }
    throw Error("unknown primitive");
  }

  void accumulate(int id, const Tensor<Scalar>& g, std::vector<Tensor<Scalar>>& grads,
                  std::vector<char>& has, Scalar sign) {
    const auto k = static_cast<std::size_t>(id);
    if (!nodes_[k].needs_grad) return;
    if (!has[k]) {
      grads[k] = sign * g;
      has[k] = 1;
    } else {
      grads[k] += sign * g;
    }
  }

  void propagate(const Node& n, const Tensor<Scalar>& g, std::vector<Tensor<Scalar>>& grads,
                 std::vector<char>& has) {
    const Scalar sign = (corrupt_ && n.kind == corrupted_) ? Scalar(-1) : Scalar(1);
    auto in = [&](std::size_t i) -> const Node& { return nodes_[static_cast<std::size_t>(n.inputs[i])]; };
    auto wants = [&](std::size_t i) { return in(i).needs_grad; };
    auto acc = [&](std::size_t i, const Tensor<Scalar>& t) { accumulate(n.inputs[i], t, grads, has, sign); };

    switch (n.kind) {
      case Primitive::Constant:
      case Primitive::Param:
        return;
      case Primitive::Add:
        if (wants(0)) acc(0, g);
        if (wants(1)) acc(1, g);
        return;
      case Primitive::Sub:
        if (wants(0)) acc(0, g);
        if (wants(1)) acc(1, -g);
        return;
      case Primitive::Mul:
        if (wants(0)) acc(0, g.cwiseProduct(in(1).value));
        if (wants(1)) acc(1, g.cwiseProduct(in(0).value));
        return;
      case Primitive::MatMul:
        if (wants(0)) acc(0, g * in(1).value.transpose());
        if (wants(1)) acc(1, in(0).value.transpose() * g);
        return;
      case Primitive::Transpose:
        if (wants(0)) acc(0, g.transpose());
        return;
      case Primitive::Reshape:
        if (wants(0)) {
          acc(0, Eigen::Map<const Tensor<Scalar>>(g.data(), in(0).value.rows(), in(0).value.cols()));
        }
        return;
      case Primitive::Concat: {
        Index off = 0;
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          const auto& v = in(i).value;
          if (n.extent == 0) {
            if (wants(i)) acc(i, g.middleRows(off, v.rows()));
            off += v.rows();
          } else {
            if (wants(i)) acc(i, g.middleCols(off, v.cols()));
            off += v.cols();
          }
        }
        return;
      }
      case Primitive::GatherRows: {
        if (!wants(0)) return;
        const auto& src = in(0).value;
        Tensor<Scalar> ga = Tensor<Scalar>::Zero(src.rows(), src.cols());
        for (std::size_t r = 0; r < n.index.size(); ++r) ga.row(n.index[r]) += g.row(static_cast<Index>(r));
        acc(0, ga);
        return;
      }
      case Primitive::ScatterAddRows: {
        if (!wants(0)) return;
        Tensor<Scalar> ga(static_cast<Index>(n.index.size()), g.cols());
        for (std::size_t r = 0; r < n.index.size(); ++r) ga.row(static_cast<Index>(r)) = g.row(n.index[r]);
        acc(0, ga);
        return;
      }
      case Primitive::SegmentSoftmax: {
        if (!wants(0)) return;
        const auto& y = n.value;
        std::vector<Scalar> dot(static_cast<std::size_t>(n.extent), Scalar(0));
        for (std::size_t e = 0; e < n.index.size(); ++e) {
          dot[static_cast<std::size_t>(n.index[e])] += g(static_cast<Index>(e), 0) * y(static_cast<Index>(e), 0);
        }
        Tensor<Scalar> ga(y.rows(), 1);
        for (std::size_t e = 0; e < n.index.size(); ++e) {
          const auto r = static_cast<Index>(e);
          ga(r, 0) = y(r, 0) * (g(r, 0) - dot[static_cast<std::size_t>(n.index[e])]);
        }
        acc(0, ga);
        return;
      }
      case Primitive::RowMax: {
        if (!wants(0)) return;
        const auto& src = in(0).value;
        Tensor<Scalar> ga = Tensor<Scalar>::Zero(src.rows(), src.cols());
        for (Index r = 0; r < src.rows(); ++r) ga(r, n.index[static_cast<std::size_t>(r)]) = g(r, 0);
        acc(0, ga);
        return;
      }
      case Primitive::RowSum: {
        if (!wants(0)) return;
        const auto& src = in(0).value;
        Tensor<Scalar> ga(src.rows(), src.cols());
        for (Index r = 0; r < src.rows(); ++r) ga.row(r).setConstant(g(r, 0));
        acc(0, ga);
        return;
      }
      case Primitive::Sum: {
        if (!wants(0)) return;
        const auto& src = in(0).value;
        acc(0, Tensor<Scalar>::Constant(src.rows(), src.cols(), g(0, 0)));
        return;
      }
      case Primitive::Sigmoid:
        if (wants(0)) acc(0, g.cwiseProduct(n.value.cwiseProduct((Scalar(1) - n.value.array()).matrix())));
        return;
      case Primitive::Tanh:
        if (wants(0)) acc(0, g.cwiseProduct((Scalar(1) - n.value.array().square()).matrix()));
        return;
      case Primitive::Relu:
        if (wants(0)) {
          acc(0, g.cwiseProduct(in(0).value.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); })));
        }
        return;
      case Primitive::Scale:
        if (wants(0)) acc(0, n.factor * g);
        return;
      case Primitive::ScaleBy: {
        if (wants(0)) {
          Tensor<Scalar> gs(1, 1);
          gs(0, 0) = g.cwiseProduct(in(1).value).sum();
          acc(0, gs);
        }
        if (wants(1)) acc(1, in(0).value(0, 0) * g);
        return;
      }
      case Primitive::RowScale: {
        const auto& s = in(0).value;
        const auto& x = in(1).value;
        if (wants(0)) {
          Tensor<Scalar> gs(s.rows(), 1);
          for (Index r = 0; r < s.rows(); ++r) gs(r, 0) = g.row(r).dot(x.row(r));
          acc(0, gs);
        }
        if (wants(1)) {
          Tensor<Scalar> gx = g;
          for (Index r = 0; r < gx.rows(); ++r) gx.row(r) *= s(r, 0);
          acc(1, gx);
        }
        return;
      }
      case Primitive::Dropout:
        if (wants(0)) acc(0, g.cwiseProduct(n.mask) * (Scalar(1) / (Scalar(1) - n.factor)));
        return;
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> param_nodes_;
  bool grad_enabled_;
  bool corrupt_ = false;
  Primitive corrupted_ = Primitive::Constant;
};

// ---------------------------------------------------------------------------
// Primitive applications. Each validates shapes, then records on the tape that
// owns its first input.

namespace detail {

template <typename Scalar>
[[noreturn]] void shape_fail(Primitive p, const std::string& what) {
  throw ShapeError(std::string(primitive_name(p)) + ": " + what);
}

template <typename Scalar>
Tape<Scalar>& tape_of(const Var<Scalar>& a, Primitive p) {
  if (!a.valid()) shape_fail<Scalar>(p, "input is not bound to a tape");
  return *a.tape();
}

template <typename Scalar>
void same_tape(const Var<Scalar>& a, const Var<Scalar>& b, Primitive p) {
  if (a.tape() != b.tape()) shape_fail<Scalar>(p, "inputs live on different tapes");
}

template <typename Scalar>
Var<Scalar> binary(Primitive p, const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& t = tape_of(a, p);
  same_tape(a, b, p);
  typename Tape<Scalar>::Node n;
  n.kind = p;
  n.inputs = {a.id(), b.id()};
  return t.record(std::move(n));
}

template <typename Scalar>
Var<Scalar> unary(Primitive p, const Var<Scalar>& a) {
  auto& t = tape_of(a, p);
  typename Tape<Scalar>::Node n;
  n.kind = p;
  n.inputs = {a.id()};
  return t.record(std::move(n));
}

template <typename Scalar>
void check_same_shape(Primitive p, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    shape_fail<Scalar>(p, "shapes " + shape_string(a.value()) + " and " + shape_string(b.value()) + " differ");
  }
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::check_same_shape(Primitive::Add, a, b);
  return detail::binary(Primitive::Add, a, b);
}

template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::check_same_shape(Primitive::Sub, a, b);
  return detail::binary(Primitive::Sub, a, b);
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::check_same_shape(Primitive::Mul, a, b);
  return detail::binary(Primitive::Mul, a, b);
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows()) {
    detail::shape_fail<Scalar>(Primitive::MatMul, "shapes " + shape_string(a.value()) + " and " +
                                                      shape_string(b.value()) + " do not conform");
  }
  return detail::binary(Primitive::MatMul, a, b);
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  return detail::unary(Primitive::Transpose, a);
}

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) {
    detail::shape_fail<Scalar>(Primitive::Reshape, "cannot view " + shape_string(a.value()) + " as [" +
                                                       std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  auto& t = detail::tape_of(a, Primitive::Reshape);
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::Reshape;
  n.inputs = {a.id()};
  n.extent = rows;
  return t.record(std::move(n));
}

/// axis 0 stacks rows, axis 1 stacks columns.
template <typename Scalar>
Var<Scalar> concat(std::span<const Var<Scalar>> parts, int axis) {
  if (parts.empty()) detail::shape_fail<Scalar>(Primitive::Concat, "no inputs");
  if (axis != 0 && axis != 1) detail::shape_fail<Scalar>(Primitive::Concat, "axis must be 0 or 1");
  auto& t = detail::tape_of(parts[0], Primitive::Concat);
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::Concat;
  n.extent = axis;
  for (const auto& p : parts) {
    detail::same_tape(parts[0], p, Primitive::Concat);
    const bool ok = axis == 0 ? p.cols() == parts[0].cols() : p.rows() == parts[0].rows();
    if (!ok) {
      detail::shape_fail<Scalar>(Primitive::Concat, "shapes " + shape_string(parts[0].value()) + " and " +
                                                        shape_string(p.value()) + " do not align on axis " +
                                                        std::to_string(axis));
    }
    n.inputs.push_back(p.id());
  }
  return t.record(std::move(n));
}

template <typename Scalar>
Var<Scalar> concat(std::initializer_list<Var<Scalar>> parts, int axis) {
  std::vector<Var<Scalar>> v(parts);
  return concat(std::span<const Var<Scalar>>(v), axis);
}

template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, std::span<const Index> rows) {
  auto& t = detail::tape_of(a, Primitive::GatherRows);
  for (Index r : rows) {
    if (r < 0 || r >= a.rows()) {
      detail::shape_fail<Scalar>(Primitive::GatherRows, "row " + std::to_string(r) + " out of range for " +
                                                            shape_string(a.value()));
    }
  }
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::GatherRows;
  n.inputs = {a.id()};
  n.index.assign(rows.begin(), rows.end());
  return t.record(std::move(n));
}

template <typename Scalar>
Var<Scalar> scatter_add_rows(const Var<Scalar>& a, std::span<const Index> rows, Index out_rows) {
  auto& t = detail::tape_of(a, Primitive::ScatterAddRows);
  if (static_cast<Index>(rows.size()) != a.rows()) {
    detail::shape_fail<Scalar>(Primitive::ScatterAddRows, std::to_string(rows.size()) + " targets for " +
                                                              shape_string(a.value()));
  }
  for (Index r : rows) {
    if (r < 0 || r >= out_rows) {
      detail::shape_fail<Scalar>(Primitive::ScatterAddRows,
                                 "target row " + std::to_string(r) + " out of range " + std::to_string(out_rows));
    }
  }
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::ScatterAddRows;
  n.inputs = {a.id()};
  n.index.assign(rows.begin(), rows.end());
  n.extent = out_rows;
  return t.record(std::move(n));
}

/// Softmax over the entries of an Ex1 column that share a segment key.
/// Keys must lie in [0, num_segments).
template <typename Scalar>
Var<Scalar> segment_softmax(const Var<Scalar>& a, std::span<const Index> segments, Index num_segments) {
  auto& t = detail::tape_of(a, Primitive::SegmentSoftmax);
  if (a.cols() != 1 || static_cast<Index>(segments.size()) != a.rows()) {
    detail::shape_fail<Scalar>(Primitive::SegmentSoftmax, "expected a column of " + std::to_string(segments.size()) +
                                                              " entries, got " + shape_string(a.value()));
  }
  for (Index s : segments) {
    if (s < 0 || s >= num_segments) {
      throw ShapeError("segment-softmax: unknown segment key " + std::to_string(s) + " (segments: " +
                       std::to_string(num_segments) + ")");
    }
  }
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::SegmentSoftmax;
  n.inputs = {a.id()};
  n.index.assign(segments.begin(), segments.end());
  n.extent = num_segments;
  return t.record(std::move(n));
}

/// Max of each row as an Nx1 column. Ties resolve to the lowest column.
template <typename Scalar>
Var<Scalar> row_max(const Var<Scalar>& a) {
  if (a.cols() == 0) detail::shape_fail<Scalar>(Primitive::RowMax, "empty rows in " + shape_string(a.value()));
  return detail::unary(Primitive::RowMax, a);
}

template <typename Scalar>
const std::vector<Index>& row_argmax(const Var<Scalar>& reduced) {
  const auto& n = reduced.tape()->node(reduced.id());
  if (n.kind != Primitive::RowMax) throw Error("row_argmax: value was not produced by row_max");
  return n.index;
}

template <typename Scalar>
Var<Scalar> row_sum(const Var<Scalar>& a) { return detail::unary(Primitive::RowSum, a); }

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) { return detail::unary(Primitive::Sum, a); }

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) { return detail::unary(Primitive::Sigmoid, a); }

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& a) { return detail::unary(Primitive::Tanh, a); }

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) { return detail::unary(Primitive::Relu, a); }

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  auto& t = detail::tape_of(a, Primitive::Scale);
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::Scale;
  n.inputs = {a.id()};
  n.factor = factor;
  return t.record(std::move(n));
}

/// s * a for a 1x1 variable s.
template <typename Scalar>
Var<Scalar> scale_by(const Var<Scalar>& s, const Var<Scalar>& a) {
  if (s.rows() != 1 || s.cols() != 1) {
    detail::shape_fail<Scalar>(Primitive::ScaleBy, "factor must be 1x1, got " + shape_string(s.value()));
  }
  return detail::binary(Primitive::ScaleBy, s, a);
}

/// Row r of a multiplied by s(r, 0).
template <typename Scalar>
Var<Scalar> row_scale(const Var<Scalar>& s, const Var<Scalar>& a) {
  if (s.cols() != 1 || s.rows() != a.rows()) {
    detail::shape_fail<Scalar>(Primitive::RowScale, "factors " + shape_string(s.value()) + " do not match rows of " +
                                                         shape_string(a.value()));
  }
  return detail::binary(Primitive::RowScale, s, a);
}

/// Inverted dropout with an explicit 0/1 keep mask.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& a, Tensor<Scalar> keep_mask, Scalar rate) {
  auto& t = detail::tape_of(a, Primitive::Dropout);
  if (keep_mask.rows() != a.rows() || keep_mask.cols() != a.cols()) {
    detail::shape_fail<Scalar>(Primitive::Dropout, "mask " + shape_string(keep_mask) + " vs input " +
                                                        shape_string(a.value()));
  }
  if (!(rate >= Scalar(0) && rate < Scalar(1))) detail::shape_fail<Scalar>(Primitive::Dropout, "rate must be in [0,1)");
  typename Tape<Scalar>::Node n;
  n.kind = Primitive::Dropout;
  n.inputs = {a.id()};
  n.mask = std::move(keep_mask);
  n.factor = rate;
  return t.record(std::move(n));
}

}  // namespace bigg
