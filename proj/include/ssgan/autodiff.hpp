#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>
#include <utility>

#include "ssgan/tensor.hpp"

namespace ssgan {

template <typename T>
class Tape;

// Lightweight handle to a node on a tape. Copyable; valid for the lifetime
// of the tape that produced it.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t index) : tape_(tape), index_(index) {}

  const Tensor<T>& value() const { return tape_->value(index_); }
  const Shape& shape() const { return value().shape(); }
  std::size_t index() const { return index_; }
  Tape<T>* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Reverse-mode differentiation record. Nodes are appended in execution
// order, which is a topological order by construction, so the backward pass
// is a single reverse sweep. Gradients accumulate by summation. A tape is
// single-use: one forward build, one backward.
template <typename T>
class Tape {
 public:
  // Backprop callback: receives the tape and the index of its own output
  // node, reads grad(out) and accumulates into the input slots.
  using Backprop = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  Var<T> leaf(Tensor<T> value) { return emit(std::move(value), nullptr); }

  // Leaf tied to a persistent parameter tensor; its gradient can be fetched
  // after backward via grad_of. The same tensor may be registered several
  // times on one tape (e.g. a frozen model forwarded twice); contributions
  // sum.
  Var<T> param(Tensor<T>& p) {
    Var<T> v = emit(p, nullptr);
    param_nodes_[&p].push_back(v.index());
    return v;
  }

  Var<T> emit(Tensor<T> value, Backprop backprop) {
    check(value.all_finite(), Error::Kind::domain, "tape op produced a non-finite value");
    nodes_.push_back(Node{std::move(value), recording_ ? std::move(backprop) : nullptr});
    return Var<T>(this, nodes_.size() - 1);
  }

  const Tensor<T>& value(std::size_t i) const { return nodes_[i].value; }

  // Gradient slot for node i, zero-initialised on first touch.
  Tensor<T>& grad(std::size_t i) {
    if (grads_[i].empty()) grads_[i] = Tensor<T>(nodes_[i].value.shape());
    return grads_[i];
  }

  bool has_grad(std::size_t i) const { return !grads_[i].empty(); }

  void backward(Var<T> loss) {
    check(loss.tape() == this, Error::Kind::state, "backward: loss lives on another tape");
    check(loss.value().size() == 1, Error::Kind::value,
          "backward requires a scalar loss, got shape ", shape_str(loss.shape()));
    check(!used_, Error::Kind::state, "tape already consumed by a previous backward");
    used_ = true;
    grads_.assign(nodes_.size(), Tensor<T>());
    grad(loss.index())[0] = T(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].backprop && !grads_[i].empty()) nodes_[i].backprop(*this, i);
    }
  }

  bool consumed() const { return used_; }

  // Summed gradient of a registered parameter; zero if the parameter never
  // influenced the loss.
  Tensor<T> grad_of(const Tensor<T>& p) {
    check(used_, Error::Kind::state, "grad_of requires a completed backward pass");
    Tensor<T> total(p.shape());
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end()) return total;
    for (std::size_t idx : it->second) {
      if (grads_[idx].empty()) continue;
      total = ssgan::add(total, grads_[idx]);
    }
    return total;
  }

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Backprop backprop;
  };

  // Deque keeps references to node values stable across emits; callers may
  // hold Var::value() references while building the graph.
  std::deque<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  std::unordered_map<const Tensor<T>*, std::vector<std::size_t>> param_nodes_;
  bool recording_ = true;
  bool used_ = false;
};

// Differentiable operations. Forward values are computed by the plain
// kernels in tensor.hpp; each op installs its hand-derived adjoint.
namespace ad {

namespace detail {

template <typename T>
void accum(Tensor<T>& slot, const Tensor<T>& g) {
  T* ps = slot.data();
  const T* pg = g.data();
  for (std::size_t i = 0; i < slot.size(); ++i) ps[i] += pg[i];
}

template <typename T, typename F>
void accum_map(Tensor<T>& slot, const Tensor<T>& g, F&& f) {
  T* ps = slot.data();
  const T* pg = g.data();
  for (std::size_t i = 0; i < slot.size(); ++i) ps[i] += f(pg[i], i);
}

}  // namespace detail

// --- binary elementwise ------------------------------------------------------

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b) {
  const std::size_t ia = a.index(), ib = b.index();
  return t.emit(ssgan::add(a.value(), b.value()), [ia, ib](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    detail::accum(tp.grad(ia), g);
    detail::accum(tp.grad(ib), g);
  });
}

template <typename T>
Var<T> sub(Tape<T>& t, Var<T> a, Var<T> b) {
  const std::size_t ia = a.index(), ib = b.index();
  return t.emit(ssgan::sub(a.value(), b.value()), [ia, ib](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    detail::accum(tp.grad(ia), g);
    detail::accum_map(tp.grad(ib), g, [](T gv, std::size_t) { return -gv; });
  });
}

template <typename T>
Var<T> mul(Tape<T>& t, Var<T> a, Var<T> b) {
  const std::size_t ia = a.index(), ib = b.index();
  return t.emit(ssgan::mul(a.value(), b.value()), [ia, ib](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    const Tensor<T>& av = tp.value(ia);
    const Tensor<T>& bv = tp.value(ib);
    detail::accum_map(tp.grad(ia), g, [&](T gv, std::size_t i) { return gv * bv[i]; });
    detail::accum_map(tp.grad(ib), g, [&](T gv, std::size_t i) { return gv * av[i]; });
  });
}

template <typename T>
Var<T> divide(Tape<T>& t, Var<T> a, Var<T> b) {
  const std::size_t ia = a.index(), ib = b.index();
  return t.emit(ssgan::divide(a.value(), b.value()), [ia, ib](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    const Tensor<T>& av = tp.value(ia);
    const Tensor<T>& bv = tp.value(ib);
    detail::accum_map(tp.grad(ia), g, [&](T gv, std::size_t i) { return gv / bv[i]; });
    detail::accum_map(tp.grad(ib), g,
                      [&](T gv, std::size_t i) { return -gv * av[i] / (bv[i] * bv[i]); });
  });
}

// --- scalar variants ---------------------------------------------------------

template <typename T>
Var<T> add_scalar(Tape<T>& t, Var<T> a, T s) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::add_scalar(a.value(), s), [ia](Tape<T>& tp, std::size_t out) {
    detail::accum(tp.grad(ia), tp.grad(out));
  });
}

template <typename T>
Var<T> mul_scalar(Tape<T>& t, Var<T> a, T s) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::mul_scalar(a.value(), s), [ia, s](Tape<T>& tp, std::size_t out) {
    detail::accum_map(tp.grad(ia), tp.grad(out), [s](T gv, std::size_t) { return s * gv; });
  });
}

template <typename T>
Var<T> rsub_scalar(Tape<T>& t, T s, Var<T> a) {  // s - a
  const std::size_t ia = a.index();
  return t.emit(ssgan::rsub_scalar(s, a.value()), [ia](Tape<T>& tp, std::size_t out) {
    detail::accum_map(tp.grad(ia), tp.grad(out), [](T gv, std::size_t) { return -gv; });
  });
}

// --- unary -------------------------------------------------------------------

template <typename T>
Var<T> neg(Tape<T>& t, Var<T> a) {
  return rsub_scalar(t, T(0), a);
}

template <typename T>
Var<T> exp(Tape<T>& t, Var<T> a) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::exp(a.value()), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& y = tp.value(out);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return gv * y[i]; });
  });
}

template <typename T>
Var<T> log(Tape<T>& t, Var<T> a) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::log(a.value()), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& x = tp.value(ia);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return gv / x[i]; });
  });
}

template <typename T>
Var<T> tanh(Tape<T>& t, Var<T> a) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::tanh(a.value()), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& y = tp.value(out);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return gv * (T(1) - y[i] * y[i]); });
  });
}

template <typename T>
Var<T> sqrt(Tape<T>& t, Var<T> a) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::sqrt(a.value()), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& y = tp.value(out);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return gv / (T(2) * y[i]); });
  });
}

template <typename T>
Var<T> sigmoid(Tape<T>& t, Var<T> a) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::sigmoid(a.value()), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& y = tp.value(out);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return gv * y[i] * (T(1) - y[i]); });
  });
}

// Derivative at exactly zero follows the x >= 0 branch.
template <typename T>
Var<T> leaky_relu(Tape<T>& t, Var<T> a, T slope) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::leaky_relu(a.value(), slope), [ia, slope](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& x = tp.value(ia);
    detail::accum_map(tp.grad(ia), tp.grad(out),
                      [&](T gv, std::size_t i) { return x[i] >= T(0) ? gv : slope * gv; });
  });
}

// Pass-through gradient inside [lo,hi], zero where the clamp is active.
template <typename T>
Var<T> clamp(Tape<T>& t, Var<T> a, T lo, T hi) {
  const std::size_t ia = a.index();
  return t.emit(ssgan::clamp(a.value(), lo, hi), [ia, lo, hi](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& x = tp.value(ia);
    detail::accum_map(tp.grad(ia), tp.grad(out), [&](T gv, std::size_t i) {
      return (x[i] >= lo && x[i] <= hi) ? gv : T(0);
    });
  });
}

// --- linear algebra ----------------------------------------------------------

template <typename T>
Var<T> matmul(Tape<T>& t, Var<T> a, Var<T> b) {
  const std::size_t ia = a.index(), ib = b.index();
  return t.emit(ssgan::matmul(a.value(), b.value()), [ia, ib](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    detail::accum(tp.grad(ia), ssgan::matmul(g, transpose2d(tp.value(ib))));
    detail::accum(tp.grad(ib), ssgan::matmul(transpose2d(tp.value(ia)), g));
  });
}

template <typename T>
Var<T> conv2d(Tape<T>& t, Var<T> x, Var<T> kernel, std::size_t stride, std::size_t pad) {
  const std::size_t ix = x.index(), ik = kernel.index();
  return t.emit(ssgan::conv2d(x.value(), kernel.value(), stride, pad),
                [ix, ik, stride, pad](Tape<T>& tp, std::size_t out) {
                  const Tensor<T>& g = tp.grad(out);
                  const Tensor<T>& xv = tp.value(ix);
                  const Tensor<T>& kv = tp.value(ik);
                  detail::accum(tp.grad(ix),
                                conv2d_input_grad(g, kv, stride, pad, xv.shape()));
                  detail::accum(tp.grad(ik),
                                conv2d_kernel_grad(g, xv, stride, pad, kv.shape()));
                });
}

template <typename T>
Var<T> conv2d_transpose(Tape<T>& t, Var<T> x, Var<T> kernel, std::size_t stride,
                        std::size_t pad) {
  const std::size_t ix = x.index(), ik = kernel.index();
  return t.emit(ssgan::conv2d_transpose(x.value(), kernel.value(), stride, pad),
                [ix, ik, stride, pad](Tape<T>& tp, std::size_t out) {
                  const Tensor<T>& g = tp.grad(out);
                  const Tensor<T>& xv = tp.value(ix);
                  const Tensor<T>& kv = tp.value(ik);
                  // Adjoint of the scatter is the gather, i.e. plain conv2d.
                  detail::accum(tp.grad(ix), ssgan::conv2d(g, kv, stride, pad));
                  detail::accum(tp.grad(ik),
                                conv2d_kernel_grad(xv, g, stride, pad, kv.shape()));
                });
}

// --- reductions / shape ------------------------------------------------------

namespace detail {

// Adds the reduced gradient back over the axes that were collapsed.
template <typename T>
void scatter_reduced(Tape<T>& tp, std::size_t in_idx, const Tensor<T>& g,
                     const std::vector<std::size_t>& axes, T scale) {
  Tensor<T>& slot = tp.grad(in_idx);
  const Tensor<T>& x = tp.value(in_idx);
  ssgan::detail::reduce_walk(x, std::span<const std::size_t>(axes),
                             [&](std::size_t o, std::size_t i) { slot[i] += scale * g[o]; });
}

}  // namespace detail

template <typename T>
Var<T> reduce_sum(Tape<T>& t, Var<T> a, std::vector<std::size_t> axes) {
  const std::size_t ia = a.index();
  Tensor<T> v = ssgan::reduce_sum(a.value(), std::span<const std::size_t>(axes));
  return t.emit(std::move(v), [ia, axes = std::move(axes)](Tape<T>& tp, std::size_t out) {
    detail::scatter_reduced(tp, ia, tp.grad(out), axes, T(1));
  });
}

template <typename T>
Var<T> reduce_mean(Tape<T>& t, Var<T> a, std::vector<std::size_t> axes) {
  const std::size_t ia = a.index();
  T scale = T(1);
  for (std::size_t ax : axes) scale /= static_cast<T>(a.value().dim(ax));
  Tensor<T> v = ssgan::reduce_mean(a.value(), std::span<const std::size_t>(axes));
  return t.emit(std::move(v), [ia, axes = std::move(axes), scale](Tape<T>& tp, std::size_t out) {
    detail::scatter_reduced(tp, ia, tp.grad(out), axes, scale);
  });
}

// Gradient routes to the first maximum of each reduced group.
template <typename T>
Var<T> reduce_max(Tape<T>& t, Var<T> a, std::vector<std::size_t> axes) {
  const std::size_t ia = a.index();
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  Tensor<T> v = ssgan::reduce_max(a.value(), std::span<const std::size_t>(axes), argmax.get());
  return t.emit(std::move(v), [ia, argmax](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    Tensor<T>& slot = tp.grad(ia);
    for (std::size_t o = 0; o < g.size(); ++o) slot[(*argmax)[o]] += g[o];
  });
}

// All-axes mean to a scalar [1].
template <typename T>
Var<T> mean_all(Tape<T>& t, Var<T> a) {
  std::vector<std::size_t> axes(a.value().rank());
  std::iota(axes.begin(), axes.end(), std::size_t(0));
  return reduce_mean(t, a, std::move(axes));
}

template <typename T>
Var<T> sum_all(Tape<T>& t, Var<T> a) {
  std::vector<std::size_t> axes(a.value().rank());
  std::iota(axes.begin(), axes.end(), std::size_t(0));
  return reduce_sum(t, a, std::move(axes));
}

template <typename T>
Var<T> broadcast_channel(Tape<T>& t, Var<T> v, Shape target) {
  const std::size_t iv = v.index();
  return t.emit(ssgan::broadcast_channel(v.value(), target),
                [iv](Tape<T>& tp, std::size_t out) {
                  const Tensor<T>& g = tp.grad(out);
                  std::vector<std::size_t> axes;
                  for (std::size_t i = 0; i < g.rank(); ++i)
                    if (i != 1) axes.push_back(i);
                  detail::accum(tp.grad(iv),
                                ssgan::reduce_sum(g, std::span<const std::size_t>(axes)));
                });
}

template <typename T>
Var<T> reshape(Tape<T>& t, Var<T> a, Shape new_shape) {
  const std::size_t ia = a.index();
  return t.emit(a.value().reshaped(std::move(new_shape)), [ia](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& g = tp.grad(out);
    detail::accum(tp.grad(ia), g.reshaped(tp.value(ia).shape()));
  });
}

// --- batch-axis surgery ------------------------------------------------------

template <typename T>
Var<T> concat_batch(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  check(av.rank() == bv.rank(), Error::Kind::shape, "concat: rank mismatch");
  for (std::size_t i = 1; i < av.rank(); ++i)
    check(av.dim(i) == bv.dim(i), Error::Kind::shape, "concat: trailing dims differ at axis ", i);
  Shape shape = av.shape();
  shape[0] += bv.dim(0);
  Tensor<T> out(shape);
  std::copy(av.data(), av.data() + av.size(), out.data());
  std::copy(bv.data(), bv.data() + bv.size(), out.data() + av.size());
  const std::size_t ia = a.index(), ib = b.index(), na = av.size();
  return t.emit(std::move(out), [ia, ib, na](Tape<T>& tp, std::size_t o) {
    const Tensor<T>& g = tp.grad(o);
    Tensor<T>& ga = tp.grad(ia);
    Tensor<T>& gb = tp.grad(ib);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
  });
}

// Contiguous row-range slice along axis 0.
template <typename T>
Var<T> slice_batch(Tape<T>& t, Var<T> a, std::size_t r0, std::size_t r1) {
  const Tensor<T>& av = a.value();
  check(r0 < r1 && r1 <= av.dim(0), Error::Kind::shape, "slice_batch range [", r0, ",", r1,
        ") invalid for axis-0 extent ", av.dim(0));
  Shape shape = av.shape();
  shape[0] = r1 - r0;
  const std::size_t row = av.size() / av.dim(0);
  Tensor<T> out(shape);
  std::copy(av.data() + r0 * row, av.data() + r1 * row, out.data());
  const std::size_t ia = a.index(), off = r0 * row;
  return t.emit(std::move(out), [ia, off](Tape<T>& tp, std::size_t o) {
    const Tensor<T>& g = tp.grad(o);
    Tensor<T>& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
  });
}

// Row gather along axis 0 by explicit index list.
template <typename T>
Var<T> take_rows(Tape<T>& t, Var<T> a, std::vector<std::size_t> rows) {
  const Tensor<T>& av = a.value();
  check(!rows.empty(), Error::Kind::value, "take_rows: empty index list");
  for (std::size_t r : rows)
    check(r < av.dim(0), Error::Kind::value, "take_rows: index ", r, " out of range");
  Shape shape = av.shape();
  shape[0] = rows.size();
  const std::size_t row = av.size() / av.dim(0);
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(av.data() + rows[i] * row, av.data() + (rows[i] + 1) * row, out.data() + i * row);
  const std::size_t ia = a.index();
  return t.emit(std::move(out), [ia, rows = std::move(rows), row](Tape<T>& tp, std::size_t o) {
    const Tensor<T>& g = tp.grad(o);
    Tensor<T>& ga = tp.grad(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < row; ++j) ga[rows[i] * row + j] += g[i * row + j];
  });
}

// Column-range slice of a rank-2 tensor.
template <typename T>
Var<T> slice_cols(Tape<T>& t, Var<T> a, std::size_t c0, std::size_t c1) {
  const Tensor<T>& av = a.value();
  check(av.rank() == 2, Error::Kind::shape, "slice_cols requires rank-2");
  check(c0 < c1 && c1 <= av.dim(1), Error::Kind::shape, "slice_cols range invalid");
  const std::size_t rows = av.dim(0), cols = av.dim(1), w = c1 - c0;
  Tensor<T> out({rows, w});
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(av.data() + r * cols + c0, av.data() + r * cols + c1, out.data() + r * w);
  const std::size_t ia = a.index();
  return t.emit(std::move(out), [ia, c0, w, cols](Tape<T>& tp, std::size_t o) {
    const Tensor<T>& g = tp.grad(o);
    Tensor<T>& ga = tp.grad(ia);
    const std::size_t rows = g.dim(0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < w; ++j) ga[r * cols + c0 + j] += g[r * w + j];
  });
}

// Per-row single-element gather: out[i] = a[i, cols[i]].
template <typename T>
Var<T> gather_cols(Tape<T>& t, Var<T> a, std::vector<std::size_t> cols) {
  const Tensor<T>& av = a.value();
  check(av.rank() == 2, Error::Kind::shape, "gather_cols requires rank-2");
  check(cols.size() == av.dim(0), Error::Kind::shape, "gather_cols: one index per row required");
  const std::size_t w = av.dim(1);
  Tensor<T> out({cols.size()});
  for (std::size_t i = 0; i < cols.size(); ++i) {
    check(cols[i] < w, Error::Kind::value, "gather_cols: column ", cols[i], " out of range");
    out[i] = av.at(i, cols[i]);
  }
  const std::size_t ia = a.index();
  return t.emit(std::move(out), [ia, cols = std::move(cols), w](Tape<T>& tp, std::size_t o) {
    const Tensor<T>& g = tp.grad(o);
    Tensor<T>& ga = tp.grad(ia);
    for (std::size_t i = 0; i < cols.size(); ++i) ga[i * w + cols[i]] += g[i];
  });
}

// --- fused row-wise softmax family -------------------------------------------

template <typename T>
Var<T> softmax(Tape<T>& t, Var<T> logits) {
  const std::size_t il = logits.index();
  return t.emit(softmax_rows(logits.value()), [il](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& p = tp.value(out);
    const Tensor<T>& g = tp.grad(out);
    Tensor<T>& gl = tp.grad(il);
    const std::size_t rows = p.dim(0), cols = p.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < cols; ++j) dot += g[r * cols + j] * p[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        gl[r * cols + j] += p[r * cols + j] * (g[r * cols + j] - dot);
    }
  });
}

template <typename T>
Var<T> log_softmax(Tape<T>& t, Var<T> logits) {
  const std::size_t il = logits.index();
  return t.emit(log_softmax_rows(logits.value()), [il](Tape<T>& tp, std::size_t out) {
    const Tensor<T>& lp = tp.value(out);
    const Tensor<T>& g = tp.grad(out);
    Tensor<T>& gl = tp.grad(il);
    const std::size_t rows = lp.dim(0), cols = lp.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      T gsum = T(0);
      for (std::size_t j = 0; j < cols; ++j) gsum += g[r * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        gl[r * cols + j] += g[r * cols + j] - std::exp(lp[r * cols + j]) * gsum;
    }
  });
}

// Public elementwise dispatcher mirroring the plain-tensor surface.
template <typename T>
Var<T> elementwise(Tape<T>& t, EwKind kind, Var<T> a, Var<T> b) {
  switch (kind) {
    case EwKind::add: return add(t, a, b);
    case EwKind::sub: return sub(t, a, b);
    case EwKind::mul: return mul(t, a, b);
    case EwKind::div: return divide(t, a, b);
    default: fail(Error::Kind::value, "elementwise: kind is unary, scalar/tensor b not allowed");
  }
}

template <typename T>
Var<T> elementwise(Tape<T>& t, EwKind kind, Var<T> a, T s) {
  switch (kind) {
    case EwKind::add: return add_scalar(t, a, s);
    case EwKind::sub: return add_scalar(t, a, -s);
    case EwKind::mul: return mul_scalar(t, a, s);
    case EwKind::div:
      check(s != T(0), Error::Kind::domain, "elementwise div by scalar zero");
      return mul_scalar(t, a, T(1) / s);
    default: fail(Error::Kind::value, "elementwise: kind is unary, use the unary overload");
  }
}

template <typename T>
Var<T> elementwise(Tape<T>& t, EwKind kind, Var<T> a) {
  switch (kind) {
    case EwKind::neg: return neg(t, a);
    case EwKind::exp: return exp(t, a);
    case EwKind::log: return log(t, a);
    case EwKind::tanh: return tanh(t, a);
    default: fail(Error::Kind::value, "elementwise: kind is binary, supply a right operand");
  }
}

}  // namespace ad

// Operator sugar for tape expressions.
template <typename T>
Var<T> operator+(Var<T> a, Var<T> b) {
  return ad::add(*a.tape(), a, b);
}
template <typename T>
Var<T> operator-(Var<T> a, Var<T> b) {
  return ad::sub(*a.tape(), a, b);
}
template <typename T>
Var<T> operator*(Var<T> a, Var<T> b) {
  return ad::mul(*a.tape(), a, b);
}
template <typename T>
Var<T> operator/(Var<T> a, Var<T> b) {
  return ad::divide(*a.tape(), a, b);
}
template <typename T>
Var<T> operator*(Var<T> a, T s) {
  return ad::mul_scalar(*a.tape(), a, s);
}
template <typename T>
Var<T> operator-(Var<T> a) {
  return ad::neg(*a.tape(), a);
}

// Gradient check for a persistent parameter tensor consumed inside a model
// forward via Tape::param. `loss` must build the graph on the supplied tape
// and be deterministic across calls (freeze any noise first). The parameter
// is perturbed in place for the numeric side and restored afterwards.
template <typename T>
T grad_check_param(const std::function<Var<T>(Tape<T>&)>& loss, Tensor<T>& p, T h) {
  check(h > T(0), Error::Kind::value, "grad_check step must be positive");
  Tensor<T> analytic;
  {
    Tape<T> tape;
    Var<T> l = loss(tape);
    check(l.value().size() == 1, Error::Kind::value, "grad_check: loss must be scalar");
    tape.backward(l);
    analytic = tape.grad_of(p);
  }
  auto eval = [&] {
    Tape<T> tape;
    tape.set_recording(false);
    const T y = loss(tape).value()[0];
    check(std::isfinite(static_cast<double>(y)), Error::Kind::domain,
          "grad_check: loss returned a non-finite value");
    return y;
  };
  T max_err = T(0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const T orig = p[i];
    p[i] = orig + h;
    const T fp = eval();
    p[i] = orig - h;
    const T fm = eval();
    p[i] = orig;
    const T numeric = (fp - fm) / (T(2) * h);
    const T denom = std::max({std::abs(analytic[i]), std::abs(numeric), T(1e-8)});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

// Central-finite-difference gradient verification. `f` must be a
// deterministic scalar-valued function of x (freeze any noise before
// calling). Returns the max over elements of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename T>
T grad_check(const std::function<Var<T>(Tape<T>&, Var<T>)>& f, const Tensor<T>& x, T h) {
  check(h > T(0), Error::Kind::value, "grad_check step must be positive");
  Tensor<T> analytic;
  {
    Tape<T> tape;
    Var<T> xv = tape.leaf(x);
    Var<T> loss = f(tape, xv);
    check(loss.value().size() == 1, Error::Kind::value, "grad_check: f must return a scalar");
    tape.backward(loss);
    analytic = tape.grad(xv.index());
  }
  auto eval = [&](const Tensor<T>& xp) {
    Tape<T> tape;
    tape.set_recording(false);
    Var<T> v = f(tape, tape.leaf(xp));
    const T y = v.value()[0];
    check(std::isfinite(static_cast<double>(y)), Error::Kind::domain,
          "grad_check: f returned a non-finite value");
    return y;
  };
  T max_err = T(0);
  Tensor<T> xp = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T orig = xp[i];
    xp[i] = orig + h;
    const T fp = eval(xp);
    xp[i] = orig - h;
    const T fm = eval(xp);
    xp[i] = orig;
    const T numeric = (fp - fm) / (T(2) * h);
    const T denom = std::max({std::abs(analytic[i]), std::abs(numeric), T(1e-8)});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

}  // namespace ssgan
