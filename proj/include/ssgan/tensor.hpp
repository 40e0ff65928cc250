#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ssgan/error.hpp"

namespace ssgan {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense n-dimensional array, row-major. All dimensions are positive; a
// scalar is represented as shape [1].
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(numel(shape_), T(0));
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    check(data_.size() == numel(shape_), Error::Kind::shape, "tensor data length ",
          data_.size(), " does not match shape ", shape_str(shape_));
  }

  Tensor(Shape shape, std::initializer_list<T> data)
      : Tensor(std::move(shape), std::vector<T>(data)) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, T v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }

  static Tensor ones(Shape shape) { return full(std::move(shape), T(1)); }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  Tensor reshaped(Shape new_shape) const {
    check(numel(new_shape) == data_.size(), Error::Kind::shape, "cannot reshape ",
          shape_str(shape_), " to ", shape_str(new_shape));
    Tensor out = *this;
    out.shape_ = std::move(new_shape);
    return out;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> d(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) d[i] = static_cast<U>(data_[i]);
    return Tensor<U>(shape_, std::move(d));
  }

 private:
  void validate_shape() const {
    check(!shape_.empty(), Error::Kind::shape, "tensor rank must be >= 1");
    for (std::size_t d : shape_)
      check(d > 0, Error::Kind::shape, "tensor dimensions must be positive, got ",
            shape_str(shape_));
  }

  Shape shape_;
  std::vector<T> data_;
};

// ---------------------------------------------------------------------------
// Elementwise kernels
// ---------------------------------------------------------------------------

enum class EwKind { add, sub, mul, div, neg, exp, log, tanh };

namespace detail {

template <typename T, typename F>
Tensor<T> map2(const Tensor<T>& a, const Tensor<T>& b, F&& f, const char* op) {
  check(a.same_shape(b), Error::Kind::shape, op, ": shape mismatch ", shape_str(a.shape()),
        " vs ", shape_str(b.shape()));
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

template <typename T, typename F>
Tensor<T> map1(const Tensor<T>& a, F&& f) {
  Tensor<T> out(a.shape());
  const T* pa = a.data();
  T* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = f(pa[i]);
  return out;
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::map2(a, b, [](T x, T y) { return x + y; }, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::map2(a, b, [](T x, T y) { return x - y; }, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::map2(a, b, [](T x, T y) { return x * y; }, "mul");
}
template <typename T>
Tensor<T> divide(const Tensor<T>& a, const Tensor<T>& b) {
  return detail::map2(a, b, [](T x, T y) { return x / y; }, "div");
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return detail::map1(a, [s](T x) { return x + s; });
}
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  return detail::map1(a, [s](T x) { return x * s; });
}
template <typename T>
Tensor<T> rsub_scalar(T s, const Tensor<T>& a) {  // s - a
  return detail::map1(a, [s](T x) { return s - x; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  return detail::map1(a, [](T x) { return -x; });
}
template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return detail::map1(a, [](T x) { return std::exp(x); });
}
template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    check(a[i] > T(0), Error::Kind::domain, "log of non-positive value ", a[i]);
  return detail::map1(a, [](T x) { return std::log(x); });
}
template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return detail::map1(a, [](T x) { return std::tanh(x); });
}
template <typename T>
Tensor<T> sqrt(const Tensor<T>& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    check(a[i] >= T(0), Error::Kind::domain, "sqrt of negative value ", a[i]);
  return detail::map1(a, [](T x) { return std::sqrt(x); });
}
template <typename T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  return detail::map1(a, [lo, hi](T x) { return std::min(hi, std::max(lo, x)); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  check(slope >= T(0) && slope < T(1), Error::Kind::value, "leaky_relu slope must be in [0,1), got ",
        slope);
  return detail::map1(a, [slope](T x) { return x >= T(0) ? x : slope * x; });
}

// Numerically stable logistic; never evaluates exp of a positive argument.
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return detail::map1(a, [](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    T e = std::exp(x);
    return e / (T(1) + e);
  });
}

// Dispatcher matching the public elementwise contract: binary kinds take a
// tensor or scalar right operand, unary kinds ignore it.
template <typename T>
Tensor<T> elementwise(EwKind kind, const Tensor<T>& a, const Tensor<T>& b) {
  switch (kind) {
    case EwKind::add: return add(a, b);
    case EwKind::sub: return sub(a, b);
    case EwKind::mul: return mul(a, b);
    case EwKind::div: return divide(a, b);
    default: fail(Error::Kind::value, "elementwise: kind is unary, scalar/tensor b not allowed");
  }
}

template <typename T>
Tensor<T> elementwise(EwKind kind, const Tensor<T>& a, T s) {
  switch (kind) {
    case EwKind::add: return add_scalar(a, s);
    case EwKind::sub: return add_scalar(a, -s);
    case EwKind::mul: return mul_scalar(a, s);
    case EwKind::div:
      check(s != T(0), Error::Kind::domain, "elementwise div by scalar zero");
      return mul_scalar(a, T(1) / s);
    default: fail(Error::Kind::value, "elementwise: kind is unary, use the unary overload");
  }
}

template <typename T>
Tensor<T> elementwise(EwKind kind, const Tensor<T>& a) {
  switch (kind) {
    case EwKind::neg: return neg(a);
    case EwKind::exp: return ssgan::exp(a);
    case EwKind::log: return ssgan::log(a);
    case EwKind::tanh: return ssgan::tanh(a);
    default: fail(Error::Kind::value, "elementwise: kind is binary, supply a right operand");
  }
}

// ---------------------------------------------------------------------------
// Matrix multiply
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  check(a.rank() == 2 && b.rank() == 2, Error::Kind::shape, "matmul requires rank-2 tensors");
  const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  check(k == k2, Error::Kind::shape, "matmul inner dimensions ", k, " vs ", k2, " do not agree");
  Tensor<T> out({m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  // i-k-j order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < m; ++i) {
    T* orow = po + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = pa[i * k + kk];
      const T* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  check(a.rank() == 2, Error::Kind::shape, "transpose2d requires rank-2 tensor");
  Tensor<T> out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

// ---------------------------------------------------------------------------
// Convolution kernels (correlation semantics: no kernel flip)
// ---------------------------------------------------------------------------

inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t stride,
                                std::size_t pad) {
  check(in + 2 * pad >= k, Error::Kind::shape, "conv kernel size ", k,
        " exceeds padded input extent ", in + 2 * pad);
  return (in + 2 * pad - k) / stride + 1;
}

// x: [N,C,H,W], kernel: [F,C,kh,kw] -> [N,F,H',W']
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, std::size_t stride,
                 std::size_t pad) {
  check(x.rank() == 4 && kernel.rank() == 4, Error::Kind::shape,
        "conv2d requires rank-4 input and kernel");
  check(stride >= 1, Error::Kind::value, "conv2d stride must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t f = kernel.dim(0), kc = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  check(c == kc, Error::Kind::shape, "conv2d channel mismatch: input ", c, " kernel ", kc);
  const std::size_t oh = conv_out_dim(h, kh, stride, pad);
  const std::size_t ow = conv_out_dim(w, kw, stride, pad);
  Tensor<T> out({n, f, oh, ow});
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* kbase = kernel.data() + ((fi * c + ci) * kh) * kw;
        const T* xbase = x.data() + ((in * c + ci) * h) * w;
        T* obase = out.data() + ((in * f + fi) * oh) * ow;
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ky = 0; ky < kh; ++ky) {
            const std::ptrdiff_t iy =
                static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            const T* xrow = xbase + iy * static_cast<std::ptrdiff_t>(w);
            const T* krow = kbase + ky * kw;
            T* orow = obase + oy * ow;
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const T kv = krow[kx];
              if (kv == T(0)) continue;
              for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                orow[ox] += kv * xrow[ix];
              }
            }
          }
      }
  return out;
}

namespace detail {

// Shared scatter core: out[n,c,i*s+a-p, j*s+b-p] += g[n,f,i,j] * k[f,c,a,b],
// with an explicit output extent so it can serve both the transposed-conv
// forward pass and the conv2d input gradient (whose extent may exceed the
// minimal transposed output when windows do not tile exactly).
template <typename T>
Tensor<T> conv2d_transpose_to(const Tensor<T>& g, const Tensor<T>& kernel, std::size_t stride,
                              std::size_t pad, std::size_t out_h, std::size_t out_w) {
  check(g.rank() == 4 && kernel.rank() == 4, Error::Kind::shape,
        "conv2d_transpose requires rank-4 input and kernel");
  const std::size_t n = g.dim(0), f = g.dim(1), h = g.dim(2), w = g.dim(3);
  const std::size_t kf = kernel.dim(0), c = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
  check(f == kf, Error::Kind::shape, "conv2d_transpose channel mismatch: input ", f, " kernel ",
        kf);
  Tensor<T> out({n, c, out_h, out_w});
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* kbase = kernel.data() + ((fi * c + ci) * kh) * kw;
        const T* gbase = g.data() + ((in * f + fi) * h) * w;
        T* obase = out.data() + ((in * c + ci) * out_h) * out_w;
        for (std::size_t iy = 0; iy < h; ++iy)
          for (std::size_t ix = 0; ix < w; ++ix) {
            const T gv = gbase[iy * w + ix];
            if (gv == T(0)) continue;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t oy = static_cast<std::ptrdiff_t>(iy * stride + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
              if (oy < 0 || oy >= static_cast<std::ptrdiff_t>(out_h)) continue;
              T* orow = obase + oy * static_cast<std::ptrdiff_t>(out_w);
              const T* krow = kbase + ky * kw;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const std::ptrdiff_t ox = static_cast<std::ptrdiff_t>(ix * stride + kx) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (ox < 0 || ox >= static_cast<std::ptrdiff_t>(out_w)) continue;
                orow[ox] += gv * krow[kx];
              }
            }
          }
      }
  return out;
}

}  // namespace detail

// input: [N,F,H,W], kernel: [F,C,kh,kw] -> [N,C,H',W'] with
// H' = (H-1)*stride - 2*pad + kh. Exact adjoint of conv2d.
template <typename T>
Tensor<T> conv2d_transpose(const Tensor<T>& g, const Tensor<T>& kernel, std::size_t stride,
                           std::size_t pad) {
  check(stride >= 1, Error::Kind::value, "conv2d_transpose stride must be positive");
  const std::size_t h = g.dim(2), w = g.dim(3);
  const std::size_t kh = kernel.dim(2), kw = kernel.dim(3);
  const std::ptrdiff_t oh = static_cast<std::ptrdiff_t>((h - 1) * stride + kh) -
                            2 * static_cast<std::ptrdiff_t>(pad);
  const std::ptrdiff_t ow = static_cast<std::ptrdiff_t>((w - 1) * stride + kw) -
                            2 * static_cast<std::ptrdiff_t>(pad);
  check(oh >= 1 && ow >= 1, Error::Kind::shape, "conv2d_transpose output size degenerate: ", oh,
        "x", ow);
  return detail::conv2d_transpose_to(g, kernel, stride, pad, static_cast<std::size_t>(oh),
                                     static_cast<std::size_t>(ow));
}

// Gradient of conv2d w.r.t. its input: the scatter core with the output
// extent pinned to the original input's spatial size.
template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& grad_out, const Tensor<T>& kernel,
                            std::size_t stride, std::size_t pad, const Shape& input_shape) {
  return detail::conv2d_transpose_to(grad_out, kernel, stride, pad, input_shape[2],
                                     input_shape[3]);
}

// k_grad[f,c,a,b] = sum_{n,i,j} a4[n,f,i,j] * b4[n,c,i*s+a-p, j*s+b-p].
// conv2d kernel gradient: a4 = grad_out, b4 = input.
// conv2d_transpose kernel gradient: a4 = input, b4 = grad_out.
template <typename T>
Tensor<T> conv2d_kernel_grad(const Tensor<T>& a4, const Tensor<T>& b4, std::size_t stride,
                             std::size_t pad, const Shape& kernel_shape) {
  const std::size_t n = a4.dim(0), f = a4.dim(1), h = a4.dim(2), w = a4.dim(3);
  const std::size_t c = b4.dim(1), bh = b4.dim(2), bw = b4.dim(3);
  Tensor<T> kg(kernel_shape);
  const std::size_t kh = kernel_shape[2], kw = kernel_shape[3];
  for (std::size_t in = 0; in < n; ++in)
    for (std::size_t fi = 0; fi < f; ++fi)
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* abase = a4.data() + ((in * f + fi) * h) * w;
        const T* bbase = b4.data() + ((in * c + ci) * bh) * bw;
        T* kbase = kg.data() + ((fi * c + ci) * kh) * kw;
        for (std::size_t iy = 0; iy < h; ++iy)
          for (std::size_t ix = 0; ix < w; ++ix) {
            const T av = abase[iy * w + ix];
            if (av == T(0)) continue;
            for (std::size_t ky = 0; ky < kh; ++ky) {
              const std::ptrdiff_t by = static_cast<std::ptrdiff_t>(iy * stride + ky) -
                                        static_cast<std::ptrdiff_t>(pad);
              if (by < 0 || by >= static_cast<std::ptrdiff_t>(bh)) continue;
              const T* brow = bbase + by * static_cast<std::ptrdiff_t>(bw);
              T* krow = kbase + ky * kw;
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const std::ptrdiff_t bx = static_cast<std::ptrdiff_t>(ix * stride + kx) -
                                          static_cast<std::ptrdiff_t>(pad);
                if (bx < 0 || bx >= static_cast<std::ptrdiff_t>(bw)) continue;
                krow[kx] += av * brow[bx];
              }
            }
          }
      }
  return kg;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

enum class ReduceKind { sum, mean, max };

namespace detail {

inline void validate_axes(const Shape& shape, std::span<const std::size_t> axes) {
  for (std::size_t ax : axes)
    check(ax < shape.size(), Error::Kind::value, "reduce axis ", ax, " out of range for rank ",
          shape.size());
}

inline Shape reduced_shape(const Shape& shape, std::span<const std::size_t> axes) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (std::find(axes.begin(), axes.end(), i) == axes.end()) out.push_back(shape[i]);
  if (out.empty()) out.push_back(1);  // full reduction yields a scalar
  return out;
}

// Maps every input linear index to its output slot for a given axis set.
template <typename T, typename Accum>
void reduce_walk(const Tensor<T>& a, std::span<const std::size_t> axes, Accum&& accum) {
  const Shape& shape = a.shape();
  const std::size_t rank = shape.size();
  std::vector<bool> reduced(rank, false);
  for (std::size_t ax : axes) reduced[ax] = true;
  std::vector<std::size_t> out_stride(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = rank; i-- > 0;) {
    if (!reduced[i]) {
      out_stride[i] = stride;
      stride *= shape[i];
    }
  }
  std::vector<std::size_t> idx(rank, 0);
  std::size_t out_index = 0;
  for (std::size_t lin = 0; lin < a.size(); ++lin) {
    accum(out_index, lin);
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < shape[i]) {
        out_index += out_stride[i];
        break;
      }
      idx[i] = 0;
      out_index -= out_stride[i] * (shape[i] - 1);
    }
  }
}

}  // namespace detail

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, std::span<const std::size_t> axes) {
  detail::validate_axes(a.shape(), axes);
  if (axes.empty()) return a;
  Tensor<T> out(detail::reduced_shape(a.shape(), axes));
  detail::reduce_walk(a, axes, [&](std::size_t o, std::size_t i) { out[o] += a[i]; });
  return out;
}

template <typename T>
Tensor<T> reduce_mean(const Tensor<T>& a, std::span<const std::size_t> axes) {
  detail::validate_axes(a.shape(), axes);
  if (axes.empty()) return a;
  Tensor<T> out = reduce_sum(a, axes);
  std::size_t count = 1;
  for (std::size_t ax : axes) count *= a.dim(ax);
  return mul_scalar(out, T(1) / static_cast<T>(count));
}

// Returns the max-reduced tensor; if argmax is non-null it receives, per
// output slot, the linear input index of the first maximum (used by the
// autodiff backward pass).
template <typename T>
Tensor<T> reduce_max(const Tensor<T>& a, std::span<const std::size_t> axes,
                     std::vector<std::size_t>* argmax = nullptr) {
  detail::validate_axes(a.shape(), axes);
  if (axes.empty()) {
    if (argmax) {
      argmax->resize(a.size());
      std::iota(argmax->begin(), argmax->end(), std::size_t(0));
    }
    return a;
  }
  Tensor<T> out = Tensor<T>::full(detail::reduced_shape(a.shape(), axes),
                                  -std::numeric_limits<T>::infinity());
  if (argmax) argmax->assign(out.size(), 0);
  detail::reduce_walk(a, axes, [&](std::size_t o, std::size_t i) {
    if (a[i] > out[o]) {
      out[o] = a[i];
      if (argmax) (*argmax)[o] = i;
    }
  });
  return out;
}

template <typename T>
Tensor<T> reduce(ReduceKind kind, const Tensor<T>& a, std::span<const std::size_t> axes) {
  switch (kind) {
    case ReduceKind::sum: return reduce_sum(a, axes);
    case ReduceKind::mean: return reduce_mean(a, axes);
    case ReduceKind::max: return reduce_max(a, axes);
  }
  fail(Error::Kind::value, "reduce: unknown kind");
}

// Broadcast a per-channel vector v[C] over axis 1 of the target shape
// (rank >= 2, target[1] == C).
template <typename T>
Tensor<T> broadcast_channel(const Tensor<T>& v, const Shape& target) {
  check(v.rank() == 1, Error::Kind::shape, "broadcast_channel requires a rank-1 vector");
  check(target.size() >= 2 && target[1] == v.dim(0), Error::Kind::shape,
        "broadcast_channel: vector length ", v.dim(0), " does not match axis 1 of ",
        shape_str(target));
  Tensor<T> out(target);
  const std::size_t c = target[1];
  std::size_t inner = 1;
  for (std::size_t i = 2; i < target.size(); ++i) inner *= target[i];
  T* po = out.data();
  for (std::size_t n = 0; n < target[0]; ++n)
    for (std::size_t ci = 0; ci < c; ++ci) {
      const T val = v[ci];
      T* slab = po + (n * c + ci) * inner;
      for (std::size_t i = 0; i < inner; ++i) slab[i] = val;
    }
  return out;
}

// Row-wise softmax with max subtraction; rows are the last axis of a rank-2
// tensor.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
  check(a.rank() == 2, Error::Kind::shape, "softmax requires a rank-2 tensor");
  Tensor<T> out(a.shape());
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = a.data() + r * cols;
    T* o = out.data() + r * cols;
    T mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& a) {
  check(a.rank() == 2, Error::Kind::shape, "log_softmax requires a rank-2 tensor");
  Tensor<T> out(a.shape());
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = a.data() + r * cols;
    T* o = out.data() + r * cols;
    T mx = in[0];
    for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(in[j] - mx);
    const T lse = mx + std::log(sum);
    for (std::size_t j = 0; j < cols; ++j) o[j] = in[j] - lse;
  }
  return out;
}

}  // namespace ssgan
