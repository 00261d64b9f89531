#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "radioloc/errors.hpp"
#include "radioloc/rng.hpp"

namespace radioloc {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

namespace detail {

// One vertex of the backward tape. Ops allocate a fresh node per result;
// the tape lives until backward() runs and is then torn down, keeping only
// leaf gradients.
template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool backward_done = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

// Dense row-major tensor of rank 1..3 with optional gradient tracking.
// Instantiated with float for training/inference and double for
// finite-difference gradient checks.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T v, bool requires_grad = false) {
    auto node = std::make_shared<detail::Node<T>>();
    node->value.assign(numel(shape), v);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    if (numel(shape) != values.size())
      throw contract_error("tensor: " + shape_string(shape) + " does not hold " +
                           std::to_string(values.size()) + " values");
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor scalar(T v) { return from({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rank() const { return node_->shape.size(); }

  std::vector<T>& data() { return node_->value; }
  const std::vector<T>& data() const { return node_->value; }

  T item() const {
    if (size() != 1) throw contract_error("item(): tensor has shape " + shape_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<T>& grad() const {
    node_->ensure_grad();
    return node_->grad;
  }

  void zero_grad() {
    if (node_) node_->grad.assign(node_->value.size(), T(0));
  }

  // Deep copy of the values; the copy is a fresh leaf with no tape history.
  Tensor clone() const {
    auto node = std::make_shared<detail::Node<T>>();
    node->shape = node_->shape;
    node->value = node_->value;
    node->requires_grad = node_->requires_grad;
    return Tensor(std::move(node));
  }

  explicit Tensor(std::shared_ptr<detail::Node<T>> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<std::shared_ptr<Node<T>>> parents,
                  std::function<void(Node<T>&)> backprop) {
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  bool track = false;
  for (const auto& p : parents) track = track || p->requires_grad;
  node->requires_grad = track;
  if (track) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return Tensor<T>(std::move(node));
}

template <typename T>
void accumulate(Node<T>& parent, const T* g, std::size_t offset, std::size_t n) {
  if (!parent.requires_grad) return;
  parent.ensure_grad();
  T* dst = parent.grad.data() + offset;
  for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
}

// c[m x n] += a[m x k] * b[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m x n] += a[m x k] * b[n x k]^T
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// c[k x n] += a[m x k]^T * b[m x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    const T* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = ai[p];
      T* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
    }
  }
}

inline std::size_t leading_count(const Shape& shape, std::size_t trailing_rank) {
  std::size_t n = 1;
  for (std::size_t i = 0; i + trailing_rank < shape.size(); ++i) n *= shape[i];
  return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise / broadcast ops

// b is either the same shape as a or a trailing-suffix shape of a
// (e.g. a bias [n] added to [batch, m, n], or [m, n] tiled over a batch).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const bool suffix =
      sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
  if (!suffix)
    throw contract_error("add: shape " + shape_string(sb) + " does not broadcast over " +
                         shape_string(sa));
  const std::size_t block = b.size();
  const std::size_t repeats = a.size() / (block == 0 ? 1 : block);
  std::vector<T> out(a.size());
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  for (std::size_t r = 0; r < repeats; ++r)
    for (std::size_t i = 0; i < block; ++i) out[r * block + i] = pa[r * block + i] + pb[i];
  return detail::make_op<T>(
      sa, std::move(out), {a.node(), b.node()}, [block, repeats](detail::Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        detail::accumulate(pa, self.grad.data(), 0, self.grad.size());
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t r = 0; r < repeats; ++r)
            for (std::size_t i = 0; i < block; ++i) pb.grad[i] += self.grad[r * block + i];
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw contract_error("sub: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return detail::make_op<T>(a.shape(), std::move(out), {a.node(), b.node()},
                            [](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              auto& pb = *self.parents[1];
                              detail::accumulate(pa, self.grad.data(), 0, self.grad.size());
                              if (pb.requires_grad) {
                                pb.ensure_grad();
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  pb.grad[i] -= self.grad[i];
                              }
                            });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw contract_error("mul: shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return detail::make_op<T>(a.shape(), std::move(out), {a.node(), b.node()},
                            [](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              auto& pb = *self.parents[1];
                              if (pa.requires_grad) {
                                pa.ensure_grad();
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  pa.grad[i] += self.grad[i] * pb.value[i];
                              }
                              if (pb.requires_grad) {
                                pb.ensure_grad();
                                for (std::size_t i = 0; i < self.grad.size(); ++i)
                                  pb.grad[i] += self.grad[i] * pa.value[i];
                              }
                            });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()},
                            [factor](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa.grad[i] += self.grad[i] * factor;
                            });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pa.value[i] > T(0)) pa.grad[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// matrix products (rank 2, or rank 3 batched; a rank-2 rhs is shared
// across the batch)

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sa.size() > 3 || sb.size() < 2 || sb.size() > 3 ||
      (sa.size() == 2 && sb.size() == 3))
    throw contract_error("matmul: unsupported ranks " + shape_string(sa) + " and " +
                         shape_string(sb));
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t k2 = sb[sb.size() - 2];
  const std::size_t n = sb[sb.size() - 1];
  if (k != k2)
    throw contract_error("matmul: incompatible shapes " + shape_string(sa) + " and " +
                         shape_string(sb));
  const std::size_t batch = detail::leading_count(sa, 2);
  const bool b_shared = sb.size() == 2;
  if (!b_shared && detail::leading_count(sb, 2) != batch)
    throw contract_error("matmul: batch extents differ: " + shape_string(sa) + " and " +
                         shape_string(sb));
  Shape out_shape = sa;
  out_shape.back() = n;
  std::vector<T> out(batch * m * n, T(0));
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  if (b_shared) {
    detail::gemm_nn(pa, pb, out.data(), batch * m, k, n);
  } else {
    for (std::size_t r = 0; r < batch; ++r)
      detail::gemm_nn(pa + r * m * k, pb + r * k * n, out.data() + r * m * n, m, k, n);
  }
  return detail::make_op<T>(
      std::move(out_shape), std::move(out), {a.node(), b.node()},
      [m, k, n, batch, b_shared](detail::Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const T* g = self.grad.data();
        if (pa.requires_grad) {
          pa.ensure_grad();
          if (b_shared) {
            detail::gemm_nt(g, pb.value.data(), pa.grad.data(), batch * m, n, k);
          } else {
            for (std::size_t r = 0; r < batch; ++r)
              detail::gemm_nt(g + r * m * n, pb.value.data() + r * k * n,
                              pa.grad.data() + r * m * k, m, n, k);
          }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          if (b_shared) {
            detail::gemm_tn(pa.value.data(), g, pb.grad.data(), batch * m, k, n);
          } else {
            for (std::size_t r = 0; r < batch; ++r)
              detail::gemm_tn(pa.value.data() + r * m * k, g + r * m * n,
                              pb.grad.data() + r * k * n, m, k, n);
          }
        }
      });
}

// a * b^T over the last two dims: [.., m, k] x [.., n, k] -> [.., m, n]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size() || sa.size() < 2 || sa.size() > 3)
    throw contract_error("matmul_nt: unsupported ranks " + shape_string(sa) + " and " +
                         shape_string(sb));
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t n = sb[sb.size() - 2];
  if (k != sb[sb.size() - 1] ||
      detail::leading_count(sa, 2) != detail::leading_count(sb, 2))
    throw contract_error("matmul_nt: incompatible shapes " + shape_string(sa) + " and " +
                         shape_string(sb));
  const std::size_t batch = detail::leading_count(sa, 2);
  Shape out_shape = sa;
  out_shape.back() = n;
  std::vector<T> out(batch * m * n, T(0));
  for (std::size_t r = 0; r < batch; ++r)
    detail::gemm_nt(a.data().data() + r * m * k, b.data().data() + r * n * k,
                    out.data() + r * m * n, m, k, n);
  return detail::make_op<T>(
      std::move(out_shape), std::move(out), {a.node(), b.node()},
      [m, k, n, batch](detail::Node<T>& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const T* g = self.grad.data();
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t r = 0; r < batch; ++r)
            detail::gemm_nn(g + r * m * n, pb.value.data() + r * n * k,
                            pa.grad.data() + r * m * k, m, n, k);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t r = 0; r < batch; ++r)
            detail::gemm_tn(g + r * m * n, pa.value.data() + r * m * k,
                            pb.grad.data() + r * n * k, m, n, k);
        }
      });
}

// ---------------------------------------------------------------------------
// row-structured ops over the last dimension

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  if (x.rank() < 1) throw contract_error("softmax_rows: rank-0 input");
  for (T v : x.data())
    if (!std::isfinite(v)) throw numeric_error("softmax_rows: non-finite input");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.size() / n;
  std::vector<T> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xi = x.data().data() + r * n;
    T* yi = out.data() + r * n;
    T mx = xi[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    T sum = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      sum += yi[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < n; ++j) yi[j] *= inv;
  }
  return detail::make_op<T>(x.shape(), std::move(out), {x.node()},
                            [n, rows](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r) {
                                const T* y = self.value.data() + r * n;
                                const T* g = self.grad.data() + r * n;
                                T dot = T(0);
                                for (std::size_t j = 0; j < n; ++j) dot += g[j] * y[j];
                                T* dx = pa.grad.data() + r * n;
                                for (std::size_t j = 0; j < n; ++j)
                                  dx[j] += y[j] * (g[j] - dot);
                              }
                            });
}

// Layer normalization over the feature (last) dimension with learned
// gain/bias vectors.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5)) {
  const std::size_t n = x.shape().back();
  if (gain.shape() != Shape{n} || bias.shape() != Shape{n})
    throw contract_error("layer_norm: gain/bias must be [" + std::to_string(n) + "]");
  const std::size_t rows = x.size() / n;
  std::vector<T> out(x.size());
  auto xhat = std::make_shared<std::vector<T>>(x.size());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xi = x.data().data() + r * n;
    T mean = T(0);
    for (std::size_t j = 0; j < n; ++j) mean += xi[j];
    mean /= T(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      const T d = xi[j] - mean;
      var += d * d;
    }
    var /= T(n);
    const T inv = T(1) / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    T* h = xhat->data() + r * n;
    T* y = out.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) {
      h[j] = (xi[j] - mean) * inv;
      y[j] = h[j] * gain.data()[j] + bias.data()[j];
    }
  }
  return detail::make_op<T>(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [n, rows, xhat, inv_std](detail::Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        if (px.requires_grad) px.ensure_grad();
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* g = self.grad.data() + r * n;
          const T* h = xhat->data() + r * n;
          if (pg.requires_grad)
            for (std::size_t j = 0; j < n; ++j) pg.grad[j] += g[j] * h[j];
          if (pb.requires_grad)
            for (std::size_t j = 0; j < n; ++j) pb.grad[j] += g[j];
          if (px.requires_grad) {
            T mean_gh = T(0), mean_ghh = T(0);
            for (std::size_t j = 0; j < n; ++j) {
              const T gh = g[j] * pg.value[j];
              mean_gh += gh;
              mean_ghh += gh * h[j];
            }
            mean_gh /= T(n);
            mean_ghh /= T(n);
            T* dx = px.grad.data() + r * n;
            const T inv = (*inv_std)[r];
            for (std::size_t j = 0; j < n; ++j)
              dx[j] += inv * (g[j] * pg.value[j] - mean_gh - h[j] * mean_ghh);
          }
        }
      });
}

// 1-D max pooling over non-overlapping segments of the feature dimension.
// The tail is padded (right) with a sentinel that never wins, so the output
// width is ceil(n / segment); the gradient flows to per-segment argmax
// positions only.
template <typename T>
Tensor<T> max_pool_features(const Tensor<T>& x, std::size_t segment) {
  if (segment == 0) throw config_error("max_pool_features: segment must be positive");
  const std::size_t n = x.shape().back();
  const std::size_t out_w = (n + segment - 1) / segment;
  const std::size_t rows = x.size() / n;
  std::vector<T> out(rows * out_w);
  auto argmax = std::make_shared<std::vector<std::size_t>>(rows * out_w);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xi = x.data().data() + r * n;
    for (std::size_t s = 0; s < out_w; ++s) {
      const std::size_t lo = s * segment;
      const std::size_t hi = std::min(lo + segment, n);
      std::size_t best = lo;
      for (std::size_t j = lo + 1; j < hi; ++j)
        if (xi[j] > xi[best]) best = j;
      out[r * out_w + s] = xi[best];
      (*argmax)[r * out_w + s] = r * n + best;
    }
  }
  Shape out_shape = x.shape();
  out_shape.back() = out_w;
  return detail::make_op<T>(std::move(out_shape), std::move(out), {x.node()},
                            [argmax](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa.grad[(*argmax)[i]] += self.grad[i];
                            });
}

// Inverted dropout; the mask is drawn from the caller's stream so the whole
// training run replays from one seed. rate == 0 returns the input unchanged.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, T rate, Rng& rng) {
  if (rate < T(0) || rate >= T(1))
    throw config_error("dropout: rate must lie in [0, 1)");
  if (rate == T(0)) return x;
  const T keep_scale = T(1) / (T(1) - rate);
  auto mask = std::make_shared<std::vector<T>>(x.size());
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T m = rng.uniform() >= static_cast<double>(rate) ? keep_scale : T(0);
    (*mask)[i] = m;
    out[i] = x.data()[i] * m;
  }
  return detail::make_op<T>(x.shape(), std::move(out), {x.node()},
                            [mask](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa.grad[i] += self.grad[i] * (*mask)[i];
                            });
}

// ---------------------------------------------------------------------------
// shape ops

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.size())
    throw contract_error("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  return detail::make_op<T>(std::move(shape), x.data(), {x.node()},
                            [](detail::Node<T>& self) {
                              detail::accumulate(*self.parents[0], self.grad.data(), 0,
                                                 self.grad.size());
                            });
}

template <typename T>
Tensor<T> slice_features(const Tensor<T>& x, std::size_t c0, std::size_t c1) {
  const std::size_t n = x.shape().back();
  if (c0 >= c1 || c1 > n)
    throw contract_error("slice_features: range [" + std::to_string(c0) + ", " +
                         std::to_string(c1) + ") invalid for width " + std::to_string(n));
  const std::size_t w = c1 - c0;
  const std::size_t rows = x.size() / n;
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(x.data().data() + r * n + c0, w, out.data() + r * w);
  Shape out_shape = x.shape();
  out_shape.back() = w;
  return detail::make_op<T>(std::move(out_shape), std::move(out), {x.node()},
                            [n, w, c0, rows](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              for (std::size_t r = 0; r < rows; ++r)
                                for (std::size_t j = 0; j < w; ++j)
                                  pa.grad[r * n + c0 + j] += self.grad[r * w + j];
                            });
}

template <typename T>
Tensor<T> concat_features(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw contract_error("concat_features: no inputs");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::size_t total_w = 0;
  std::vector<std::size_t> widths;
  std::vector<std::shared_ptr<detail::Node<T>>> nodes;
  for (const auto& p : parts) {
    Shape l = p.shape();
    const std::size_t w = l.back();
    l.pop_back();
    if (l != lead)
      throw contract_error("concat_features: leading shapes differ");
    widths.push_back(w);
    total_w += w;
    nodes.push_back(p.node());
  }
  const std::size_t rows = parts[0].size() / widths[0];
  std::vector<T> out(rows * total_w);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(parts[k].data().data() + r * w, w, out.data() + r * total_w + off);
    off += w;
  }
  Shape out_shape = parts[0].shape();
  out_shape.back() = total_w;
  return detail::make_op<T>(std::move(out_shape), std::move(out), std::move(nodes),
                            [widths, total_w, rows](detail::Node<T>& self) {
                              std::size_t off = 0;
                              for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                auto& p = *self.parents[k];
                                const std::size_t w = widths[k];
                                if (p.requires_grad) {
                                  p.ensure_grad();
                                  for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t j = 0; j < w; ++j)
                                      p.grad[r * w + j] += self.grad[r * total_w + off + j];
                                }
                                off += w;
                              }
                            });
}

// ---------------------------------------------------------------------------
// reductions and losses

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T acc = T(0);
  for (T v : x.data()) acc += v;
  return detail::make_op<T>({1}, {acc}, {x.node()}, [](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    const T g = self.grad[0];
    for (auto& v : pa.grad) v += g;
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return scale(sum_all(x), T(1) / static_cast<T>(x.size()));
}

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  Tensor<T> d = sub(pred, target);
  return mean_all(mul(d, d));
}

// Mean softmax cross-entropy over rows of logits [m x c] against integer
// class labels; fused for numerical stability.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels) {
  if (logits.rank() != 2)
    throw contract_error("softmax_cross_entropy: logits must be rank 2, got " +
                         shape_string(logits.shape()));
  const std::size_t m = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  if (labels.size() != m)
    throw contract_error("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(m) + " rows");
  auto probs = std::make_shared<std::vector<T>>(m * c);
  T loss = T(0);
  for (std::size_t r = 0; r < m; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw contract_error("softmax_cross_entropy: label out of range");
    const T* xi = logits.data().data() + r * c;
    T mx = xi[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, xi[j]);
    T sum = T(0);
    T* p = probs->data() + r * c;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(xi[j] - mx);
      sum += p[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < c; ++j) p[j] *= inv;
    loss -= std::log(std::max(p[y], std::numeric_limits<T>::min()));
  }
  loss /= static_cast<T>(m);
  auto labels_copy = std::make_shared<std::vector<int>>(labels);
  return detail::make_op<T>({1}, {loss}, {logits.node()},
                            [probs, labels_copy, m, c](detail::Node<T>& self) {
                              auto& pa = *self.parents[0];
                              if (!pa.requires_grad) return;
                              pa.ensure_grad();
                              const T g = self.grad[0] / static_cast<T>(m);
                              for (std::size_t r = 0; r < m; ++r) {
                                const T* p = probs->data() + r * c;
                                T* dx = pa.grad.data() + r * c;
                                const std::size_t y =
                                    static_cast<std::size_t>((*labels_copy)[r]);
                                for (std::size_t j = 0; j < c; ++j)
                                  dx[j] += g * (p[j] - (j == y ? T(1) : T(0)));
                              }
                            });
}

// ---------------------------------------------------------------------------
// reverse pass

// Accumulates gradients into every tracked leaf reachable from the scalar
// loss, then frees the tape. A second call on the same graph is an error;
// rebuild the forward pass instead.
template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined()) throw contract_error("backward: undefined loss");
  auto root = loss.node();
  if (root->value.size() != 1)
    throw contract_error("backward: loss must be scalar, got shape " +
                         shape_string(root->shape));
  if (root->backward_done)
    throw contract_error("backward: already called on this graph; run a fresh forward pass");
  root->backward_done = true;
  if (!root->requires_grad) return;  // constant loss: nothing reachable

  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> visited;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  visited.insert(root.get());
  stack.emplace_back(root.get(), 0);
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      detail::Node<T>* next = node->parents[idx++].get();
      if (next->requires_grad && visited.insert(next).second) stack.emplace_back(next, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad.assign(1, T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
  // tear down the tape; only leaf gradients survive
  for (detail::Node<T>* node : order) {
    if (!node->leaf) {
      node->parents.clear();
      node->backprop = nullptr;
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

}  // namespace radioloc
