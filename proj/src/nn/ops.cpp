#include "eegdiff/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gemm.hpp"

namespace eegdiff::nn {

using detail::gemm_acc;
using detail::make_result;
using detail::transpose;
using detail::Node;

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op, const char* what) {
  if (a.rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                                ", got " + shape_str(a.shape()));
  }
}

// Grad buffer of parent i, or nullptr if it takes no gradient.
double* parent_grad(Node& self, std::size_t i) {
  auto& p = self.parents[i];
  if (!p || !p->requires_grad) return nullptr;
  return p->ensure_grad().data();
}

std::shared_ptr<Node> node_or_null(const Tensor& t) { return t.defined() ? t.node() : nullptr; }

// Index range [lo, hi) of output positions l with 0 <= l*stride + off < len.
std::pair<std::size_t, std::size_t> valid_range(std::ptrdiff_t off, std::size_t stride, std::size_t len,
                                                std::size_t len_out) {
  std::ptrdiff_t lo = 0;
  if (off < 0) lo = (-off + static_cast<std::ptrdiff_t>(stride) - 1) / static_cast<std::ptrdiff_t>(stride);
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(len) - 1 - off;
  if (last < 0) return {0, 0};
  std::ptrdiff_t hi = last / static_cast<std::ptrdiff_t>(stride) + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(len_out));
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> v(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(v), {a.node(), b.node()}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (double* g = parent_grad(self, k)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> v(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(v), {a.node(), b.node()}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> v(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(v), {a.node(), b.node()}, [](Node& self) {
    const auto& xa = self.parents[0]->value;
    const auto& xb = self.parents[1]->value;
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * xb[i];
    }
    if (double* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * xa[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (auto& x : v) x *= s;
  return make_result(a.shape(), std::move(v), {a.node()}, [s](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (auto& x : v) x += s;
  return make_result(a.shape(), std::move(v), {a.node()}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_result({}, {s}, {a.node()}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const double go = self.grad[0];
      const auto n = self.parents[0]->value.size();
      for (std::size_t i = 0; i < n; ++i) g[i] += go;
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor leaky_relu(const Tensor& a, double negative_slope) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (auto& x : v) x = x > 0.0 ? x : negative_slope * x;
  return make_result(a.shape(), std::move(v), {a.node()}, [negative_slope](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const auto& x = self.parents[0]->value;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i] * (x[i] > 0.0 ? 1.0 : negative_slope);
      }
    }
  });
}

Tensor relu(const Tensor& a) { return leaky_relu(a, 0.0); }

Tensor leaky_relu_slopes(const Tensor& a, double negative_slope) {
  std::vector<double> v(a.numel());
  const auto x = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = x[i] > 0.0 ? 1.0 : negative_slope;
  return Tensor::from(a.shape(), std::move(v));
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw std::invalid_argument("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<double> v(a.data().begin(), a.data().end());
  return make_result(std::move(shape), std::move(v), {a.node()}, [](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor concat_channels(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: nothing to concatenate");
  const auto& s0 = parts[0].shape();
  if (s0.size() < 2) throw std::invalid_argument("concat_channels: rank must be >= 2");
  std::size_t inner = 1;
  for (std::size_t i = 2; i < s0.size(); ++i) inner *= s0[i];
  std::size_t channels = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size() || s[0] != s0[0] || !std::equal(s.begin() + 2, s.end(), s0.begin() + 2)) {
      throw std::invalid_argument("concat_channels: incompatible shapes " + shape_str(s0) + " and " +
                                  shape_str(s));
    }
    offsets.push_back(channels);
    channels += s[1];
  }
  const std::size_t batch = s0[0];
  Shape out_shape = s0;
  out_shape[1] = channels;
  std::vector<double> v(batch * channels * inner);
  std::vector<std::size_t> widths;
  std::vector<std::shared_ptr<Node>> nodes;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto c = parts[k].dim(1);
    widths.push_back(c);
    nodes.push_back(parts[k].node());
    const auto src = parts[k].data();
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(src.data() + b * c * inner, c * inner, v.data() + (b * channels + offsets[k]) * inner);
    }
  }
  return make_result(std::move(out_shape), std::move(v), std::move(nodes),
                     [batch, channels, inner, offsets, widths](Node& self) {
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         double* g = parent_grad(self, k);
                         if (!g) continue;
                         const auto c = widths[k];
                         for (std::size_t b = 0; b < batch; ++b) {
                           const double* src = self.grad.data() + (b * channels + offsets[k]) * inner;
                           double* dst = g + b * c * inner;
                           for (std::size_t i = 0; i < c * inner; ++i) dst[i] += src[i];
                         }
                       }
                     });
}

namespace {

// col[(i*K + k), l] = x[i, l*stride + k - pad], zero outside [0, L).
void im2col(const double* x, std::size_t C, std::size_t L, std::size_t K, std::size_t stride,
            std::size_t padding, std::size_t Lo, double* col) {
  for (std::size_t i = 0; i < C; ++i) {
    const double* xr = x + i * L;
    for (std::size_t k = 0; k < K; ++k) {
      double* dst = col + (i * K + k) * Lo;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padding);
      const auto [lo, hi] = valid_range(off, stride, L, Lo);
      std::fill(dst, dst + Lo, 0.0);
      for (std::size_t l = lo; l < hi; ++l) dst[l] = xr[static_cast<std::ptrdiff_t>(l * stride) + off];
    }
  }
}

// Adjoint of im2col: x[i, l*stride + k - pad] += col[(i*K + k), l].
void col2im_acc(const double* col, std::size_t C, std::size_t L, std::size_t K, std::size_t stride,
                std::size_t padding, std::size_t Lo, double* x) {
  for (std::size_t i = 0; i < C; ++i) {
    double* xr = x + i * L;
    for (std::size_t k = 0; k < K; ++k) {
      const double* src = col + (i * K + k) * Lo;
      const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padding);
      const auto [lo, hi] = valid_range(off, stride, L, Lo);
      for (std::size_t l = lo; l < hi; ++l) xr[static_cast<std::ptrdiff_t>(l * stride) + off] += src[l];
    }
  }
}

void add_row_sums(const double* g, std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += g[r * cols + c];
    out[r] += acc;
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(weight, 3, "conv1d", "weight");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  const std::size_t B = x.dim(0), Ci = x.dim(1), L = x.dim(2);
  const std::size_t Co = weight.dim(0), K = weight.dim(2);
  if (weight.dim(1) != Ci) {
    throw std::invalid_argument("conv1d: input has " + std::to_string(Ci) + " channels, weight " +
                                shape_str(weight.shape()) + " expects " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && bias.shape() != Shape{Co}) {
    throw std::invalid_argument("conv1d: bias " + shape_str(bias.shape()) + " for " + std::to_string(Co) +
                                " output channels");
  }
  if (L + 2 * padding < K) {
    throw std::invalid_argument("conv1d: kernel " + std::to_string(K) + " exceeds padded length " +
                                std::to_string(L + 2 * padding));
  }
  const std::size_t Lo = (L + 2 * padding - K) / stride + 1;
  const std::size_t CK = Ci * K;
  const auto xv = x.data();
  const auto wv = weight.data();
  std::vector<double> out(B * Co * Lo, 0.0);
  std::vector<double> col(CK * Lo);
  for (std::size_t b = 0; b < B; ++b) {
    double* y = out.data() + b * Co * Lo;
    if (bias.defined())
      for (std::size_t o = 0; o < Co; ++o) std::fill_n(y + o * Lo, Lo, bias.data()[o]);
    im2col(xv.data() + b * Ci * L, Ci, L, K, stride, padding, Lo, col.data());
    gemm_acc(Co, Lo, CK, wv.data(), CK, col.data(), Lo, y, Lo);
  }
  return make_result({B, Co, Lo}, std::move(out), {x.node(), weight.node(), node_or_null(bias)},
                     [=](Node& self) {
                       const auto& xs = self.parents[0]->value;
                       const auto& ws = self.parents[1]->value;
                       const auto& go = self.grad;
                       double* gx = parent_grad(self, 0);
                       double* gw = parent_grad(self, 1);
                       double* gb = parent_grad(self, 2);
                       std::vector<double> colb(CK * Lo), colT, wT, gcol;
                       if (gw) colT.resize(Lo * CK);
                       if (gx) {
                         wT.resize(CK * Co);
                         transpose(Co, CK, ws.data(), wT.data());
                         gcol.resize(CK * Lo);
                       }
                       for (std::size_t b = 0; b < B; ++b) {
                         const double* g = go.data() + b * Co * Lo;
                         if (gb) add_row_sums(g, Co, Lo, gb);
                         if (gw) {
                           im2col(xs.data() + b * Ci * L, Ci, L, K, stride, padding, Lo, colb.data());
                           transpose(CK, Lo, colb.data(), colT.data());
                           gemm_acc(Co, CK, Lo, g, Lo, colT.data(), CK, gw, CK);
                         }
                         if (gx) {
                           std::fill(gcol.begin(), gcol.end(), 0.0);
                           gemm_acc(CK, Lo, Co, wT.data(), Co, g, Lo, gcol.data(), Lo);
                           col2im_acc(gcol.data(), Ci, L, K, stride, padding, Lo, gx + b * Ci * L);
                         }
                       }
                     });
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
                        std::size_t padding) {
  require_rank(x, 3, "conv_transpose1d", "input");
  require_rank(weight, 3, "conv_transpose1d", "weight");
  if (stride < 1) throw std::invalid_argument("conv_transpose1d: stride must be >= 1");
  const std::size_t B = x.dim(0), Ci = x.dim(1), L = x.dim(2);
  const std::size_t Co = weight.dim(1), K = weight.dim(2);
  if (weight.dim(0) != Ci) {
    throw std::invalid_argument("conv_transpose1d: input has " + std::to_string(Ci) + " channels, weight " +
                                shape_str(weight.shape()) + " expects " + std::to_string(weight.dim(0)));
  }
  if (bias.defined() && bias.shape() != Shape{Co}) {
    throw std::invalid_argument("conv_transpose1d: bias " + shape_str(bias.shape()) + " for " +
                                std::to_string(Co) + " output channels");
  }
  if (L == 0 || (L - 1) * stride + K <= 2 * padding) {
    throw std::invalid_argument("conv_transpose1d: padding " + std::to_string(padding) +
                                " leaves no output for length " + std::to_string(L));
  }
  const std::size_t Lo = (L - 1) * stride + K - 2 * padding;
  const std::size_t CK = Co * K;
  const auto xv = x.data();
  const auto wv = weight.data();
  // Weight as a [Ci x Co*K] matrix; the output is col2im of W^T x.
  std::vector<double> wT(CK * Ci);
  transpose(Ci, CK, wv.data(), wT.data());
  std::vector<double> out(B * Co * Lo, 0.0);
  std::vector<double> col(CK * L);
  for (std::size_t b = 0; b < B; ++b) {
    double* y = out.data() + b * Co * Lo;
    if (bias.defined())
      for (std::size_t o = 0; o < Co; ++o) std::fill_n(y + o * Lo, Lo, bias.data()[o]);
    std::fill(col.begin(), col.end(), 0.0);
    gemm_acc(CK, L, Ci, wT.data(), Ci, xv.data() + b * Ci * L, L, col.data(), L);
    col2im_acc(col.data(), Co, Lo, K, stride, padding, L, y);
  }
  return make_result({B, Co, Lo}, std::move(out), {x.node(), weight.node(), node_or_null(bias)},
                     [=](Node& self) {
                       const auto& xs = self.parents[0]->value;
                       const auto& ws = self.parents[1]->value;
                       const auto& go = self.grad;
                       double* gx = parent_grad(self, 0);
                       double* gw = parent_grad(self, 1);
                       double* gb = parent_grad(self, 2);
                       std::vector<double> gcol(CK * L), gcolT;
                       if (gw) gcolT.resize(L * CK);
                       for (std::size_t b = 0; b < B; ++b) {
                         const double* g = go.data() + b * Co * Lo;
                         if (gb) add_row_sums(g, Co, Lo, gb);
                         im2col(g, Co, Lo, K, stride, padding, L, gcol.data());
                         if (gx) gemm_acc(Ci, L, CK, ws.data(), CK, gcol.data(), L, gx + b * Ci * L, L);
                         if (gw) {
                           transpose(CK, L, gcol.data(), gcolT.data());
                           gemm_acc(Ci, CK, L, xs.data() + b * Ci * L, L, gcolT.data(), CK, gw, CK);
                         }
                       }
                     });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  const std::size_t B = x.dim(0), Fi = x.dim(1), Fo = weight.dim(0);
  if (weight.dim(1) != Fi) {
    throw std::invalid_argument("linear: input has " + std::to_string(Fi) + " features, weight is " +
                                shape_str(weight.shape()));
  }
  if (bias.defined() && bias.shape() != Shape{Fo}) {
    throw std::invalid_argument("linear: bias " + shape_str(bias.shape()) + " for " + std::to_string(Fo) +
                                " outputs");
  }
  const auto xv = x.data();
  const auto wv = weight.data();
  std::vector<double> out(B * Fo);
  for (std::size_t b = 0; b < B; ++b) {
    const double* xr = xv.data() + b * Fi;
    for (std::size_t o = 0; o < Fo; ++o) {
      const double* wr = wv.data() + o * Fi;
      double acc = bias.defined() ? bias.data()[o] : 0.0;
      for (std::size_t i = 0; i < Fi; ++i) acc += wr[i] * xr[i];
      out[b * Fo + o] = acc;
    }
  }
  return make_result({B, Fo}, std::move(out), {x.node(), weight.node(), node_or_null(bias)},
                     [=](Node& self) {
                       const auto& xs = self.parents[0]->value;
                       const auto& ws = self.parents[1]->value;
                       double* gx = parent_grad(self, 0);
                       double* gw = parent_grad(self, 1);
                       double* gb = parent_grad(self, 2);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t o = 0; o < Fo; ++o) {
                           const double g = self.grad[b * Fo + o];
                           if (g == 0.0) continue;
                           if (gb) gb[o] += g;
                           if (gw) {
                             double* gwr = gw + o * Fi;
                             const double* xr = xs.data() + b * Fi;
                             for (std::size_t i = 0; i < Fi; ++i) gwr[i] += g * xr[i];
                           }
                           if (gx) {
                             double* gxr = gx + b * Fi;
                             const double* wr = ws.data() + o * Fi;
                             for (std::size_t i = 0; i < Fi; ++i) gxr[i] += g * wr[i];
                           }
                         }
                       }
                     });
}

Tensor batch_norm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                        std::vector<double>* batch_mean, std::vector<double>* batch_var) {
  require_rank(x, 3, "batch_norm", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C}) {
    throw std::invalid_argument("batch_norm: affine parameters must have shape [" + std::to_string(C) + "]");
  }
  const std::size_t N = B * L;
  if (N < 2) throw std::invalid_argument("batch_norm: training mode needs batch*length >= 2 per channel");
  const auto xv = x.data();
  std::vector<double> mu(C, 0.0), var(C, 0.0), inv_sd(C);
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double* r = xv.data() + (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) s += r[l];
    }
    mu[c] = s / static_cast<double>(N);
    double ss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const double* r = xv.data() + (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) ss += (r[l] - mu[c]) * (r[l] - mu[c]);
    }
    var[c] = ss / static_cast<double>(N);
    inv_sd[c] = 1.0 / std::sqrt(var[c] + eps);
  }
  std::vector<double> xhat(xv.size()), out(xv.size());
  const auto gv = gamma.data(), bv = beta.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) {
        xhat[base + l] = (xv[base + l] - mu[c]) * inv_sd[c];
        out[base + l] = gv[c] * xhat[base + l] + bv[c];
      }
    }
  }
  if (batch_mean) *batch_mean = mu;
  if (batch_var) *batch_var = var;
  return make_result(x.shape(), std::move(out), {x.node(), gamma.node(), beta.node()},
                     [=, xhat = std::move(xhat)](Node& self) {
                       const auto& gam = self.parents[1]->value;
                       double* gx = parent_grad(self, 0);
                       double* gg = parent_grad(self, 1);
                       double* gb = parent_grad(self, 2);
                       const auto& go = self.grad;
                       for (std::size_t c = 0; c < C; ++c) {
                         double sg = 0.0, sgx = 0.0;
                         for (std::size_t b = 0; b < B; ++b) {
                           const std::size_t base = (b * C + c) * L;
                           for (std::size_t l = 0; l < L; ++l) {
                             sg += go[base + l];
                             sgx += go[base + l] * xhat[base + l];
                           }
                         }
                         if (gb) gb[c] += sg;
                         if (gg) gg[c] += sgx;
                         if (gx) {
                           const double k = gam[c] * inv_sd[c] / static_cast<double>(N);
                           for (std::size_t b = 0; b < B; ++b) {
                             const std::size_t base = (b * C + c) * L;
                             for (std::size_t l = 0; l < L; ++l) {
                               gx[base + l] += k * (static_cast<double>(N) * go[base + l] - sg - xhat[base + l] * sgx);
                             }
                           }
                         }
                       }
                     });
}

Tensor batch_norm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta, std::span<const double> mean,
                       std::span<const double> var, double eps) {
  require_rank(x, 3, "batch_norm", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (gamma.shape() != Shape{C} || beta.shape() != Shape{C} || mean.size() != C || var.size() != C) {
    throw std::invalid_argument("batch_norm: parameter/statistic sizes must equal channel count " +
                                std::to_string(C));
  }
  std::vector<double> inv_sd(C);
  for (std::size_t c = 0; c < C; ++c) inv_sd[c] = 1.0 / std::sqrt(var[c] + eps);
  std::vector<double> mu(mean.begin(), mean.end());
  const auto xv = x.data(), gv = gamma.data(), bv = beta.data();
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) out[base + l] = gv[c] * (xv[base + l] - mu[c]) * inv_sd[c] + bv[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x.node(), gamma.node(), beta.node()},
                     [=](Node& self) {
                       const auto& xs = self.parents[0]->value;
                       const auto& gam = self.parents[1]->value;
                       double* gx = parent_grad(self, 0);
                       double* gg = parent_grad(self, 1);
                       double* gb = parent_grad(self, 2);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t base = (b * C + c) * L;
                           for (std::size_t l = 0; l < L; ++l) {
                             const double g = self.grad[base + l];
                             if (gb) gb[c] += g;
                             if (gg) gg[c] += g * (xs[base + l] - mu[c]) * inv_sd[c];
                             if (gx) gx[base + l] += g * gam[c] * inv_sd[c];
                           }
                         }
                       }
                     });
}

Tensor add_channel_broadcast(const Tensor& x, const Tensor& e) {
  require_rank(x, 3, "add_channel_broadcast", "input");
  require_rank(e, 2, "add_channel_broadcast", "embedding");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (e.dim(0) != B || e.dim(1) != C) {
    throw std::invalid_argument("add_channel_broadcast: " + shape_str(e.shape()) + " does not match " +
                                shape_str(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto ev = e.data();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t l = 0; l < L; ++l) out[bc * L + l] += ev[bc];
  }
  return make_result(x.shape(), std::move(out), {x.node(), e.node()}, [=](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (double* g = parent_grad(self, 1)) {
      for (std::size_t bc = 0; bc < B * C; ++bc) {
        double acc = 0.0;
        for (std::size_t l = 0; l < L; ++l) acc += self.grad[bc * L + l];
        g[bc] += acc;
      }
    }
  });
}

Tensor max_pool1d(const Tensor& x, std::size_t kernel) {
  require_rank(x, 3, "max_pool1d", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (kernel < 1 || kernel > L) throw std::invalid_argument("max_pool1d: kernel must be in [1, L]");
  const std::size_t Lo = L / kernel;
  const auto xv = x.data();
  std::vector<double> out(B * C * Lo);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    for (std::size_t j = 0; j < Lo; ++j) {
      std::size_t best = bc * L + j * kernel;
      for (std::size_t k = 1; k < kernel; ++k) {
        const std::size_t idx = bc * L + j * kernel + k;
        if (xv[idx] > xv[best]) best = idx;
      }
      out[bc * Lo + j] = xv[best];
      argmax[bc * Lo + j] = best;
    }
  }
  return make_result({B, C, Lo}, std::move(out), {x.node()}, [argmax = std::move(argmax)](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[argmax[i]] += self.grad[i];
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const auto xv = x.data();
  std::vector<double> out(B * C, 0.0);
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) s += xv[bc * L + l];
    out[bc] = s / static_cast<double>(L);
  }
  return make_result({B, C}, std::move(out), {x.node()}, [=](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double v = self.grad[bc] / static_cast<double>(L);
        for (std::size_t l = 0; l < L; ++l) g[bc * L + l] += v;
      }
    }
  });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  const auto p = pred.data(), t = target.data();
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  return make_result({}, {s / n}, {pred.node(), target.node()}, [n](Node& self) {
    const auto& pv = self.parents[0]->value;
    const auto& tv = self.parents[1]->value;
    const double k = 2.0 * self.grad[0] / n;
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < pv.size(); ++i) g[i] += k * (pv[i] - tv[i]);
    }
    if (double* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < pv.size(); ++i) g[i] -= k * (pv[i] - tv[i]);
    }
  });
}

namespace {

std::vector<double> softmax_rows(std::span<const double> z, std::size_t B, std::size_t K) {
  std::vector<double> p(B * K);
  for (std::size_t b = 0; b < B; ++b) {
    const double* r = z.data() + b * K;
    const double m = *std::max_element(r, r + K);
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += (p[b * K + k] = std::exp(r[k] - m));
    for (std::size_t k = 0; k < K; ++k) p[b * K + k] /= s;
  }
  return p;
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  require_rank(logits, 2, "softmax", "logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  auto p = softmax_rows(logits.data(), B, K);
  return make_result(logits.shape(), p, {logits.node()}, [=](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      for (std::size_t b = 0; b < B; ++b) {
        double dot = 0.0;
        for (std::size_t k = 0; k < K; ++k) dot += self.grad[b * K + k] * p[b * K + k];
        for (std::size_t k = 0; k < K; ++k) g[b * K + k] += p[b * K + k] * (self.grad[b * K + k] - dot);
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy", "logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (labels.size() != B) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                                std::to_string(B));
  }
  std::vector<int> y(labels.begin(), labels.end());
  for (int l : y) {
    if (l < 0 || static_cast<std::size_t>(l) >= K) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(K) + ")");
    }
  }
  auto p = softmax_rows(logits.data(), B, K);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    loss -= std::log(std::max(p[b * K + static_cast<std::size_t>(y[b])], std::numeric_limits<double>::min()));
  }
  loss /= static_cast<double>(B);
  return make_result({}, {loss}, {logits.node()}, [=, p = std::move(p)](Node& self) {
    if (double* g = parent_grad(self, 0)) {
      const double k = self.grad[0] / static_cast<double>(B);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t j = 0; j < K; ++j) {
          g[b * K + j] += k * (p[b * K + j] - (static_cast<int>(j) == y[b] ? 1.0 : 0.0));
        }
      }
    }
  });
}

}  // namespace eegdiff::nn
