#include "arnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "arnet/error.hpp"

namespace arnet::ops {
namespace {

struct SeqDims {
  std::size_t batch = 1;
  std::size_t time = 0;
  std::size_t chan = 0;
  bool batched = false;
};

SeqDims seq_dims(const Tensor& t, const char* op) {
  if (t.rank() == 2) return {1, t.dim(0), t.dim(1), false};
  if (t.rank() == 3) return {t.dim(0), t.dim(1), t.dim(2), true};
  throw ShapeError(std::string(op) + ": expected [T x C] or [B x T x C], got " + t.shape_string());
}

Shape seq_shape(const SeqDims& d, std::size_t time, std::size_t chan) {
  if (d.batched) return {d.batch, time, chan};
  return {time, chan};
}

// Rows of a vector-valued tensor: [D] -> 1 row, [B x D] -> B rows.
struct VecDims {
  std::size_t rows = 1;
  std::size_t width = 0;
  bool batched = false;
};

VecDims vec_dims(const Tensor& t, const char* op) {
  if (t.rank() == 1) return {1, t.dim(0), false};
  if (t.rank() == 2) return {t.dim(0), t.dim(1), true};
  throw ShapeError(std::string(op) + ": expected [D] or [B x D], got " + t.shape_string());
}

inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_vector(const Tensor& t, std::size_t n, const char* op, const char* what) {
  if (t.rank() != 1 || t.dim(0) != n) {
    throw ShapeError(std::string(op) + ": " + what + " must be [" + std::to_string(n) + "], got " +
                     t.shape_string());
  }
}

}  // namespace

Var conv1d(Graph& g, Var x, Var weight, Var bias, std::size_t stride, std::size_t dilation) {
  const Tensor& X = g.value(x);
  const Tensor& W = g.value(weight);
  const Tensor& Bv = g.value(bias);
  const SeqDims d = seq_dims(X, "conv1d");
  if (stride == 0 || dilation == 0) throw ShapeError("conv1d: stride and dilation must be positive");
  if (W.rank() != 3 || W.dim(1) != d.chan) {
    throw ShapeError("conv1d: weight " + W.shape_string() + " does not match input " + X.shape_string());
  }
  const std::size_t c_out = W.dim(0);
  const std::size_t c_in = d.chan;
  const std::size_t k_len = W.dim(2);
  require_vector(Bv, c_out, "conv1d", "bias");
  const std::size_t span = dilation * (k_len - 1) + 1;
  if (d.time < span) {
    throw ShapeError("conv1d: input " + X.shape_string() + " is shorter than kernel span " +
                     std::to_string(span) + " of weight " + W.shape_string());
  }
  const std::size_t t_out = (d.time - span) / stride + 1;

  // [K][C_out][C_in] so the inner products run over contiguous channels.
  std::vector<double> wt(k_len * c_out * c_in);
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t c = 0; c < c_in; ++c)
      for (std::size_t k = 0; k < k_len; ++k) wt[(k * c_out + o) * c_in + c] = W[(o * c_in + c) * k_len + k];

  Tensor out(seq_shape(d, t_out, c_out));
  const double* xd = X.data().data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t t = 0; t < t_out; ++t) {
      double* y = &out[(b * t_out + t) * c_out];
      std::copy(Bv.data().begin(), Bv.data().end(), y);
      for (std::size_t k = 0; k < k_len; ++k) {
        const double* xr = xd + (b * d.time + t * stride + k * dilation) * c_in;
        const double* wk = &wt[k * c_out * c_in];
        for (std::size_t o = 0; o < c_out; ++o) y[o] += dot(xr, wk + o * c_in, c_in);
      }
    }
  }

  return g.record(std::move(out), {x, weight, bias},
                  [=, wt = std::move(wt)](Graph& gr, std::span<const double> gy) {
                    const double* xv = gr.value(x).data().data();
                    auto gx = gr.grad_buffer(x);
                    auto gw = gr.grad_buffer(weight);
                    auto gb = gr.grad_buffer(bias);
                    std::vector<double> gwt(gw.empty() ? 0 : wt.size(), 0.0);
                    for (std::size_t b = 0; b < d.batch; ++b) {
                      for (std::size_t t = 0; t < t_out; ++t) {
                        const double* gyr = &gy[(b * t_out + t) * c_out];
                        if (!gb.empty()) axpy(1.0, gyr, gb.data(), c_out);
                        for (std::size_t k = 0; k < k_len; ++k) {
                          const std::size_t row = (b * d.time + t * stride + k * dilation) * c_in;
                          const double* wk = &wt[k * c_out * c_in];
                          if (!gx.empty()) {
                            double* gxr = gx.data() + row;
                            for (std::size_t o = 0; o < c_out; ++o) axpy(gyr[o], wk + o * c_in, gxr, c_in);
                          }
                          if (!gwt.empty()) {
                            double* gk = &gwt[k * c_out * c_in];
                            for (std::size_t o = 0; o < c_out; ++o) axpy(gyr[o], xv + row, gk + o * c_in, c_in);
                          }
                        }
                      }
                    }
                    if (!gw.empty()) {
                      for (std::size_t o = 0; o < c_out; ++o)
                        for (std::size_t c = 0; c < c_in; ++c)
                          for (std::size_t k = 0; k < k_len; ++k)
                            gw[(o * c_in + c) * k_len + k] += gwt[(k * c_out + o) * c_in + c];
                    }
                  });
}

Var maxpool1d(Graph& g, Var x, std::size_t kernel, std::size_t stride) {
  const Tensor& X = g.value(x);
  const SeqDims d = seq_dims(X, "maxpool1d");
  if (kernel == 0 || stride == 0) throw ShapeError("maxpool1d: kernel and stride must be positive");
  if (d.time < kernel) {
    throw ShapeError("maxpool1d: input " + X.shape_string() + " is shorter than kernel " + std::to_string(kernel));
  }
  const std::size_t t_out = (d.time - kernel) / stride + 1;
  const std::size_t c = d.chan;
  Tensor out(seq_shape(d, t_out, c));
  std::vector<std::size_t> arg(out.size());
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t t = 0; t < t_out; ++t) {
      const std::size_t start = b * d.time + t * stride;
      double* y = &out[(b * t_out + t) * c];
      std::size_t* a = &arg[(b * t_out + t) * c];
      const double* first = &X[start * c];
      std::copy(first, first + c, y);
      std::fill(a, a + c, start);
      for (std::size_t j = 1; j < kernel; ++j) {
        const double* row = &X[(start + j) * c];
        for (std::size_t ch = 0; ch < c; ++ch) {
          if (row[ch] > y[ch]) {
            y[ch] = row[ch];
            a[ch] = start + j;
          }
        }
      }
    }
  }
  return g.record(std::move(out), {x}, [=, arg = std::move(arg)](Graph& gr, std::span<const double> gy) {
    auto gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[arg[i] * c + i % c] += gy[i];
  });
}

namespace {

// Shared body of both batch-norm entry points. `update` is null in infer mode.
Var batchnorm_impl(Graph& g, Var x, Var gain, Var offset, const Tensor& run_mean, const Tensor& run_var,
                   BnRunning* update, BnMode mode, BnStats stats) {
  const Tensor& X = g.value(x);
  const SeqDims d = seq_dims(X, "batchnorm");
  const std::size_t c = d.chan;
  require_vector(g.value(gain), c, "batchnorm", "gain");
  require_vector(g.value(offset), c, "batchnorm", "offset");
  require_vector(run_mean, c, "batchnorm", "running mean");
  require_vector(run_var, c, "batchnorm", "running var");

  const bool train = mode == BnMode::train;
  const std::size_t groups = (train && stats == BnStats::utterance) ? d.batch : 1;
  const std::size_t rows = d.batch * d.time / groups;
  if (train && rows < 2) {
    throw ShapeError("batchnorm: train mode needs at least 2 rows per group, input " + X.shape_string());
  }

  // Per (group, channel): mean and inverse std used for normalization.
  std::vector<double> mean(groups * c, 0.0), inv_std(groups * c, 0.0);
  if (train) {
    std::vector<double> var(groups * c, 0.0);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      double* m = &mean[gi * c];
      double* v = &var[gi * c];
      for (std::size_t r = 0; r < rows; ++r) axpy(1.0, &X[(gi * rows + r) * c], m, c);
      for (std::size_t ch = 0; ch < c; ++ch) m[ch] /= static_cast<double>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = &X[(gi * rows + r) * c];
        for (std::size_t ch = 0; ch < c; ++ch) v[ch] += (xr[ch] - m[ch]) * (xr[ch] - m[ch]);
      }
      for (std::size_t ch = 0; ch < c; ++ch) {
        v[ch] /= static_cast<double>(rows);
        inv_std[gi * c + ch] = 1.0 / std::sqrt(v[ch] + kBnEpsilon);
      }
    }
    Tensor& rm = *update->mean;
    Tensor& rv = *update->var;
    const double momentum = update->momentum;
    for (std::size_t ch = 0; ch < c; ++ch) {
      double gm = 0.0, gv = 0.0;
      for (std::size_t gi = 0; gi < groups; ++gi) {
        gm += mean[gi * c + ch];
        gv += var[gi * c + ch];
      }
      gm /= static_cast<double>(groups);
      gv /= static_cast<double>(groups);
      rm[ch] = (1.0 - momentum) * rm[ch] + momentum * gm;
      rv[ch] = (1.0 - momentum) * rv[ch] + momentum * gv;
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean[ch] = run_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(run_var[ch] + kBnEpsilon);
    }
  }

  const Tensor& gn = g.value(gain);
  const Tensor& of = g.value(offset);
  Tensor out(X.shape());
  std::vector<double> xhat(X.size());
  for (std::size_t gi = 0; gi < groups; ++gi) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = (gi * rows + r) * c;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double h = (X[base + ch] - mean[gi * c + ch]) * inv_std[gi * c + ch];
        xhat[base + ch] = h;
        out[base + ch] = gn[ch] * h + of[ch];
      }
    }
  }

  return g.record(std::move(out), {x, gain, offset},
                  [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& gr,
                                                                             std::span<const double> gy) {
                    const Tensor& gnv = gr.value(gain);
                    auto gx = gr.grad_buffer(x);
                    auto ggain = gr.grad_buffer(gain);
                    auto goff = gr.grad_buffer(offset);
                    const double n = static_cast<double>(rows);
                    for (std::size_t gi = 0; gi < groups; ++gi) {
                      std::vector<double> sum_dy(c, 0.0), sum_dy_xhat(c, 0.0);
                      for (std::size_t r = 0; r < rows; ++r) {
                        const std::size_t base = (gi * rows + r) * c;
                        for (std::size_t ch = 0; ch < c; ++ch) {
                          sum_dy[ch] += gy[base + ch];
                          sum_dy_xhat[ch] += gy[base + ch] * xhat[base + ch];
                        }
                      }
                      if (!ggain.empty()) axpy(1.0, sum_dy_xhat.data(), ggain.data(), c);
                      if (!goff.empty()) axpy(1.0, sum_dy.data(), goff.data(), c);
                      if (gx.empty()) continue;
                      for (std::size_t r = 0; r < rows; ++r) {
                        const std::size_t base = (gi * rows + r) * c;
                        for (std::size_t ch = 0; ch < c; ++ch) {
                          const double s = gnv[ch] * inv_std[gi * c + ch];
                          if (train) {
                            gx[base + ch] += s / n *
                                             (n * gy[base + ch] - sum_dy[ch] - xhat[base + ch] * sum_dy_xhat[ch]);
                          } else {
                            gx[base + ch] += s * gy[base + ch];
                          }
                        }
                      }
                    }
                  });
}

}  // namespace

Var batchnorm(Graph& g, Var x, Var gain, Var offset, BnRunning running, BnMode mode, BnStats stats) {
  if (!running.mean || !running.var) throw ShapeError("batchnorm: running statistics are required");
  return batchnorm_impl(g, x, gain, offset, *running.mean, *running.var, mode == BnMode::train ? &running : nullptr,
                        mode, stats);
}

Var batchnorm_infer(Graph& g, Var x, Var gain, Var offset, const Tensor& running_mean, const Tensor& running_var) {
  return batchnorm_impl(g, x, gain, offset, running_mean, running_var, nullptr, BnMode::infer, BnStats::batch);
}

Var leaky_relu(Graph& g, Var x, double slope) {
  const Tensor& X = g.value(x);
  Tensor out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = X[i] >= 0.0 ? X[i] : slope * X[i];
  return g.record(std::move(out), {x}, [=](Graph& gr, std::span<const double> gy) {
    const Tensor& xv = gr.value(x);
    auto gx = gr.grad_buffer(x);
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += xv[i] >= 0.0 ? gy[i] : slope * gy[i];
  });
}

Var gru(Graph& g, Var seq, const GruWeights& w) {
  const Tensor& X = g.value(seq);
  const SeqDims d = seq_dims(X, "gru");
  const Tensor& Wih = g.value(w.w_ih);
  const Tensor& Whh = g.value(w.w_hh);
  if (Whh.rank() != 2 || Whh.dim(0) % 3 != 0 || Whh.dim(1) * 3 != Whh.dim(0)) {
    throw ShapeError("gru: recurrent weight must be [3H x H], got " + Whh.shape_string());
  }
  const std::size_t h = Whh.dim(1);
  const std::size_t cin = d.chan;
  if (Wih.rank() != 2 || Wih.dim(0) != 3 * h || Wih.dim(1) != cin) {
    throw ShapeError("gru: input weight " + Wih.shape_string() + " does not match input " + X.shape_string() +
                     " with hidden size " + std::to_string(h));
  }
  require_vector(g.value(w.b_ih), 3 * h, "gru", "input bias");
  require_vector(g.value(w.b_hh), 3 * h, "gru", "recurrent bias");
  const Tensor& bih = g.value(w.b_ih);
  const Tensor& bhh = g.value(w.b_hh);
  const std::size_t T = d.time;
  const std::size_t B = d.batch;
  const std::size_t g3 = 3 * h;

  // Saved per (b, t): gates r, z, candidate n, the recurrent candidate term
  // W_hn h + b_hn, and the incoming hidden state.
  struct Cache {
    std::vector<double> r, z, n, ghn, hprev;
  };
  Cache cache;
  const std::size_t steps = B * T;
  cache.r.resize(steps * h);
  cache.z.resize(steps * h);
  cache.n.resize(steps * h);
  cache.ghn.resize(steps * h);
  cache.hprev.resize(steps * h);

  Tensor out(d.batched ? Shape{B, h} : Shape{h});
  std::vector<double> hs(h), gi(g3), gh(g3);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(hs.begin(), hs.end(), 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double* xt = &X[(b * T + t) * cin];
      for (std::size_t j = 0; j < g3; ++j) {
        gi[j] = bih[j] + dot(&Wih[j * cin], xt, cin);
        gh[j] = bhh[j] + dot(&Whh[j * h], hs.data(), h);
      }
      const std::size_t s = (b * T + t) * h;
      std::copy(hs.begin(), hs.end(), &cache.hprev[s]);
      for (std::size_t i = 0; i < h; ++i) {
        const double r = sigmoid(gi[i] + gh[i]);
        const double z = sigmoid(gi[h + i] + gh[h + i]);
        const double n = std::tanh(gi[2 * h + i] + r * gh[2 * h + i]);
        cache.r[s + i] = r;
        cache.z[s + i] = z;
        cache.n[s + i] = n;
        cache.ghn[s + i] = gh[2 * h + i];
        hs[i] = (1.0 - z) * n + z * hs[i];
      }
    }
    std::copy(hs.begin(), hs.end(), &out[b * h]);
  }

  return g.record(
      std::move(out), {seq, w.w_ih, w.w_hh, w.b_ih, w.b_hh},
      [=, cache = std::move(cache)](Graph& gr, std::span<const double> gy) {
        const Tensor& xv = gr.value(seq);
        const Tensor& wih = gr.value(w.w_ih);
        const Tensor& whh = gr.value(w.w_hh);
        auto gx = gr.grad_buffer(seq);
        auto gwih = gr.grad_buffer(w.w_ih);
        auto gwhh = gr.grad_buffer(w.w_hh);
        auto gbih = gr.grad_buffer(w.b_ih);
        auto gbhh = gr.grad_buffer(w.b_hh);
        std::vector<double> dh(h), dh_prev(h), dgi(g3), dgh(g3);
        for (std::size_t b = 0; b < B; ++b) {
          std::copy(gy.begin() + static_cast<std::ptrdiff_t>(b * h),
                    gy.begin() + static_cast<std::ptrdiff_t>((b + 1) * h), dh.begin());
          for (std::size_t t = T; t-- > 0;) {
            const std::size_t s = (b * T + t) * h;
            for (std::size_t i = 0; i < h; ++i) {
              const double r = cache.r[s + i];
              const double z = cache.z[s + i];
              const double n = cache.n[s + i];
              const double dn = dh[i] * (1.0 - z);
              const double dz = dh[i] * (cache.hprev[s + i] - n);
              dh_prev[i] = dh[i] * z;
              const double dan = dn * (1.0 - n * n);
              const double dar = dan * cache.ghn[s + i] * r * (1.0 - r);
              const double daz = dz * z * (1.0 - z);
              dgi[i] = dar;
              dgi[h + i] = daz;
              dgi[2 * h + i] = dan;
              dgh[i] = dar;
              dgh[h + i] = daz;
              dgh[2 * h + i] = dan * r;
            }
            const double* xt = &xv[(b * T + t) * cin];
            const double* hp = &cache.hprev[s];
            for (std::size_t j = 0; j < g3; ++j) {
              if (!gx.empty()) axpy(dgi[j], &wih[j * cin], gx.data() + (b * T + t) * cin, cin);
              if (!gwih.empty()) axpy(dgi[j], xt, gwih.data() + j * cin, cin);
              if (!gwhh.empty()) axpy(dgh[j], hp, gwhh.data() + j * h, h);
              axpy(dgh[j], &whh[j * h], dh_prev.data(), h);
            }
            if (!gbih.empty()) axpy(1.0, dgi.data(), gbih.data(), g3);
            if (!gbhh.empty()) axpy(1.0, dgh.data(), gbhh.data(), g3);
            dh.swap(dh_prev);
          }
        }
      });
}

Var linear(Graph& g, Var x, Var weight, Var bias) {
  const Tensor& X = g.value(x);
  const Tensor& W = g.value(weight);
  const VecDims d = vec_dims(X, "linear");
  if (W.rank() != 2 || W.dim(1) != d.width) {
    throw ShapeError("linear: weight " + W.shape_string() + " does not match input " + X.shape_string());
  }
  const std::size_t d_out = W.dim(0);
  require_vector(g.value(bias), d_out, "linear", "bias");
  const Tensor& Bv = g.value(bias);
  Tensor out(d.batched ? Shape{d.rows, d_out} : Shape{d_out});
  for (std::size_t r = 0; r < d.rows; ++r)
    for (std::size_t o = 0; o < d_out; ++o) out[r * d_out + o] = Bv[o] + dot(&W[o * d.width], &X[r * d.width], d.width);

  return g.record(std::move(out), {x, weight, bias}, [=](Graph& gr, std::span<const double> gy) {
    const Tensor& xv = gr.value(x);
    const Tensor& wv = gr.value(weight);
    auto gx = gr.grad_buffer(x);
    auto gw = gr.grad_buffer(weight);
    auto gb = gr.grad_buffer(bias);
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* gyr = &gy[r * d_out];
      if (!gb.empty()) axpy(1.0, gyr, gb.data(), d_out);
      for (std::size_t o = 0; o < d_out; ++o) {
        if (!gx.empty()) axpy(gyr[o], &wv[o * d.width], gx.data() + r * d.width, d.width);
        if (!gw.empty()) axpy(gyr[o], &xv[r * d.width], gw.data() + o * d.width, d.width);
      }
    }
  });
}

Var stats_pooling(Graph& g, Var seq) {
  const Tensor& X = g.value(seq);
  const SeqDims d = seq_dims(X, "stats_pooling");
  const std::size_t c = d.chan;
  Tensor out(d.batched ? Shape{d.batch, 2 * c} : Shape{2 * c});
  std::vector<double> mean(d.batch * c, 0.0), stdv(d.batch * c, 0.0);
  const double n = static_cast<double>(d.time);
  for (std::size_t b = 0; b < d.batch; ++b) {
    double* m = &mean[b * c];
    double* v = &stdv[b * c];
    for (std::size_t t = 0; t < d.time; ++t) axpy(1.0, &X[(b * d.time + t) * c], m, c);
    for (std::size_t ch = 0; ch < c; ++ch) m[ch] /= n;
    for (std::size_t t = 0; t < d.time; ++t) {
      const double* xr = &X[(b * d.time + t) * c];
      for (std::size_t ch = 0; ch < c; ++ch) v[ch] += (xr[ch] - m[ch]) * (xr[ch] - m[ch]);
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
      v[ch] = std::sqrt(v[ch] / n + kStatsEpsilon);
      out[b * 2 * c + ch] = m[ch];
      out[b * 2 * c + c + ch] = v[ch];
    }
  }
  return g.record(std::move(out), {seq},
                  [=, mean = std::move(mean), stdv = std::move(stdv)](Graph& gr, std::span<const double> gy) {
                    const Tensor& xv = gr.value(seq);
                    auto gx = gr.grad_buffer(seq);
                    for (std::size_t b = 0; b < d.batch; ++b) {
                      for (std::size_t t = 0; t < d.time; ++t) {
                        const std::size_t base = (b * d.time + t) * c;
                        for (std::size_t ch = 0; ch < c; ++ch) {
                          const double gm = gy[b * 2 * c + ch];
                          const double gs = gy[b * 2 * c + c + ch];
                          gx[base + ch] += gm / n + gs * (xv[base + ch] - mean[b * c + ch]) / (n * stdv[b * c + ch]);
                        }
                      }
                    }
                  });
}

Var concat(Graph& g, Var a, Var b) {
  const Tensor& A = g.value(a);
  const Tensor& Bt = g.value(b);
  if (A.rank() != Bt.rank() ||
      !std::equal(A.shape().begin(), A.shape().end() - 1, Bt.shape().begin())) {
    throw ShapeError("concat: leading dimensions differ between " + A.shape_string() + " and " + Bt.shape_string());
  }
  const std::size_t wa = A.shape().back();
  const std::size_t wb = Bt.shape().back();
  const std::size_t rows = A.size() / wa;
  Shape shape = A.shape();
  shape.back() = wa + wb;
  Tensor out(shape);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&A[r * wa], wa, &out[r * (wa + wb)]);
    std::copy_n(&Bt[r * wb], wb, &out[r * (wa + wb) + wa]);
  }
  return g.record(std::move(out), {a, b}, [=](Graph& gr, std::span<const double> gy) {
    auto ga = gr.grad_buffer(a);
    auto gb = gr.grad_buffer(b);
    for (std::size_t r = 0; r < rows; ++r) {
      if (!ga.empty()) axpy(1.0, &gy[r * (wa + wb)], ga.data() + r * wa, wa);
      if (!gb.empty()) axpy(1.0, &gy[r * (wa + wb) + wa], gb.data() + r * wb, wb);
    }
  });
}

Var reshape(Graph& g, Var x, Shape shape) {
  Tensor out = g.value(x).reshaped(std::move(shape));
  return g.record(std::move(out), {x}, [=](Graph& gr, std::span<const double> gy) {
    auto gx = gr.grad_buffer(x);
    axpy(1.0, gy.data(), gx.data(), gy.size());
  });
}

Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels, std::span<const double> weights) {
  const Tensor& L = g.value(logits);
  const VecDims d = vec_dims(L, "softmax_cross_entropy");
  if (d.width != 2) throw ShapeError("softmax_cross_entropy: expected two logits per row, got " + L.shape_string());
  if (labels.size() != d.rows) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(d.rows) + " rows");
  }
  if (!weights.empty() && weights.size() != d.rows) {
    throw ShapeError("softmax_cross_entropy: weight count does not match row count");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw ShapeError("softmax_cross_entropy: label " + std::to_string(y) + " not in {0, 1}");
  }
  std::vector<double> prob(L.size());
  std::vector<double> w(d.rows, 1.0);
  if (!weights.empty()) w.assign(weights.begin(), weights.end());
  double wsum = 0.0;
  for (double v : w) wsum += v;
  if (!(wsum > 0.0)) throw ShapeError("softmax_cross_entropy: weights must have a positive sum");

  double loss = 0.0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* z = &L[r * 2];
    const double m = std::max(z[0], z[1]);
    const double e0 = std::exp(z[0] - m);
    const double e1 = std::exp(z[1] - m);
    const double lse = m + std::log(e0 + e1);
    prob[r * 2] = e0 / (e0 + e1);
    prob[r * 2 + 1] = e1 / (e0 + e1);
    loss += w[r] * (lse - z[labels[r]]);
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return g.record(Tensor::scalar(loss / wsum), {logits},
                  [=, prob = std::move(prob), ys = std::move(ys), w = std::move(w)](Graph& gr,
                                                                                   std::span<const double> gy) {
                    auto gl = gr.grad_buffer(logits);
                    for (std::size_t r = 0; r < ys.size(); ++r) {
                      const double s = gy[0] * w[r] / wsum;
                      for (std::size_t k = 0; k < 2; ++k) {
                        const double onehot = static_cast<int>(k) == ys[r] ? 1.0 : 0.0;
                        gl[r * 2 + k] += s * (prob[r * 2 + k] - onehot);
                      }
                    }
                  });
}

Var sum(Graph& g, Var x) {
  double s = 0.0;
  for (double v : g.value(x).data()) s += v;
  return g.record(Tensor::scalar(s), {x}, [=](Graph& gr, std::span<const double> gy) {
    auto gx = gr.grad_buffer(x);
    for (auto& v : gx) v += gy[0];
  });
}

Var weighted_sum(Graph& g, Var x, const Tensor& coeff) {
  const Tensor& X = g.value(x);
  if (coeff.size() != X.size()) {
    throw ShapeError("weighted_sum: coefficients " + coeff.shape_string() + " do not match " + X.shape_string());
  }
  const double s = dot(X.data().data(), coeff.data().data(), X.size());
  return g.record(Tensor::scalar(s), {x}, [=, c = coeff.values()](Graph& gr, std::span<const double> gy) {
    auto gx = gr.grad_buffer(x);
    axpy(gy[0], c.data(), gx.data(), c.size());
  });
}

}  // namespace arnet::ops
