#include "binspp/gru.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "binspp/error.hpp"
#include "binspp/random.hpp"

namespace binspp {

namespace {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_same_shape(const GruParams& a, const GruParams& b, const char* what) {
  if (a.n != b.n || a.h != b.h)
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": (" + std::to_string(a.n) + "," + std::to_string(a.h) +
                    ") vs (" + std::to_string(b.n) + "," + std::to_string(b.h) + ")");
}

}  // namespace

GruParams::GruParams(std::size_t n_in, std::size_t hidden)
    : n(n_in),
      h(hidden),
      w_input(3 * hidden, n_in),
      w_recurrent(3 * hidden, hidden),
      bias_input(3 * hidden, 0.0),
      bias_recurrent(3 * hidden, 0.0) {}

std::array<std::span<double>, 4> GruParams::arrays() {
  return {std::span<double>(w_input.data()), std::span<double>(w_recurrent.data()),
          std::span<double>(bias_input), std::span<double>(bias_recurrent)};
}

std::array<std::span<const double>, 4> GruParams::arrays() const {
  return {std::span<const double>(w_input.data()), std::span<const double>(w_recurrent.data()),
          std::span<const double>(bias_input), std::span<const double>(bias_recurrent)};
}

std::uint64_t fingerprint(const GruParams& p) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  auto mix = [&](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      hash ^= (word >> (8 * i)) & 0xFF;
      hash *= 0x100000001b3ULL;
    }
  };
  mix(p.n);
  mix(p.h);
  for (auto arr : p.arrays())
    for (double x : arr) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      mix(bits);
    }
  return hash;
}

GruParams init_gru(std::size_t n, std::size_t h, std::uint64_t seed) {
  if (n < 1 || h < 1)
    throw Error(ErrorCode::InvalidDims,
                "GRU needs n >= 1 and h >= 1, got n=" + std::to_string(n) + " h=" + std::to_string(h));
  GruParams p(n, h);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (auto arr : p.arrays())
    for (double& x : arr) x = uniform(rng, -bound, bound);
  return p;
}

GruForward gru_forward(const GruParams& p, const RealMatrix& x_seq, std::span<const double> h0) {
  const std::size_t n = p.n, h = p.h, steps = x_seq.rows();
  if (x_seq.cols() != n)
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x_seq.cols()) +
                                              " columns, GRU expects " + std::to_string(n));
  if (!h0.empty() && h0.size() != h)
    throw Error(ErrorCode::ShapeMismatch, "initial state size " + std::to_string(h0.size()) +
                                              " != hidden size " + std::to_string(h));

  GruForward out;
  GruCache& c = out.cache;
  c.n = n;
  c.h = h;
  c.params_fingerprint = fingerprint(p);
  c.x = x_seq;
  c.h0.assign(h, 0.0);
  if (!h0.empty()) std::copy(h0.begin(), h0.end(), c.h0.begin());
  c.hidden = RealMatrix(steps, h);
  c.reset = RealMatrix(steps, h);
  c.update = RealMatrix(steps, h);
  c.cand = RealMatrix(steps, h);
  c.rec_cand = RealMatrix(steps, h);

  std::vector<double> gi(3 * h), gh(3 * h);
  std::vector<double> prev = c.h0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto x = x_seq.row(t);
    for (std::size_t j = 0; j < 3 * h; ++j) {
      double ai = p.bias_input[j];
      const auto wi = p.w_input.row(j);
      for (std::size_t i = 0; i < n; ++i) ai += wi[i] * x[i];
      double ah = p.bias_recurrent[j];
      const auto wh = p.w_recurrent.row(j);
      for (std::size_t i = 0; i < h; ++i) ah += wh[i] * prev[i];
      gi[j] = ai;
      gh[j] = ah;
    }
    auto hr = c.hidden.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const double r = sigmoid(gi[j] + gh[j]);
      const double z = sigmoid(gi[h + j] + gh[h + j]);
      const double cand = std::tanh(gi[2 * h + j] + r * gh[2 * h + j]);
      c.reset(t, j) = r;
      c.update(t, j) = z;
      c.cand(t, j) = cand;
      c.rec_cand(t, j) = gh[2 * h + j];
      hr[j] = (1.0 - z) * cand + z * prev[j];
    }
    std::copy(hr.begin(), hr.end(), prev.begin());
  }
  out.hidden = c.hidden;
  return out;
}

double softplus(double x, double beta) {
  const double bx = beta * x;
  if (bx > 30.0) return x;
  return std::log1p(std::exp(bx)) / beta;
}

double softplus_grad(double x, double beta) {
  const double bx = beta * x;
  if (bx > 30.0) return 1.0;
  return sigmoid(bx);
}

RealMatrix softplus_head(const RealMatrix& h_seq, const HeadConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw Error(ErrorCode::InvalidConfig, "Softplus beta must be > 0");
  RealMatrix out(h_seq.rows(), h_seq.cols());
  const auto& src = h_seq.data();
  auto& dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    double y = softplus(src[i], cfg.beta);
    if (cfg.clamp) y = std::min(y, 1.0);
    dst[i] = y;
  }
  return out;
}

double mse_loss(std::span<const double> est, std::span<const double> target) {
  if (est.size() != target.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(est.size()) + " estimates vs " + std::to_string(target.size()) +
                    " targets");
  if (est.empty()) throw Error(ErrorCode::LengthMismatch, "empty sequence");
  double acc = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = target[i] - est[i];
    acc += d * d;
  }
  return acc / static_cast<double>(est.size());
}

GruParams gru_backward(const GruParams& p, const GruCache& cache, const HeadConfig& head,
                       const RealMatrix& target) {
  if (cache.n != p.n || cache.h != p.h || cache.params_fingerprint != fingerprint(p))
    throw Error(ErrorCode::StaleCache, "cache was produced with different parameters");
  const std::size_t n = p.n, h = p.h, steps = cache.steps();
  if (target.rows() != steps || target.cols() != h)
    throw Error(ErrorCode::ShapeMismatch, "target must be " + std::to_string(steps) + " x " +
                                              std::to_string(h));

  GruParams g(n, h);
  if (steps == 0) return g;
  const double scale = 2.0 / static_cast<double>(steps * h);

  std::vector<double> dh_next(h, 0.0), dh(h), da_i(3 * h), da_h(3 * h);
  for (std::size_t tt = steps; tt-- > 0;) {
    const auto hrow = cache.hidden.row(tt);
    const std::span<const double> prev =
        tt == 0 ? std::span<const double>(cache.h0) : cache.hidden.row(tt - 1);
    const auto x = cache.x.row(tt);

    for (std::size_t j = 0; j < h; ++j) {
      double y = softplus(hrow[j], head.beta);
      double dy_dh = softplus_grad(hrow[j], head.beta);
      if (head.clamp && y > 1.0) {
        y = 1.0;
        dy_dh = 0.0;
      }
      dh[j] = dh_next[j] + scale * (y - target(tt, j)) * dy_dh;
    }

    for (std::size_t j = 0; j < h; ++j) {
      const double r = cache.reset(tt, j);
      const double z = cache.update(tt, j);
      const double c = cache.cand(tt, j);
      const double hn = cache.rec_cand(tt, j);
      const double dc = dh[j] * (1.0 - z);
      const double dz = dh[j] * (prev[j] - c);
      const double dac = dc * (1.0 - c * c);
      const double daz = dz * z * (1.0 - z);
      const double dar = dac * hn * r * (1.0 - r);
      da_i[j] = dar;
      da_i[h + j] = daz;
      da_i[2 * h + j] = dac;
      da_h[j] = dar;
      da_h[h + j] = daz;
      da_h[2 * h + j] = dac * r;
      dh_next[j] = dh[j] * z;
    }

    for (std::size_t row = 0; row < 3 * h; ++row) {
      auto gwi = g.w_input.row(row);
      for (std::size_t i = 0; i < n; ++i) gwi[i] += da_i[row] * x[i];
      auto gwh = g.w_recurrent.row(row);
      const auto wh = p.w_recurrent.row(row);
      for (std::size_t i = 0; i < h; ++i) {
        gwh[i] += da_h[row] * prev[i];
        dh_next[i] += wh[i] * da_h[row];
      }
      g.bias_input[row] += da_i[row];
      g.bias_recurrent[row] += da_h[row];
    }
  }
  return g;
}

AdamState::AdamState(const GruParams& like, double learning_rate, double wd)
    : m(like.n, like.h), v(like.n, like.h), lr(learning_rate), weight_decay(wd) {}

void adam_step(GruParams& p, const GruParams& grads, AdamState& s) {
  check_same_shape(p, grads, "adam gradients");
  check_same_shape(p, s.m, "adam state");
  ++s.step_count;
  const double t = static_cast<double>(s.step_count);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);

  auto pa = p.arrays();
  const auto ga = grads.arrays();
  auto ma = s.m.arrays();
  auto va = s.v.arrays();
  for (std::size_t a = 0; a < pa.size(); ++a) {
    for (std::size_t i = 0; i < pa[a].size(); ++i) {
      const double g = ga[a][i] + s.weight_decay * pa[a][i];
      ma[a][i] = s.beta1 * ma[a][i] + (1.0 - s.beta1) * g;
      va[a][i] = s.beta2 * va[a][i] + (1.0 - s.beta2) * g * g;
      const double m_hat = ma[a][i] / c1;
      const double v_hat = va[a][i] / c2;
      pa[a][i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
  }
}

void accumulate(GruParams& a, const GruParams& b, double scale) {
  check_same_shape(a, b, "accumulate");
  auto aa = a.arrays();
  const auto ba = b.arrays();
  for (std::size_t k = 0; k < aa.size(); ++k)
    for (std::size_t i = 0; i < aa[k].size(); ++i) aa[k][i] += scale * ba[k][i];
}

}  // namespace binspp
