#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "binspp/matrix.hpp"

namespace binspp {

/// Weights of one GRU cell. Gate blocks are stacked in the order
/// reset, update, candidate; each block has `h` rows. The reset gate is
/// applied after the recurrent product:
///
///   r = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
///   z = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
///   c = tanh(W_ic x + b_ic + r * (W_hc h + b_hc))
///   h' = (1 - z) * c + z * h
struct GruParams {
  std::size_t n = 0;  // input size
  std::size_t h = 0;  // hidden size
  RealMatrix w_input;               // 3h x n
  RealMatrix w_recurrent;           // 3h x h
  std::vector<double> bias_input;   // 3h
  std::vector<double> bias_recurrent;  // 3h

  GruParams() = default;
  GruParams(std::size_t n_in, std::size_t hidden);

  /// 3h (n + h + 2)
  static std::size_t count_for(std::size_t n_in, std::size_t hidden) {
    return 3 * hidden * (n_in + hidden + 2);
  }
  std::size_t count() const { return count_for(n, h); }

  /// The four parameter arrays in serialization order.
  std::array<std::span<double>, 4> arrays();
  std::array<std::span<const double>, 4> arrays() const;

  friend bool operator==(const GruParams&, const GruParams&) = default;
};

/// Content hash of the parameters, used to detect a cache that no longer
/// matches the weights it was produced with.
std::uint64_t fingerprint(const GruParams& p);

struct HeadConfig {
  double beta = 10.0;
  bool clamp = true;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct GruCache {
  std::size_t n = 0;
  std::size_t h = 0;
  std::uint64_t params_fingerprint = 0;
  RealMatrix x;       // L x n
  std::vector<double> h0;
  RealMatrix hidden;  // L x h, state after each step
  RealMatrix reset;   // L x h
  RealMatrix update;  // L x h
  RealMatrix cand;    // L x h
  RealMatrix rec_cand;  // L x h, W_hc h + b_hc before the reset gate

  std::size_t steps() const { return x.rows(); }
};

struct GruForward {
  RealMatrix hidden;  // L x h
  GruCache cache;
};

/// Uniform U(-1/sqrt(h), 1/sqrt(h)) initialization.
GruParams init_gru(std::size_t n, std::size_t h, std::uint64_t seed);

/// Runs the recurrence over the rows of `x_seq` (L x n). An empty `h0`
/// means the zero state.
GruForward gru_forward(const GruParams& p, const RealMatrix& x_seq,
                       std::span<const double> h0 = {});

double softplus(double x, double beta);
/// d softplus / dx
double softplus_grad(double x, double beta);

/// Elementwise Softplus, optionally clipped at 1.
RealMatrix softplus_head(const RealMatrix& h_seq, const HeadConfig& cfg);

double mse_loss(std::span<const double> est, std::span<const double> target);

/// Gradient of mse_loss(softplus_head(hidden), target) with respect to every
/// parameter, where the mean runs over all L x h entries. `target` is L x h.
GruParams gru_backward(const GruParams& p, const GruCache& cache, const HeadConfig& head,
                       const RealMatrix& target);

struct AdamState {
  GruParams m;
  GruParams v;
  std::uint64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;

  AdamState() = default;
  AdamState(const GruParams& like, double learning_rate, double wd);
};

/// One bias-corrected Adam update. Weight decay is added to the gradient
/// (L2 coupling) before the moment updates.
void adam_step(GruParams& p, const GruParams& grads, AdamState& s);

/// a += scale * b over all parameter arrays; shapes must match.
void accumulate(GruParams& a, const GruParams& b, double scale = 1.0);

}  // namespace binspp
