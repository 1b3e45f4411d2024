#pragma once

// Diagonal Q-Wiener noise on the eigenbasis: per-mode intensities q_i, their
// summability checks, the derived small-noise quantities (spectral cutoff for
// the coupling drift, inverse-intensity bound, Galerkin tail), and exact
// sampling of both plain Wiener increments and the stochastic convolution
// (Ornstein-Uhlenbeck) innovations.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srdlab/rng.hpp"
#include "srdlab/spectral.hpp"

namespace srdlab {

enum class NoiseKind { power_law, explicit_list };

class NoiseSpec {
 public:
  // q_i = q0 * i^{-m1}.  Trace class needs m1 > 1; the alpha-weighted sum
  // sum q_i lambda_i^alpha (lambda_i ~ i^2) needs m1 > 1 + 2 alpha.
  NoiseSpec(const Eigenbasis& basis, double q0, double m1, double alpha)
      : basis_(basis), kind_(NoiseKind::power_law), q0_(q0), m1_(m1), alpha_(alpha) {
    if (!(q0 > 0.0)) throw std::invalid_argument("NoiseSpec: q0 must be > 0");
    if (alpha < 0.0) throw std::invalid_argument("NoiseSpec: alpha must be >= 0");
    if (!(m1 > 1.0))
      throw std::invalid_argument("NoiseSpec: power law m1 <= 1 is not trace class");
    if (!(m1 > 1.0 + 2.0 * alpha))
      throw std::invalid_argument(
          "NoiseSpec: sum q_i lambda_i^alpha diverges; need m1 > 1 + 2 alpha, got m1 = " +
          std::to_string(m1) + ", alpha = " + std::to_string(alpha));
  }

  // Explicit intensity list; q_i = 0 for i beyond the list, so both sums are
  // finite for any alpha >= 0.
  NoiseSpec(const Eigenbasis& basis, std::vector<double> q, double alpha)
      : basis_(basis), kind_(NoiseKind::explicit_list), q_(std::move(q)), alpha_(alpha) {
    if (alpha < 0.0) throw std::invalid_argument("NoiseSpec: alpha must be >= 0");
    if (q_.empty()) throw std::invalid_argument("NoiseSpec: empty intensity list");
    for (double v : q_)
      if (v < 0.0) throw std::invalid_argument("NoiseSpec: negative intensity");
  }

  const Eigenbasis& basis() const { return basis_; }
  NoiseKind kind() const { return kind_; }
  double alpha() const { return alpha_; }

  double q(std::size_t i) const {  // 1-based mode index
    if (i < 1) throw std::out_of_range("NoiseSpec::q: mode index is 1-based");
    if (kind_ == NoiseKind::power_law) return q0_ * std::pow(double(i), -m1_);
    return i <= q_.size() ? q_[i - 1] : 0.0;
  }

  // Eigenvalue by the basis formula, valid beyond n_max (tail sums need it).
  double lambda_unbounded(std::size_t i) const {
    const double shift = basis_.boundary() == Boundary::dirichlet ? 0.0 : 1.0;
    const double f = (double(i) - shift) * kPi;
    return f * f + basis_.c0();
  }

  // Trace sum_i q_i, truncated at 10^6 plus an integral tail bound for the
  // power law (the bound is ~ C^{1-m1} and irrelevant at that cutoff).
  double trace() const {
    if (kind_ == NoiseKind::explicit_list) {
      double s = 0.0;
      for (double v : q_) s += v;
      return s;
    }
    double s = 0.0;
    for (std::size_t i = 1; i <= kTailCutoff; ++i) s += q(i);
    s += q0_ * std::pow(double(kTailCutoff), 1.0 - m1_) / (m1_ - 1.0);
    return s;
  }

  // Galerkin tail sum_{i > N} q_i / lambda_i.
  double delta_tail(std::size_t N) const {
    double s = 0.0;
    if (kind_ == NoiseKind::explicit_list) {
      for (std::size_t i = N + 1; i <= q_.size(); ++i) s += q_[i - 1] / lambda_unbounded(i);
      return s;
    }
    for (std::size_t i = N + 1; i <= kTailCutoff; ++i) s += q(i) / lambda_unbounded(i);
    // remainder bound: q0 x^{-m1} / ((x-1)^2 pi^2) integrated past the cutoff
    const double C = double(kTailCutoff);
    s += q0_ / (kPi * kPi) * (C / (C - 1.0)) * (C / (C - 1.0)) *
         std::pow(C, -m1_ - 1.0) / (m1_ + 1.0);
    return s;
  }

  // Smallest N >= 1 with lambda_{N+1} >= (1+kappa1)/epsilon: above this mode
  // the linearized dynamics are contracting on their own.
  std::size_t cutoff_mode(double kappa1, double epsilon) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("cutoff_mode: epsilon must be > 0");
    const double threshold = (1.0 + kappa1) / epsilon;
    for (std::size_t N = 1; N + 1 <= basis_.n_max(); ++N)
      if (basis_.eigenvalue(N + 1) >= threshold) return N;
    throw std::invalid_argument(
        "cutoff_mode: threshold " + std::to_string(threshold) +
        " exceeds lambda_n_max; raise the basis resolution");
  }

  // gamma(epsilon) = max_{i <= N_eps} q_i^{-1/2}; the coupling drift must be
  // realizable through the noise, so vanishing intensity below the cutoff is
  // an error.
  double inverse_intensity_bound(double kappa1, double epsilon) const {
    const std::size_t N = cutoff_mode(kappa1, epsilon);
    double g = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
      const double qi = q(i);
      if (!(qi > 0.0))
        throw std::invalid_argument("inverse_intensity_bound: q_" + std::to_string(i) +
                                    " vanishes below the coupling cutoff");
      g = std::max(g, 1.0 / std::sqrt(qi));
    }
    return g;
  }

  double stationary_variance(std::size_t i) const {
    return q(i) / (2.0 * lambda_unbounded(i));
  }

 private:
  static constexpr std::size_t kTailCutoff = 1000000;

  Eigenbasis basis_;
  NoiseKind kind_;
  double q0_ = 0.0, m1_ = 0.0;
  std::vector<double> q_;
  double alpha_ = 0.0;
};

// Exact sampler for the mode-wise Ornstein-Uhlenbeck innovations
//   eta_i = int_t^{t+tau} e^{-lambda_i (t+tau-r)} sqrt(q_i) dW_i(r),
//   Var eta_i = q_i (1 - e^{-2 lambda_i tau}) / (2 lambda_i),
// addressed on an absolute cell grid of width tau/refine.  A step composes
// its `refine` cells with the exact decay weights, so runs at different step
// sizes built over the same cell width share one Brownian path.
class OuSampler {
 public:
  OuSampler(const NoiseSpec& spec, std::size_t n_modes, double tau_step,
            std::uint64_t refine = 1, NoiseUse purpose = NoiseUse::ou_innovation)
      : n_(n_modes), refine_(refine), purpose_(purpose) {
    if (!(tau_step > 0.0)) throw std::invalid_argument("OuSampler: step must positive");
    if (refine_ < 1) throw std::invalid_argument("OuSampler: refine must be >= 1");
    const double tau_base = tau_step / double(refine_);
    decay_base_.resize(n_);
    std_base_.resize(n_);
    std_step_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double lam = spec.lambda_unbounded(i + 1);
      const double qi = spec.q(i + 1);
      decay_base_[i] = std::exp(-lam * tau_base);
      // -expm1 keeps full precision for lambda*tau down to denormal scale,
      // matching the series q tau (1 - lambda tau + ...) term by term.
      std_base_[i] = std::sqrt(qi * -std::expm1(-2.0 * lam * tau_base) / (2.0 * lam));
      std_step_[i] = std::sqrt(qi * -std::expm1(-2.0 * lam * tau_step) / (2.0 * lam));
    }
  }

  std::size_t n_modes() const { return n_; }
  std::uint64_t refine() const { return refine_; }
  double innovation_std(std::size_t i) const { return std_step_[i]; }  // 0-based

  // Innovation for grid step `step` (cells step*refine .. step*refine+refine-1).
  void innovation(std::uint64_t stream, std::uint64_t step, std::span<double> out) const {
    if (out.size() != n_) throw std::invalid_argument("OuSampler: wrong output size");
    if (refine_ == 1) {
      fill_cell(stream, step, out);
      return;
    }
    for (std::size_t i = 0; i < n_; ++i) out[i] = 0.0;
    thread_local std::vector<double> z;
    z.resize(n_);
    for (std::uint64_t c = 0; c < refine_; ++c) {
      fill_cell(stream, step * refine_ + c, z);
      for (std::size_t i = 0; i < n_; ++i) out[i] = out[i] * decay_base_[i] + z[i];
    }
  }

  double decay_base(std::size_t i) const { return decay_base_[i]; }

 private:
  void fill_cell(std::uint64_t stream, std::uint64_t cell, std::span<double> out) const {
    for (std::size_t i = 0; i < n_; i += 2) {
      const GaussPair g = normal_pair(stream, cell, std::uint32_t(i / 2), purpose_);
      out[i] = std_base_[i] * g.z0;
      if (i + 1 < n_) out[i + 1] = std_base_[i + 1] * g.z1;
    }
  }

  std::size_t n_;
  std::uint64_t refine_;
  NoiseUse purpose_;
  std::vector<double> decay_base_, std_base_, std_step_;
};

// One exact transition of the stochastic convolution: z <- e^{-A tau} z + eta.
inline void ou_step(const OuSampler& sampler, const NoiseSpec& spec, double tau,
                    std::uint64_t stream, std::uint64_t step, std::span<double> z) {
  thread_local std::vector<double> eta;
  eta.resize(sampler.n_modes());
  sampler.innovation(stream, step, eta);
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = std::exp(-spec.lambda_unbounded(i + 1) * tau) * z[i] + eta[i];
}

// Plain Wiener increment over one step: independent N(0, q_i tau) per mode,
// addressed like the OU cells so schemes can share paths.
inline void wiener_increment(const NoiseSpec& spec, std::size_t n_modes, double tau,
                             std::uint64_t stream, std::uint64_t step, std::span<double> out) {
  if (!(tau > 0.0)) throw std::invalid_argument("wiener_increment: tau must be > 0");
  if (out.size() != n_modes) throw std::invalid_argument("wiener_increment: wrong output size");
  for (std::size_t i = 0; i < n_modes; i += 2) {
    const GaussPair g = normal_pair(stream, step, std::uint32_t(i / 2), NoiseUse::wiener_increment);
    out[i] = std::sqrt(spec.q(i + 1) * tau) * g.z0;
    if (i + 1 < n_modes) out[i + 1] = std::sqrt(spec.q(i + 2) * tau) * g.z1;
  }
}

}  // namespace srdlab
