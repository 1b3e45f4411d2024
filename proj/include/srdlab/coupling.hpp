#pragma once
// Pathwise coupling of two trajectories driven by the same noise.  The second
// chain feels an extra frozen drift pulling it toward the first on the modes
// whose eigenvalues sit below (1 + kappa1)/eps; beyond that band the
// semigroup contracts on its own.  The pull is exactly the control whose
// Girsanov cost prices the gradient and shifted-expectation estimates, so the
// stepper accumulates that cost alongside the states.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "srdlab/integrators.hpp"
#include "srdlab/model.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/spectral.hpp"

namespace srdlab {

// Half the time-integrated squared control needed to merge chains started
// dist apart: gamma^2 (1+kappa1)^2 dist^2 / (4 eps).
inline double girsanov_cost_bound(double gamma, double kappa1, double epsilon, double dist) {
  const double g = gamma * (1.0 + kappa1) * dist;
  return g * g / (4.0 * epsilon);
}

// Bound on |grad E psi(u_t(x))| for |psi| <= sup_psi, |grad psi| <= sup_grad.
inline double gradient_bound(double gamma, double kappa1, double epsilon, double t,
                             double sup_grad, double sup_psi) {
  return std::exp(-t / epsilon) * sup_grad +
         gamma * (1.0 + kappa1) / (2.0 * std::sqrt(epsilon)) * sup_psi;
}

// Additive slack in E log psi(u_t(y)) <= log E psi(u_t(x)) + slack for
// positive psi with |grad log psi| <= sup_grad_log.
inline double harnack_shift_bound(double gamma, double kappa1, double epsilon, double t,
                                  double sup_grad_log, double dist) {
  return sup_grad_log * std::exp(-t / epsilon) * dist +
         girsanov_cost_bound(gamma, kappa1, epsilon, dist);
}

class CoupledStepper {
 public:
  struct State {
    SpectralField u;     // freely evolving chain
    SpectralField v;     // chain pulled toward u
    double cost = 0.0;   // accumulated (1/2) sum tau ||xi_k||^2
  };

  CoupledStepper(const ModelParams& p, const Eigenbasis& basis, const NoiseSpec& noise,
                 const GridSpec& grid, SchemeKind scheme = SchemeKind::tamed)
      : base_(p, basis, noise, grid, scheme),
        pull_rate_((1.0 + p.kappa1) / p.epsilon),
        epsilon_(p.epsilon),
        kappa1_(p.kappa1) {
    n_pull_ = noise.cutoff_mode(p.kappa1, p.epsilon);
    if (n_pull_ > grid.n_modes)
      throw std::invalid_argument(
          "CoupledStepper: the pulled band needs " + std::to_string(n_pull_) +
          " modes but the grid has " + std::to_string(grid.n_modes));
    gamma_ = noise.inverse_intensity_bound(p.kappa1, p.epsilon);
    inv_q_.resize(n_pull_);
    for (std::size_t i = 0; i < n_pull_; ++i) inv_q_[i] = 1.0 / noise.q(i + 1);
  }

  const Stepper& base() const { return base_; }
  std::size_t pulled_modes() const { return n_pull_; }
  double pull_rate() const { return pull_rate_; }
  double inverse_intensity() const { return gamma_; }
  double contraction_rate() const { return 1.0 / epsilon_; }

  State start(const SpectralField& x, const SpectralField& y) const {
    if (!(x.basis == base_.basis()) || !(y.basis == base_.basis()))
      throw std::invalid_argument("CoupledStepper: initial states use a different basis");
    return State{project(x, base_.n_modes()), project(y, base_.n_modes()), 0.0};
  }

  void step(State& s, std::uint64_t stream, std::uint64_t k) const {
    const double tau = base_.grid().tau;
    thread_local std::vector<double> diff, eta;
    diff.resize(n_pull_);
    eta.resize(base_.n_modes());
    double xi2 = 0.0;
    for (std::size_t i = 0; i < n_pull_; ++i) {
      diff[i] = s.v.coeff[i] - s.u.coeff[i];
      xi2 += diff[i] * diff[i] * inv_q_[i];
    }
    s.cost += 0.5 * tau * pull_rate_ * pull_rate_ * xi2;

    base_.sampler().innovation(stream, k, eta);
    base_.apply_step(s.u.coeff, eta);
    base_.apply_step(s.v.coeff, eta);
    for (std::size_t i = 0; i < n_pull_; ++i)
      s.v.coeff[i] -= base_.phi1(i) * pull_rate_ * diff[i];
    base_.check_state(s.u.coeff, std::size_t(k));
    base_.check_state(s.v.coeff, std::size_t(k));
  }

  template <class Obs>
  State run(const SpectralField& x, const SpectralField& y, std::uint64_t stream,
            Obs&& obs) const {
    State s = start(x, y);
    obs(std::size_t{0}, std::as_const(s));
    for (std::size_t k = 0; k < base_.grid().n_steps; ++k) {
      step(s, stream, k);
      obs(k + 1, std::as_const(s));
    }
    return s;
  }

  State run(const SpectralField& x, const SpectralField& y, std::uint64_t stream) const {
    return run(x, y, stream, [](std::size_t, const State&) {});
  }

  double girsanov_cost_bound(double dist) const {
    return srdlab::girsanov_cost_bound(gamma_, kappa1_, epsilon_, dist);
  }

 private:
  Stepper base_;
  double pull_rate_;
  double epsilon_;
  double kappa1_;
  double gamma_;
  std::size_t n_pull_;
  std::vector<double> inv_q_;
};

inline double coupling_distance(const CoupledStepper::State& s) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < s.u.n_modes(); ++i) {
    const double d = s.v.coeff[i] - s.u.coeff[i];
    d2 += d * d;
  }
  return std::sqrt(d2);
}

}  // namespace srdlab
