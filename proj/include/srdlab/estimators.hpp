#pragma once
// Monte Carlo layer: a small dictionary of observables with certified norms,
// a deterministic parallel sample map, fixed-order reductions, and log-log
// rate fits.  Results are byte-identical for any worker count: every sample
// writes its own slot and every reduction runs in a fixed pairwise order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "srdlab/integrators.hpp"
#include "srdlab/spectral.hpp"

namespace srdlab {

// Bounded test function with certified bounds on its value and its Lipschitz
// seminorm, normalized so sup_norm + lip_norm == 1.
struct Observable {
  std::string name;
  double sup_norm;
  double lip_norm;
  std::function<double(const SpectralField&)> eval;
};

namespace detail {
inline double coeff_or_zero(const SpectralField& u, std::size_t i) {
  return i < u.n_modes() ? u.coeff[i] : 0.0;
}
}  // namespace detail

// Eight test functions covering saturating mode functionals, a Gaussian bump
// of the low-mode energy, a clamped norm, and per-coordinate sigmoids.
inline std::vector<Observable> observable_dictionary() {
  std::vector<Observable> dict;
  auto add_tanh = [&dict](std::string name, std::vector<double> phi) {
    double n2 = 0.0;
    for (double w : phi) n2 += w * w;
    const double inv = 1.0 / std::sqrt(n2);
    for (double& w : phi) w *= inv;
    dict.push_back({std::move(name), 0.5, 0.5, [phi](const SpectralField& u) {
                      double s = 0.0;
                      for (std::size_t i = 0; i < phi.size(); ++i)
                        s += phi[i] * detail::coeff_or_zero(u, i);
                      return 0.5 * std::tanh(s);
                    }});
  };
  add_tanh("mode1-saturation", {1.0});
  add_tanh("mode2-saturation", {0.0, 1.0});
  {
    std::vector<double> mix(8);
    for (std::size_t k = 0; k < 8; ++k) mix[k] = std::ldexp(1.0, -int(k) - 1);
    add_tanh("mix8-saturation", std::move(mix));
  }
  {
    // peak slope of a exp(-s^2) in s is a sqrt(2/e); scale so sup+lip = 1
    const double a = 1.0 / (1.0 + std::sqrt(2.0 / std::exp(1.0)));
    dict.push_back({"low-mode-gaussian", a, 1.0 - a, [a](const SpectralField& u) {
                      double s2 = 0.0;
                      for (std::size_t i = 0; i < 4; ++i) {
                        const double c = detail::coeff_or_zero(u, i);
                        s2 += c * c;
                      }
                      return a * std::exp(-s2);
                    }});
  }
  dict.push_back({"clamped-norm", 0.5, 0.5, [](const SpectralField& u) {
                    return 0.5 * std::min(l2_norm(u), 1.0);
                  }});
  for (std::size_t j = 0; j < 3; ++j)
    dict.push_back({"coord" + std::to_string(j + 1) + "-sigmoid", 0.5, 0.5,
                    [j](const SpectralField& u) {
                      const double s = detail::coeff_or_zero(u, j);
                      return 0.5 * s / std::sqrt(1.0 + s * s);
                    }});
  return dict;
}

// Fixed-order pairwise tree reduction; independent of any thread layout.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

inline MCEstimate mc_mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mc_mean: no samples");
  MCEstimate e;
  e.n = v.size();
  e.mean = pairwise_sum(v) / double(v.size());
  if (v.size() == 1) return e;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - e.mean) * (v[i] - e.mean);
  const double s2 = pairwise_sum(dev) / double(v.size() - 1);
  e.stderr_ = std::sqrt(s2 / double(v.size()));
  return e;
}

// Difference of two estimates from independent sample sets.
inline MCEstimate mc_difference(const MCEstimate& a, const MCEstimate& b) {
  return {a.mean - b.mean, std::hypot(a.stderr_, b.stderr_), std::min(a.n, b.n)};
}

struct NumericalFailure : std::runtime_error {
  std::vector<std::size_t> samples;
  explicit NumericalFailure(std::vector<std::size_t> failed)
      : std::runtime_error("trajectories diverged in " + std::to_string(failed.size()) +
                           " samples, first at index " +
                           std::to_string(failed.empty() ? 0 : failed.front())),
        samples(std::move(failed)) {}
};

// Runs fn(i) for i in [0, n) over the requested worker count.  fn must write
// only to per-index slots.  Samples whose trajectory explodes are collected
// and reported together in a NumericalFailure once every index has run.
template <class Fn>
void parallel_for_samples(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  std::vector<std::size_t> failed;
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (const BlowUpError&) {
        failed.push_back(i);
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr first_error;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (const BlowUpError&) {
          std::lock_guard lock(mu);
          failed.push_back(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  if (!failed.empty()) {
    std::sort(failed.begin(), failed.end());
    throw NumericalFailure(std::move(failed));
  }
}

// Terminal observable samples: one trajectory per sample index, streams
// derived from (seed, block, sample), one value row per dictionary entry.
inline std::vector<std::vector<double>> terminal_samples(
    const Stepper& stepper, const SpectralField& x0, std::uint64_t seed, std::uint64_t block,
    std::size_t n_samples, std::span<const Observable> psi, unsigned workers) {
  std::vector<std::vector<double>> rows(psi.size(), std::vector<double>(n_samples, 0.0));
  parallel_for_samples(n_samples, workers, [&](std::size_t s) {
    const SpectralField u = stepper.evolve(x0, derive_stream(seed, block, s));
    for (std::size_t p = 0; p < psi.size(); ++p) rows[p][s] = psi[p].eval(u);
  });
  return rows;
}

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
};

// Least-squares slope of log y against log x.
inline RateFit fit_rate(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_rate: need two or more points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::domain_error("fit_rate: points must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = pairwise_sum(lx) / double(n), my = pairwise_sum(ly) / double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::domain_error("fit_rate: abscissae coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / double(n - 2) / sxx);
  }
  return fit;
}

}  // namespace srdlab
