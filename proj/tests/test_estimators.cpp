#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "srdlab/estimators.hpp"
#include "srdlab/model.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/rng.hpp"

using namespace srdlab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralField random_field(const Eigenbasis& basis, std::size_t n, std::mt19937& gen,
                           double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  SpectralField f = zero_field(basis, n);
  for (double& c : f.coeff) c = u(gen);
  return f;
}

}  // namespace

TEST_CASE("dictionary norms are certified") {
  Eigenbasis basis(Boundary::dirichlet, 1.0, 12);
  const auto dict = observable_dictionary();
  REQUIRE(dict.size() == 8);
  for (const auto& psi : dict) {
    CHECK_THAT(psi.sup_norm + psi.lip_norm, WithinRel(1.0, 1e-14));
    CHECK(psi.sup_norm > 0.0);
    CHECK(psi.lip_norm > 0.0);
  }
  for (std::size_t i = 0; i < dict.size(); ++i)
    for (std::size_t j = i + 1; j < dict.size(); ++j) CHECK(dict[i].name != dict[j].name);

  std::mt19937 gen(71);
  for (std::size_t trial = 0; trial < 300; ++trial) {
    const SpectralField u = random_field(basis, 12, gen, 3.0);
    const SpectralField v = random_field(basis, 12, gen, 3.0);
    double d2 = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      const double d = u.coeff[i] - v.coeff[i];
      d2 += d * d;
    }
    const double dist = std::sqrt(d2);
    for (const auto& psi : dict) {
      const double a = psi.eval(u), b = psi.eval(v);
      CHECK(std::abs(a) <= psi.sup_norm * (1.0 + 1e-12));
      CHECK(std::abs(a - b) <= psi.lip_norm * dist * (1.0 + 1e-9));
    }
  }

  // short fields read as zero-padded
  const SpectralField one = single_mode_field(basis, 1, 2.0);
  CHECK(dict[1].eval(one) == 0.0);
  CHECK_THAT(dict[0].eval(one), WithinRel(0.5 * std::tanh(2.0), 1e-14));
}

TEST_CASE("pairwise reduction matches a long-double accumulation") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(1537);
  long double acc = 0.0L;
  for (double& x : v) {
    x = u(gen);
    acc += (long double)x;
  }
  CHECK_THAT(pairwise_sum(v), WithinAbs(double(acc), 1e-12));

  const std::vector<double> four = {1.0, 2.0, 3.0, 4.0};
  const MCEstimate e = mc_mean(four);
  CHECK_THAT(e.mean, WithinRel(2.5, 1e-15));
  CHECK_THAT(e.stderr_, WithinRel(std::sqrt((5.0 / 3.0) / 4.0), 1e-14));
  CHECK(e.n == 4);
  CHECK(mc_mean(std::vector<double>{7.0}).stderr_ == 0.0);
  CHECK_THROWS_AS(mc_mean(std::vector<double>{}), std::invalid_argument);

  const MCEstimate d = mc_difference({1.0, 0.3, 100}, {0.25, 0.4, 50});
  CHECK_THAT(d.mean, WithinRel(0.75, 1e-15));
  CHECK_THAT(d.stderr_, WithinRel(0.5, 1e-14));
  CHECK(d.n == 50);
}

TEST_CASE("sample map is worker-count invariant") {
  const std::size_t n = 1000;
  std::vector<double> one(n), three(n);
  parallel_for_samples(n, 1, [&](std::size_t i) { one[i] = std::sqrt(double(i)) * 1.7; });
  parallel_for_samples(n, 3, [&](std::size_t i) { three[i] = std::sqrt(double(i)) * 1.7; });
  CHECK(one == three);
}

TEST_CASE("diverged samples are reported together") {
  const std::size_t n = 40;
  std::vector<double> slot(n, -1.0);
  bool caught = false;
  try {
    parallel_for_samples(n, 3, [&](std::size_t i) {
      if (i == 3 || i == 17 || i == 28) throw BlowUpError(i);
      slot[i] = double(i);
    });
  } catch (const NumericalFailure& e) {
    caught = true;
    CHECK(e.samples == std::vector<std::size_t>{3, 17, 28});
  }
  CHECK(caught);
  // every healthy sample still ran
  for (std::size_t i = 0; i < n; ++i)
    if (i != 3 && i != 17 && i != 28) CHECK(slot[i] == double(i));

  CHECK_THROWS_AS(parallel_for_samples(
                      8, 2, [](std::size_t i) {
                        if (i == 5) throw std::runtime_error("unrelated");
                      }),
                  std::runtime_error);
}

TEST_CASE("terminal sampling is deterministic across worker counts") {
  Eigenbasis basis(Boundary::dirichlet, 1.0, 8);
  ModelParams p = allen_cahn(0.5);
  NoiseSpec spec(basis, 1.0, 2.0, 0.4);
  GridSpec g{.n_modes = 8, .tau = 0.02, .n_steps = 50};
  Stepper st(p, basis, spec, g);
  SpectralField x0 = single_mode_field(basis, 1, 0.4);
  const auto dict = observable_dictionary();

  const auto rows1 = terminal_samples(st, x0, 404, 2, 60, dict, 1);
  const auto rows3 = terminal_samples(st, x0, 404, 2, 60, dict, 3);
  REQUIRE(rows1.size() == dict.size());
  CHECK(rows1 == rows3);
  // distinct seeds move every sample
  const auto other = terminal_samples(st, x0, 405, 2, 60, dict, 1);
  CHECK(rows1 != other);
}

TEST_CASE("rate fits recover exact power laws") {
  std::vector<double> x = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * std::pow(x[i], 1.7);
  const RateFit fit = fit_rate(x, y);
  CHECK_THAT(fit.slope, WithinRel(1.7, 1e-12));
  CHECK_THAT(fit.intercept, WithinRel(std::log(3.0), 1e-10));
  CHECK(fit.slope_stderr < 1e-12);

  // mild multiplicative noise keeps the slope in a tight band
  std::vector<double> wob = y;
  const double bump[5] = {1.04, 0.97, 1.02, 0.95, 1.05};
  for (std::size_t i = 0; i < wob.size(); ++i) wob[i] *= bump[i];
  const RateFit noisy = fit_rate(x, wob);
  CHECK_THAT(noisy.slope, WithinAbs(1.7, 0.05));
  CHECK(noisy.slope_stderr > 0.0);

  CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0}, std::vector<double>{1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0, -1.0}, std::vector<double>{1.0, 1.0}),
                  std::domain_error);
  CHECK_THROWS_AS(fit_rate(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}),
                  std::domain_error);
}
