#pragma once

// Reaction model: polynomial drift f of odd degree 2m+1 with positive leading
// coefficient, the growth/dissipativity constants (kappa1, kappa2) it must
// satisfy, and the interface-width parameter epsilon that scales the drift
// as f/epsilon.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srdlab/spectral.hpp"

namespace srdlab {

struct ModelParams {
  std::vector<double> f_coeff;  // ascending powers
  int m = 1;                    // degree = 2m + 1
  double kappa1 = 3.0;
  double kappa2 = 0.5;
  double epsilon = 1.0;
};

// Validated construction for the class of models the estimates are stated
// for.  Tests may aggregate-initialize degenerate variants (zero or linear f)
// directly; those bypass this gate on purpose.
inline ModelParams make_model(std::vector<double> f_coeff, int m, double kappa1, double kappa2,
                              double epsilon) {
  if (m < 1) throw std::invalid_argument("make_model: m must be >= 1");
  if (!(kappa1 > 0.0) || !(kappa2 > 0.0))
    throw std::invalid_argument("make_model: kappa1 and kappa2 must be positive");
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw std::invalid_argument("make_model: epsilon must lie in (0, 1]");
  const int deg = poly_degree(f_coeff);
  if (deg != 2 * m + 1)
    throw std::invalid_argument("make_model: drift degree " + std::to_string(deg) +
                                " does not equal 2m+1 = " + std::to_string(2 * m + 1));
  if (f_coeff[std::size_t(deg)] <= 0.0)
    throw std::invalid_argument("make_model: leading coefficient must be positive");
  return ModelParams{std::move(f_coeff), m, kappa1, kappa2, epsilon};
}

// The double-well cubic f(s) = s^3 - s; kappa1 = 3 is the smallest constant
// accepted by the derivative growth check, kappa2 = 1/2 leaves slack in the
// dissipativity margin.
inline ModelParams allen_cahn(double epsilon) {
  return make_model({0.0, -1.0, 0.0, 1.0}, 1, 3.0, 0.5, epsilon);
}

inline double f_eval(const ModelParams& p, double s) { return eval_poly(p.f_coeff, s); }

inline double f_prime(const ModelParams& p, double s) {
  double r = 0.0;
  for (std::size_t i = p.f_coeff.size(); i-- > 1;) r = r * s + double(i) * p.f_coeff[i];
  return r;
}

// One scanned condition: margin = worst slack over the grid (>= 0 means the
// inequality held everywhere), at = location of the worst slack.
struct ConditionCheck {
  double margin = 0.0;
  double at = 0.0;
  bool ok() const { return margin >= 0.0; }
};

struct ConditionReport {
  ConditionCheck dissipativity;      // s f(s)  >=  kappa2 |s|^{2m+2} - kappa1
  ConditionCheck one_sided_slope;    // f'(s)   >= -kappa1
  ConditionCheck derivative_growth;  // |f'(s)| <=  kappa1 (1 + |s|^{2m})
  ConditionCheck value_growth;       // |f(s)|  <=  kappa1 (1 + |s|^{2m+1})
  bool all_ok() const {
    return dissipativity.ok() && one_sided_slope.ok() && derivative_growth.ok() &&
           value_growth.ok();
  }
};

inline ConditionReport verify_conditions(const ModelParams& p, double s_lo = -10.0,
                                         double s_hi = 10.0, std::size_t n_pts = 4001) {
  if (!(s_hi > s_lo) || n_pts < 2)
    throw std::invalid_argument("verify_conditions: bad scan range");
  ConditionReport r;
  bool first = true;
  for (std::size_t j = 0; j < n_pts; ++j) {
    const double s = s_lo + (s_hi - s_lo) * double(j) / double(n_pts - 1);
    const double fs = f_eval(p, s);
    const double fp = f_prime(p, s);
    const double pow2m = std::pow(std::abs(s), 2.0 * p.m);
    const double m_diss = s * fs - p.kappa2 * pow2m * s * s + p.kappa1;
    const double m_slope = fp + p.kappa1;
    const double m_dgrow = p.kappa1 * (1.0 + pow2m) - std::abs(fp);
    const double m_vgrow = p.kappa1 * (1.0 + pow2m * std::abs(s)) - std::abs(fs);
    auto fold = [&](ConditionCheck& c, double margin) {
      if (first || margin < c.margin) c = ConditionCheck{margin, s};
    };
    fold(r.dissipativity, m_diss);
    fold(r.one_sided_slope, m_slope);
    fold(r.derivative_growth, m_dgrow);
    fold(r.value_growth, m_vgrow);
    first = false;
  }
  return r;
}

// Criticality index of a degree-(2m+1) drift in d dimensions.  Below 1 the
// model is subcritical for the scheme's full parameter window.
inline double alpha_md(int m, int d) {
  if (m < 1 || d < 1 || d > 3) throw std::invalid_argument("alpha_md: need m >= 1, d in 1..3");
  return double(m) * double(d) / double(2 * m + 1);
}

}  // namespace srdlab
