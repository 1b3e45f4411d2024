#pragma once

// Slow, independent reference computations used by the test suites.  These
// deliberately avoid the library's collocation tables: the dense oracle works
// from pointwise samples and plain trapezoid sums, the symbolic oracle does
// exact product-to-sum bookkeeping on trig amplitudes.  Their only job is to
// give the fast paths something honest to be compared against.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "srdlab/spectral.hpp"

namespace srdlab::test {

// Evaluate u at x by direct summation over eigenfunctions.
inline double eval_field(const SpectralField& u, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.n_modes(); ++i)
    s += u.coeff[i] * u.basis.eigenfunction(i + 1, x);
  return s;
}

// Dense trapezoid quadrature of <f(u), e_i> for i = 1..N.  Exact (to
// round-off) whenever the integrand extends to a smooth periodic function,
// which covers Dirichlet fields with odd f and all Neumann fields.
inline std::vector<double> dense_projection_oracle(const SpectralField& u,
                                                   std::span<const double> f, std::size_t N,
                                                   std::size_t n_quad = 100000) {
  std::vector<double> fu(n_quad + 1);
  for (std::size_t j = 0; j <= n_quad; ++j) {
    const double x = double(j) / double(n_quad);
    fu[j] = eval_poly(f, eval_field(u, x));
  }
  std::vector<double> out(N, 0.0);
  const double h = 1.0 / double(n_quad);
  for (std::size_t i1 = 1; i1 <= N; ++i1) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= n_quad; ++j) {
      const double w = (j == 0 || j == n_quad) ? 0.5 : 1.0;
      acc += w * fu[j] * u.basis.eigenfunction(i1, double(j) / double(n_quad));
    }
    out[i1 - 1] = acc * h;
  }
  return out;
}

// Trig polynomial with integer frequencies: g(x) = cosA[0] + sum_v cosA[v] cos(v pi x)
//                                                        + sum_v sinB[v] sin(v pi x).
struct TrigPoly {
  std::vector<double> cosA, sinB;  // index = frequency; sinB[0] unused

  explicit TrigPoly(std::size_t max_freq = 0) : cosA(max_freq + 1, 0.0), sinB(max_freq + 1, 0.0) {}
  std::size_t max_freq() const { return cosA.size() - 1; }
};

inline TrigPoly trig_mul(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly r(a.max_freq() + b.max_freq());
  auto add_cos = [&](std::size_t v, double c) { r.cosA[v] += c; };
  auto add_sin = [&](long v, double c) {
    if (v > 0)
      r.sinB[std::size_t(v)] += c;
    else if (v < 0)
      r.sinB[std::size_t(-v)] -= c;  // sin(-w) = -sin(w)
  };
  for (std::size_t p = 0; p <= a.max_freq(); ++p) {
    for (std::size_t q = 0; q <= b.max_freq(); ++q) {
      const std::size_t sum = p + q;
      const std::size_t dif = p > q ? p - q : q - p;
      // cos cos
      if (a.cosA[p] != 0.0 && b.cosA[q] != 0.0) {
        const double c = a.cosA[p] * b.cosA[q];
        add_cos(dif, 0.5 * c);
        add_cos(sum, 0.5 * c);
      }
      // sin sin
      if (a.sinB[p] != 0.0 && b.sinB[q] != 0.0) {
        const double c = a.sinB[p] * b.sinB[q];
        add_cos(dif, 0.5 * c);
        add_cos(sum, -0.5 * c);
      }
      // sin(p) cos(q) -> sin(p+q), sin(p-q)
      if (a.sinB[p] != 0.0 && b.cosA[q] != 0.0) {
        const double c = a.sinB[p] * b.cosA[q];
        add_sin(long(sum), 0.5 * c);
        add_sin(long(p) - long(q), 0.5 * c);
      }
      // cos(p) sin(q) -> sin(p+q), sin(q-p)
      if (a.cosA[p] != 0.0 && b.sinB[q] != 0.0) {
        const double c = a.cosA[p] * b.sinB[q];
        add_sin(long(sum), 0.5 * c);
        add_sin(long(q) - long(p), 0.5 * c);
      }
    }
  }
  return r;
}

inline TrigPoly trig_from_field(const SpectralField& u) {
  constexpr double rt2 = std::numbers::sqrt2_v<double>;
  const std::size_t n = u.n_modes();
  if (u.basis.boundary() == Boundary::dirichlet) {
    TrigPoly t(n);
    for (std::size_t i = 0; i < n; ++i) t.sinB[i + 1] = rt2 * u.coeff[i];
    return t;
  }
  TrigPoly t(n == 0 ? 0 : n - 1);
  for (std::size_t i = 0; i < n; ++i) t.cosA[i] += (i == 0 ? 1.0 : rt2) * u.coeff[i];
  return t;
}

// Exact projection coefficients of a trig polynomial onto the first N basis modes:
//   Dirichlet: <g, sqrt2 sin(i pi x)> = sqrt2 ( sinB[i]/2 + sum_v cosA[v] * I(v,i) )
//              with I(v,i) = int_0^1 cos(v pi x) sin(i pi x) dx = 2i/(pi(i^2-v^2)) for odd i+v.
//   Neumann:   <g, e_i> from int cos cos = delta/2 (and the constant mode).
inline std::vector<double> trig_project(const TrigPoly& g, const Eigenbasis& basis,
                                        std::size_t N) {
  constexpr double rt2 = std::numbers::sqrt2_v<double>;
  std::vector<double> out(N, 0.0);
  if (basis.boundary() == Boundary::dirichlet) {
    for (std::size_t i1 = 1; i1 <= N; ++i1) {
      double acc = i1 <= g.max_freq() ? 0.5 * g.sinB[i1] : 0.0;
      for (std::size_t v = 0; v <= g.max_freq(); ++v)
        if ((v + i1) % 2 == 1) {
          const double ii = double(i1), vv = double(v);
          acc += g.cosA[v] * 2.0 * ii / (kPi * (ii * ii - vv * vv));
        }
      out[i1 - 1] = rt2 * acc;
    }
    // sin(v) against sin(i): handled by the sinB[i] term; sin(v) with v != i integrates to 0.
  } else {
    out[0] = g.cosA[0];  // <g, 1>; pure sine content integrates against 1 only via sinB odd v
    for (std::size_t v = 1; v <= g.max_freq(); ++v)
      if (v % 2 == 1) out[0] += g.sinB[v] * 2.0 / (double(v) * kPi);
    for (std::size_t i1 = 2; i1 <= N; ++i1) {
      const std::size_t freq = i1 - 1;
      double acc = freq <= g.max_freq() ? 0.5 * g.cosA[freq] : 0.0;
      // sin(v) against cos(f): int sin(v) cos(f) = 2v/(pi(v^2-f^2)) for odd v+f.
      double sacc = 0.0;
      for (std::size_t v = 1; v <= g.max_freq(); ++v)
        if ((v + freq) % 2 == 1) {
          const double vv = double(v), ff = double(freq);
          sacc += g.sinB[v] * 2.0 * vv / (kPi * (vv * vv - ff * ff));
        }
      out[i1 - 1] = rt2 * (acc + sacc);
    }
  }
  return out;
}

// Exact coefficients of pi_N f(u) by symbolic trig expansion; independent of
// the collocation transform path.
inline std::vector<double> trig_convolution_oracle(const SpectralField& u,
                                                   std::span<const double> f, std::size_t N) {
  const TrigPoly base = trig_from_field(u);
  TrigPoly acc(0);
  acc.cosA[0] = f.empty() ? 0.0 : f[f.size() - 1];
  for (std::size_t i = f.size(); i-- > 1;) {  // Horner: acc = acc*u + f[i-1]
    acc = trig_mul(acc, base);
    acc.cosA[0] += f[i - 1];
  }
  return trig_project(acc, u.basis, N);
}

}  // namespace srdlab::test
