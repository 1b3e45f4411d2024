#pragma once

// Eigenbasis of A = -Laplace + c0 on (0,1) with Dirichlet or Neumann walls,
// spectral coefficient fields, and the collocation machinery that projects a
// pointwise polynomial of a field back onto the first N modes without
// aliasing error.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace srdlab {

inline constexpr double kPi = std::numbers::pi_v<double>;

enum class Boundary { dirichlet, neumann };

inline const char* to_string(Boundary b) {
  return b == Boundary::dirichlet ? "dirichlet" : "neumann";
}

// Mode index k is 1-based everywhere: e_1 is the lowest mode.
//   dirichlet: e_k(x) = sqrt(2) sin(k pi x),        lambda_k = (k pi)^2 + c0
//   neumann:   e_1 = 1, e_k(x) = sqrt(2) cos((k-1) pi x), lambda_k = ((k-1) pi)^2 + c0
// Eigenvalues are strictly increasing and positive for c0 > 0.
class Eigenbasis {
 public:
  Eigenbasis(Boundary boundary, double c0, std::size_t n_max)
      : boundary_(boundary), c0_(c0), n_max_(n_max) {
    if (!(c0 > 0.0))
      throw std::invalid_argument("Eigenbasis: spectral shift c0 must be > 0");
    if (n_max < 1)
      throw std::invalid_argument("Eigenbasis: n_max must be >= 1");
  }

  Boundary boundary() const { return boundary_; }
  double c0() const { return c0_; }
  std::size_t n_max() const { return n_max_; }

  double frequency(std::size_t k) const {  // integer multiple of pi in e_k
    return boundary_ == Boundary::dirichlet ? double(k) : double(k - 1);
  }

  double eigenvalue(std::size_t k) const {
    check_mode(k);
    const double f = frequency(k) * kPi;
    return f * f + c0_;
  }

  // Value of e_k at x in [0,1].
  double eigenfunction(std::size_t k, double x) const {
    check_mode(k);
    constexpr double rt2 = std::numbers::sqrt2_v<double>;
    if (boundary_ == Boundary::dirichlet) return rt2 * std::sin(double(k) * kPi * x);
    if (k == 1) return 1.0;
    return rt2 * std::cos(double(k - 1) * kPi * x);
  }

  bool operator==(const Eigenbasis&) const = default;

 private:
  void check_mode(std::size_t k) const {
    if (k < 1 || k > n_max_)
      throw std::out_of_range("Eigenbasis: mode index " + std::to_string(k) +
                              " outside [1, " + std::to_string(n_max_) + "]");
  }

  Boundary boundary_;
  double c0_;
  std::size_t n_max_;
};

// A field is its coefficient vector: coeff[i] = <u, e_{i+1}>.
struct SpectralField {
  Eigenbasis basis;
  std::vector<double> coeff;

  std::size_t n_modes() const { return coeff.size(); }
};

inline SpectralField zero_field(const Eigenbasis& basis, std::size_t n) {
  if (n > basis.n_max())
    throw std::invalid_argument("zero_field: mode count exceeds basis n_max");
  return SpectralField{basis, std::vector<double>(n, 0.0)};
}

inline SpectralField single_mode_field(const Eigenbasis& basis, std::size_t k, double a) {
  if (k < 1 || k > basis.n_max())
    throw std::invalid_argument("single_mode_field: mode outside basis range");
  SpectralField u = zero_field(basis, k);
  u.coeff[k - 1] = a;
  return u;
}

// pi_N: truncate or zero-pad to exactly n modes.
inline SpectralField project(const SpectralField& u, std::size_t n) {
  if (n > u.basis.n_max())
    throw std::invalid_argument("project: mode count exceeds basis n_max");
  SpectralField v = zero_field(u.basis, n);
  const std::size_t keep = std::min(n, u.n_modes());
  for (std::size_t i = 0; i < keep; ++i) v.coeff[i] = u.coeff[i];
  return v;
}

inline double inner(const SpectralField& a, const SpectralField& b) {
  if (!(a.basis == b.basis))
    throw std::invalid_argument("inner: mismatched bases");
  const std::size_t n = std::min(a.n_modes(), b.n_modes());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a.coeff[i] * b.coeff[i];
  return s;
}

// Fractional Sobolev norm: || u ||_alpha = sqrt( sum lambda_i^alpha <u,e_i>^2 ).
// alpha = 0 is the plain L2 norm; negative alpha is fine on finite supports.
inline double sobolev_norm(const SpectralField& u, double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.n_modes(); ++i) {
    const double w = (alpha == 0.0) ? 1.0 : std::pow(u.basis.eigenvalue(i + 1), alpha);
    s += w * u.coeff[i] * u.coeff[i];
  }
  return std::sqrt(s);
}

inline double l2_norm(const SpectralField& u) { return sobolev_norm(u, 0.0); }

// e^{-At}: mode-wise decay. t must be >= 0.
inline SpectralField semigroup_apply(const SpectralField& u, double t) {
  if (t < 0.0) throw std::domain_error("semigroup_apply: negative time");
  SpectralField v = u;
  for (std::size_t i = 0; i < v.n_modes(); ++i)
    v.coeff[i] *= std::exp(-u.basis.eigenvalue(i + 1) * t);
  return v;
}

// Polynomial helpers; coefficients in ascending powers, p(s) = c[0] + c[1] s + ...
inline double eval_poly(std::span<const double> c, double s) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * s + c[i];
  return r;
}

inline std::vector<double> poly_derivative(std::span<const double> c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(double(i) * c[i]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

inline int poly_degree(std::span<const double> c) {
  for (std::size_t i = c.size(); i-- > 0;)
    if (c[i] != 0.0) return int(i);
  return -1;  // zero polynomial
}

// Collocation plan for one (basis, N, f) triple.  Holds the node tables needed
// to evaluate fields at grid points and to recover exact L2 projections of
// pointwise polynomials of a field.
//
// Grid rule: with f of degree p, the integrands f(u) e_i contain trig
// frequencies up to (p+1)N.  Writing p = 2m+1 (round up for even p), the
// discrete sine/cosine orthogonality is alias-free for the first N
// coefficients as soon as the interior point count M satisfies
// M >= (m+1)(N+1).  Default is M = max(4N, that bound).
//
// Dirichlet fields need care when f has even-degree terms: f_even(u) extends
// to a pure cosine series, and its product with a sine mode is not captured
// exactly by any uniform grid sum.  We split f = f_odd + f_even; the odd part
// goes through the sine grid, the even part is sampled on a cosine grid,
// transformed to cosine coefficients, and pushed through the exact
// cos->sin projection integrals.  Neumann fields are a single cosine pass for
// any polynomial parity.
class Collocation {
 public:
  // Minimal interior point count admitting alias-free degree-p products.
  static std::size_t min_points(std::size_t n_modes, int degree) {
    const std::size_t m_eff = degree <= 1 ? 0 : std::size_t((degree - 1 + 1) / 2);
    return (m_eff + 1) * (n_modes + 1);
  }

  Collocation(const Eigenbasis& basis, std::size_t n_modes, std::vector<double> f,
              std::size_t n_points = 0)
      : basis_(basis), n_(n_modes), f_(std::move(f)) {
    if (n_ < 1 || n_ > basis_.n_max())
      throw std::invalid_argument("Collocation: mode count outside basis range");
    const int deg = poly_degree(f_);
    const std::size_t rule = min_points(n_, deg);
    m_pts_ = n_points == 0 ? std::max<std::size_t>(4 * n_, rule) : n_points;
    if (m_pts_ < rule)
      throw std::invalid_argument(
          "Collocation: " + std::to_string(m_pts_) + " points below the dealiasing bound " +
          std::to_string(rule) + " for degree " + std::to_string(deg));
    split_parity();
    build_main_table();
    if (basis_.boundary() == Boundary::dirichlet && even_part_present())
      build_even_tables();
  }

  std::size_t n_modes() const { return n_; }
  std::size_t n_points() const { return m_pts_; }
  const std::vector<double>& nodes() const { return nodes_; }

  // Field values on the grid.  Dirichlet: interior nodes j/(M+1), j=1..M.
  // Neumann: nodes j/M, j=0..M (both walls included).
  void to_physical(std::span<const double> coeff, std::span<double> values) const {
    const std::size_t rows = nodes_.size();
    if (values.size() != rows)
      throw std::invalid_argument("to_physical: wrong output size");
    const std::size_t nc = std::min(coeff.size(), n_);
    for (std::size_t j = 0; j < rows; ++j) {
      const double* row = &table_[j * n_];
      double acc = 0.0;
      for (std::size_t k = 0; k < nc; ++k) acc += coeff[k] * row[k];
      values[j] = acc;
    }
  }

  // L2 projection of grid values onto the first N modes (exact for band-limited data).
  void from_physical(std::span<const double> values, std::span<double> coeff) const {
    const std::size_t rows = nodes_.size();
    if (values.size() != rows)
      throw std::invalid_argument("from_physical: wrong input size");
    if (coeff.size() != n_)
      throw std::invalid_argument("from_physical: wrong output size");
    for (std::size_t k = 0; k < n_; ++k) coeff[k] = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      const double wv = weight_[j] * values[j];
      const double* row = &table_[j * n_];
      for (std::size_t k = 0; k < n_; ++k) coeff[k] += wv * row[k];
    }
  }

  // out = coefficients of pi_N f(u);  u given by its first N coefficients.
  void apply_projected(std::span<const double> u_coeff, std::span<double> out) const {
    if (out.size() != n_) throw std::invalid_argument("apply_projected: wrong output size");
    thread_local std::vector<double> vals, fvals, cvals, amps;
    vals.resize(nodes_.size());
    fvals.resize(nodes_.size());
    to_physical(u_coeff, vals);
    const std::span<const double> fmain = main_poly();
    for (std::size_t j = 0; j < vals.size(); ++j) fvals[j] = eval_poly(fmain, vals[j]);
    from_physical(fvals, out);

    if (!even_tables_built_) return;
    // Even-degree content of f on a Dirichlet basis: cosine pass.
    cvals.resize(cos_nodes_.size());
    amps.assign(n_even_freq_ + 1, 0.0);
    const std::size_t nc = std::min(u_coeff.size(), n_);
    for (std::size_t j = 0; j < cos_nodes_.size(); ++j) {
      const double* row = &u_cos_table_[j * n_];
      double acc = 0.0;
      for (std::size_t k = 0; k < nc; ++k) acc += u_coeff[k] * row[k];
      cvals[j] = eval_poly(f_even_, acc);
    }
    for (std::size_t j = 0; j < cos_nodes_.size(); ++j) {
      const double wv = cos_weight_[j] * cvals[j];
      const double* row = &dct_table_[j * (n_even_freq_ + 1)];
      for (std::size_t v = 0; v <= n_even_freq_; ++v) amps[v] += wv * row[v];
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = &cos_to_sin_[i * (n_even_freq_ + 1)];
      double acc = 0.0;
      for (std::size_t v = 0; v <= n_even_freq_; ++v) acc += amps[v] * row[v];
      out[i] += acc;
    }
  }

 private:
  bool even_part_present() const {
    for (double c : f_even_)
      if (c != 0.0) return true;
    return false;
  }

  std::span<const double> main_poly() const {
    // Dirichlet uses only the odd part on the sine grid; Neumann takes all of f.
    if (basis_.boundary() == Boundary::dirichlet) return f_odd_;
    return f_;
  }

  void split_parity() {
    f_odd_.assign(f_.size(), 0.0);
    f_even_.assign(f_.size(), 0.0);
    for (std::size_t i = 0; i < f_.size(); ++i)
      (i % 2 == 1 ? f_odd_[i] : f_even_[i]) = f_[i];
  }

  void build_main_table() {
    if (basis_.boundary() == Boundary::dirichlet) {
      const std::size_t M = m_pts_;
      nodes_.resize(M);
      weight_.assign(M, 1.0 / double(M + 1));
      table_.resize(M * n_);
      for (std::size_t j = 0; j < M; ++j) {
        nodes_[j] = double(j + 1) / double(M + 1);
        for (std::size_t k = 0; k < n_; ++k)
          table_[j * n_ + k] = basis_.eigenfunction(k + 1, nodes_[j]);
      }
    } else {
      const std::size_t M = m_pts_;
      nodes_.resize(M + 1);
      weight_.assign(M + 1, 1.0 / double(M));
      weight_.front() *= 0.5;
      weight_.back() *= 0.5;
      table_.resize((M + 1) * n_);
      for (std::size_t j = 0; j <= M; ++j) {
        nodes_[j] = double(j) / double(M);
        for (std::size_t k = 0; k < n_; ++k)
          table_[j * n_ + k] = basis_.eigenfunction(k + 1, nodes_[j]);
      }
    }
  }

  void build_even_tables() {
    // f_even(u) is a pure cosine series with frequency at most p_even * N
    // where p_even = degree of the even part.
    int p_even = 0;
    for (std::size_t i = 0; i < f_even_.size(); ++i)
      if (f_even_[i] != 0.0) p_even = int(i);
    n_even_freq_ = std::size_t(p_even) * n_;
    // DCT-I with Mc+1 nodes is alias-free for frequencies < Mc.
    const std::size_t Mc = std::max(m_pts_, n_even_freq_ + 1);
    cos_nodes_.resize(Mc + 1);
    cos_weight_.assign(Mc + 1, 1.0 / double(Mc));
    cos_weight_.front() *= 0.5;
    cos_weight_.back() *= 0.5;
    u_cos_table_.resize((Mc + 1) * n_);
    dct_table_.resize((Mc + 1) * (n_even_freq_ + 1));
    for (std::size_t j = 0; j <= Mc; ++j) {
      cos_nodes_[j] = double(j) / double(Mc);
      for (std::size_t k = 0; k < n_; ++k)
        u_cos_table_[j * n_ + k] = basis_.eigenfunction(k + 1, cos_nodes_[j]);
      // Row of the cosine analysis: amplitude of cos(v pi x) picks factor 2
      // except for v = 0 (trapezoid weights are folded in separately).
      for (std::size_t v = 0; v <= n_even_freq_; ++v) {
        const double scale = (v == 0) ? 1.0 : 2.0;
        dct_table_[j * (n_even_freq_ + 1) + v] =
            scale * std::cos(double(v) * kPi * cos_nodes_[j]);
      }
    }
    // Exact integrals  sqrt(2) * int_0^1 cos(v pi x) sin(i pi x) dx
    //                = sqrt(2) * 2 i / (pi (i^2 - v^2))   when i+v is odd, else 0.
    constexpr double rt2 = std::numbers::sqrt2_v<double>;
    cos_to_sin_.assign(n_ * (n_even_freq_ + 1), 0.0);
    for (std::size_t i1 = 1; i1 <= n_; ++i1)
      for (std::size_t v = 0; v <= n_even_freq_; ++v)
        if ((i1 + v) % 2 == 1) {
          const double ii = double(i1), vv = double(v);
          cos_to_sin_[(i1 - 1) * (n_even_freq_ + 1) + v] =
              rt2 * 2.0 * ii / (kPi * (ii * ii - vv * vv));
        }
    even_tables_built_ = true;
  }

  Eigenbasis basis_;
  std::size_t n_ = 0;
  std::size_t m_pts_ = 0;
  std::vector<double> f_, f_odd_, f_even_;
  std::vector<double> nodes_, weight_, table_;
  // even-part pass (Dirichlet only)
  bool even_tables_built_ = false;
  std::size_t n_even_freq_ = 0;
  std::vector<double> cos_nodes_, cos_weight_, u_cos_table_, dct_table_, cos_to_sin_;
};

// One-shot wrappers over Collocation for tests and small callers.  Hot loops
// should hold a Collocation and reuse it.

inline std::vector<double> to_physical(const SpectralField& u, std::size_t n_points) {
  Collocation plan(u.basis, std::max<std::size_t>(u.n_modes(), 1), {0.0, 1.0}, n_points);
  std::vector<double> v(plan.nodes().size());
  plan.to_physical(u.coeff, v);
  return v;
}

inline SpectralField from_physical(std::span<const double> values, const Eigenbasis& basis,
                                   std::size_t n_modes) {
  // Infer the grid from the sample count (interior for Dirichlet, closed for Neumann).
  const std::size_t n_points =
      basis.boundary() == Boundary::dirichlet ? values.size() : values.size() - 1;
  Collocation plan(basis, n_modes, {0.0, 1.0}, n_points);
  SpectralField u = zero_field(basis, n_modes);
  plan.from_physical(values, u.coeff);
  return u;
}

inline SpectralField nonlinearity_projected(const SpectralField& u, std::vector<double> f,
                                            std::size_t n_modes, std::size_t n_points = 0) {
  for (std::size_t i = n_modes; i < u.n_modes(); ++i)
    if (u.coeff[i] != 0.0)
      throw std::invalid_argument("nonlinearity_projected: field has modes above N");
  Collocation plan(u.basis, n_modes, std::move(f), n_points);
  SpectralField r = zero_field(u.basis, n_modes);
  plan.apply_projected(std::span<const double>(u.coeff.data(), std::min(u.n_modes(), n_modes)),
                       r.coeff);
  return r;
}

}  // namespace srdlab
