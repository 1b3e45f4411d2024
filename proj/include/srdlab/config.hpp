#pragma once
// Plain-text configuration: [section] headers over key = value lines, with
// '#' or ';' comments.  Unknown sections and keys are hard errors so a typo
// cannot silently run the wrong experiment.  Loading also runs every model
// and grid hypothesis check, so a config that loads is a config that can run.

#include <charconv>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srdlab/integrators.hpp"
#include "srdlab/model.hpp"
#include "srdlab/noise.hpp"
#include "srdlab/spectral.hpp"

namespace srdlab {

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view v, const std::string& where) {
  double out = 0.0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument("config: " + where + ": not a number: '" + std::string(v) + "'");
  return out;
}

inline std::uint64_t parse_uint(std::string_view v, const std::string& where) {
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw std::invalid_argument("config: " + where + ": not a nonnegative integer: '" +
                                std::string(v) + "'");
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view v) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < v.size()) {
    while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < v.size() && v[j] != ' ' && v[j] != '\t') ++j;
    if (j > i) parts.push_back(v.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace detail

inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap map;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      map[section];  // remember even when empty
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    if (section.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": key outside any [section]");
    if (!map[section].emplace(key, value).second)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" +
                                  key + "' in [" + section + "]");
  }
  return map;
}

// Typed experiment description with defaults matching the standard benchmark
// model.  Ladder and pairing fields are consumed by the drivers that need
// them and ignored by the rest.
struct ExperimentConfig {
  ModelParams model = allen_cahn(0.25);
  Boundary boundary = Boundary::dirichlet;
  double c0 = 1.0;
  std::size_t n_max = 256;

  NoiseKind noise_kind = NoiseKind::power_law;
  double q0 = 1.0;
  double q_decay = 2.0;
  double q_alpha = 0.4;
  std::vector<double> q_list;

  GridSpec grid;
  double t_final = 1.0;  // when positive, n_steps = k_of_t(t_final, tau)

  std::size_t samples = 1000;
  SchemeKind scheme = SchemeKind::tamed;
  std::vector<double> x0 = {0.5, -0.25, 0.125};
  std::size_t record_stride = 0;

  std::vector<double> taus;  // coarse ladder for the time-refinement study
  double tau_ref = 0.0;
  std::vector<std::size_t> n_list;  // mode ladder for the space-refinement study
  std::size_t n_ref = 128;
  std::vector<double> eps_list;

  std::vector<double> t_list;  // horizons for the coupling estimates
  double pair_distance = 1.0;
  std::size_t paths = 100;
  double tau_scale = 1e-3;  // coupled runs use step tau_scale * epsilon

  Eigenbasis make_basis() const { return Eigenbasis(boundary, c0, n_max); }

  NoiseSpec make_noise(const Eigenbasis& basis) const {
    if (noise_kind == NoiseKind::power_law) return NoiseSpec(basis, q0, q_decay, q_alpha);
    return NoiseSpec(basis, q_list, q_alpha);
  }

  SpectralField make_x0(const Eigenbasis& basis) const {
    SpectralField u = zero_field(basis, std::max<std::size_t>(x0.size(), 1));
    for (std::size_t i = 0; i < x0.size(); ++i) u.coeff[i] = x0[i];
    return u;
  }
};

inline ExperimentConfig load_experiment_config(const ConfigMap& map) {
  ExperimentConfig cfg;
  double kappa1 = 3.0, kappa2 = 0.5, epsilon = 0.25;
  int m = 1;
  std::vector<double> f_coeff = {0.0, -1.0, 0.0, 1.0};

  auto doubles = [](const std::string& v, const std::string& where) {
    std::vector<double> out;
    for (auto part : detail::split_ws(v)) out.push_back(detail::parse_double(part, where));
    return out;
  };

  for (const auto& [section, kv] : map) {
    if (section == "model") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[model] " + k;
        if (k == "f") {
          f_coeff = doubles(v, where);
        } else if (k == "m") {
          m = int(detail::parse_uint(v, where));
        } else if (k == "kappa1") {
          kappa1 = detail::parse_double(v, where);
        } else if (k == "kappa2") {
          kappa2 = detail::parse_double(v, where);
        } else if (k == "epsilon") {
          epsilon = detail::parse_double(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [model]");
        }
      }
    } else if (section == "domain") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[domain] " + k;
        if (k == "boundary") {
          if (v == "dirichlet") {
            cfg.boundary = Boundary::dirichlet;
          } else if (v == "neumann") {
            cfg.boundary = Boundary::neumann;
          } else {
            throw std::invalid_argument("config: [domain] boundary must be dirichlet or neumann");
          }
        } else if (k == "c0") {
          cfg.c0 = detail::parse_double(v, where);
        } else if (k == "n_max") {
          cfg.n_max = detail::parse_uint(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [domain]");
        }
      }
    } else if (section == "noise") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[noise] " + k;
        if (k == "kind") {
          if (v == "power_law") {
            cfg.noise_kind = NoiseKind::power_law;
          } else if (v == "explicit") {
            cfg.noise_kind = NoiseKind::explicit_list;
          } else {
            throw std::invalid_argument("config: [noise] kind must be power_law or explicit");
          }
        } else if (k == "q0") {
          cfg.q0 = detail::parse_double(v, where);
        } else if (k == "decay") {
          cfg.q_decay = detail::parse_double(v, where);
        } else if (k == "alpha") {
          cfg.q_alpha = detail::parse_double(v, where);
        } else if (k == "q") {
          cfg.q_list = doubles(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [noise]");
        }
      }
    } else if (section == "grid") {
      if (kv.count("n_steps") && kv.count("t_final"))
        throw std::invalid_argument("config: [grid] n_steps and t_final are mutually exclusive");
      for (const auto& [k, v] : kv) {
        const std::string where = "[grid] " + k;
        if (k == "n_modes") {
          cfg.grid.n_modes = detail::parse_uint(v, where);
        } else if (k == "tau") {
          cfg.grid.tau = detail::parse_double(v, where);
        } else if (k == "n_steps") {
          cfg.grid.n_steps = detail::parse_uint(v, where);
          cfg.t_final = 0.0;
        } else if (k == "t_final") {
          cfg.t_final = detail::parse_double(v, where);
        } else if (k == "sigma") {
          cfg.grid.sigma = detail::parse_double(v, where);
        } else if (k == "beta") {
          cfg.grid.beta = detail::parse_double(v, where);
        } else if (k == "n_colloc") {
          cfg.grid.n_colloc = detail::parse_uint(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [grid]");
        }
      }
    } else if (section == "run") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[run] " + k;
        if (k == "samples") {
          cfg.samples = detail::parse_uint(v, where);
        } else if (k == "scheme") {
          if (v == "tamed") {
            cfg.scheme = SchemeKind::tamed;
          } else if (v == "plain") {
            cfg.scheme = SchemeKind::plain;
          } else {
            throw std::invalid_argument("config: [run] scheme must be tamed or plain");
          }
        } else if (k == "x0") {
          cfg.x0 = doubles(v, where);
        } else if (k == "record_stride") {
          cfg.record_stride = detail::parse_uint(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [run]");
        }
      }
    } else if (section == "ladder") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[ladder] " + k;
        if (k == "taus") {
          cfg.taus = doubles(v, where);
        } else if (k == "tau_ref") {
          cfg.tau_ref = detail::parse_double(v, where);
        } else if (k == "n_list") {
          cfg.n_list.clear();
          for (auto part : detail::split_ws(v))
            cfg.n_list.push_back(detail::parse_uint(part, where));
        } else if (k == "n_ref") {
          cfg.n_ref = detail::parse_uint(v, where);
        } else if (k == "eps_list") {
          cfg.eps_list = doubles(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [ladder]");
        }
      }
    } else if (section == "pairing") {
      for (const auto& [k, v] : kv) {
        const std::string where = "[pairing] " + k;
        if (k == "t_list") {
          cfg.t_list = doubles(v, where);
        } else if (k == "distance") {
          cfg.pair_distance = detail::parse_double(v, where);
        } else if (k == "paths") {
          cfg.paths = detail::parse_uint(v, where);
        } else if (k == "tau_scale") {
          cfg.tau_scale = detail::parse_double(v, where);
        } else {
          throw std::invalid_argument("config: unknown key '" + k + "' in [pairing]");
        }
      }
    } else {
      throw std::invalid_argument("config: unknown section [" + section + "]");
    }
  }

  cfg.model = make_model(std::move(f_coeff), m, kappa1, kappa2, epsilon);
  if (cfg.t_final > 0.0) {
    cfg.grid.n_steps = std::max<std::size_t>(1, k_of_t(cfg.t_final, cfg.grid.tau));
  } else if (cfg.grid.n_steps < 1) {
    throw std::invalid_argument("config: need t_final > 0 or n_steps >= 1");
  }
  if (cfg.grid.n_modes > cfg.n_max)
    throw std::invalid_argument("config: [grid] n_modes exceeds [domain] n_max");
  if (cfg.samples < 1) throw std::invalid_argument("config: [run] samples must be >= 1");
  if (cfg.x0.size() > cfg.n_max)
    throw std::invalid_argument("config: [run] x0 has more entries than [domain] n_max");

  // hypothesis checks: drift conditions, trace class, regularity windows
  const ConditionReport rep = verify_conditions(cfg.model);
  if (!rep.all_ok())
    throw std::invalid_argument("config: drift conditions fail (dissipativity margin " +
                                std::to_string(rep.dissipativity.margin) + ")");
  const Eigenbasis basis = cfg.make_basis();
  (void)cfg.make_noise(basis);
  validate_grid(cfg.grid, cfg.model);
  return cfg;
}

inline ExperimentConfig load_experiment_config(std::string_view text) {
  return load_experiment_config(parse_config_text(text));
}

}  // namespace srdlab
