#pragma once

// RunConfig: the flat JSON object read by the command-line front end.  Every
// key is optional; unknown keys are rejected.  Validation derives everything
// the subcommands need before any computation starts.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracneu/errors.hpp"
#include "fracneu/lattice.hpp"
#include "fracneu/potential.hpp"
#include "fracneu/resonance.hpp"

namespace fracneu {

using ordered_json = nlohmann::ordered_json;

struct RunConfig {
  std::vector<double> box{std::numbers::pi, std::numbers::pi / std::numbers::sqrt2};
  double ell = 0.75;
  double r = 10.0;
  int p = 5;
  int kmax = 2;
  std::string potential;  // empty: zero potential
  double cutoff = 15.0;
  std::optional<double> override_alpha;
  std::uint64_t seed = 20240517;
  std::uint64_t samples = 100000;
  std::string out = ".";
  double tolerance_scale = 1.0;
  bool allow_classical = false;

  // directory used to resolve a relative potential path; not serialized
  std::string base_dir;
};

inline ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["box"] = c.box;
  j["ell"] = c.ell;
  j["r"] = c.r;
  j["p"] = c.p;
  j["kmax"] = c.kmax;
  j["potential"] = c.potential;
  j["cutoff"] = c.cutoff;
  j["override_alpha"] = c.override_alpha ? ordered_json(*c.override_alpha) : ordered_json(nullptr);
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["out"] = c.out;
  j["tolerance_scale"] = c.tolerance_scale;
  j["allow_classical"] = c.allow_classical;
  return j;
}

namespace detail {

template <class T>
T config_field(const nlohmann::json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ConfigError, "key '" + key + "' has the wrong type");
  }
}

inline double config_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw Error(ErrorCode::ConfigError, "key '" + key + "' must be a number");
  return v.get<double>();
}

inline std::int64_t config_integer(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw Error(ErrorCode::ConfigError, "key '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, std::string base_dir = ".") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  RunConfig c;
  c.base_dir = std::move(base_dir);
  for (const auto& [key, v] : j.items()) {
    if (key == "box") {
      if (!v.is_array()) throw Error(ErrorCode::ConfigError, "key 'box' must be an array");
      c.box.clear();
      for (const auto& a : v) c.box.push_back(detail::config_number(a, key));
    } else if (key == "ell") {
      c.ell = detail::config_number(v, key);
    } else if (key == "r") {
      c.r = detail::config_number(v, key);
    } else if (key == "p") {
      c.p = static_cast<int>(detail::config_integer(v, key));
    } else if (key == "kmax") {
      c.kmax = static_cast<int>(detail::config_integer(v, key));
    } else if (key == "potential") {
      c.potential = detail::config_field<std::string>(v, key);
    } else if (key == "cutoff") {
      c.cutoff = detail::config_number(v, key);
    } else if (key == "override_alpha") {
      if (v.is_null()) {
        c.override_alpha.reset();
      } else {
        c.override_alpha = detail::config_number(v, key);
      }
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw Error(ErrorCode::ConfigError, "key 'seed' must be a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "samples") {
      if (!v.is_number_unsigned()) throw Error(ErrorCode::ConfigError, "key 'samples' must be a non-negative integer");
      c.samples = v.get<std::uint64_t>();
    } else if (key == "out") {
      c.out = detail::config_field<std::string>(v, key);
    } else if (key == "tolerance_scale") {
      c.tolerance_scale = detail::config_number(v, key);
    } else if (key == "allow_classical") {
      c.allow_classical = detail::config_field<bool>(v, key);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

/// Everything derived from a RunConfig.
struct Prepared {
  RunConfig config;
  BoxDomain box;
  ResonanceParams params;
  PotentialSpec potential;
};

/// Runs every precondition check up front; any failure is a ConfigError.
inline Prepared prepare(const RunConfig& c) {
  Prepared out;
  out.config = c;
  try {
    out.box = make_box(c.box);
    out.params = derive_params(c.r, c.p, c.ell, static_cast<int>(c.box.size()), c.override_alpha,
                               c.allow_classical);
    if (c.potential.empty()) {
      out.potential = PotentialSpec(out.box, {}, 0);
    } else {
      std::filesystem::path path(c.potential);
      if (path.is_relative()) path = std::filesystem::path(c.base_dir) / path;
      out.potential = read_potential(path.string(), out.box);
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (c.kmax < 1) throw Error(ErrorCode::ConfigError, "kmax must be >= 1");
  if (!(c.cutoff > 0.0) || !std::isfinite(c.cutoff)) throw Error(ErrorCode::ConfigError, "cutoff must be positive");
  if (c.samples < 1000) throw Error(ErrorCode::ConfigError, "samples must be >= 1000");
  if (!(c.tolerance_scale >= 0.0) || !std::isfinite(c.tolerance_scale)) {
    throw Error(ErrorCode::ConfigError, "tolerance_scale must be finite and >= 0");
  }
  if (c.out.empty()) throw Error(ErrorCode::ConfigError, "out must name a directory");
  return out;
}

}  // namespace fracneu
