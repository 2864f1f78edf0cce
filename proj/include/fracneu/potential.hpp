#pragma once

// The potential q(x) = sum_{beta in B} q_beta v_beta(x) held as one real
// coefficient per sign orbit.  The full-lattice coefficient of any delta in
// B is the coefficient of its canonical representative, so the expansion is
// orbit-constant by construction.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "fracneu/errors.hpp"
#include "fracneu/lattice.hpp"

namespace fracneu {

class PotentialSpec {
 public:
  PotentialSpec() = default;
  PotentialSpec(BoxDomain box, std::map<Index, double> coeffs, int smoothness_order)
      : box_(std::move(box)), coeffs_(std::move(coeffs)), m_(smoothness_order) {
    for (const auto& [n, c] : coeffs_) {
      if (c != 0.0) support_radius_ = std::max(support_radius_, std::sqrt(norm_sq(box_, n)));
    }
  }

  const BoxDomain& box() const { return box_; }
  /// Orbit representatives (all n_i >= 0) and their coefficients, lexicographic.
  const std::map<Index, double>& representatives() const { return coeffs_; }
  int smoothness_order() const { return m_; }
  double support_radius() const { return support_radius_; }
  bool is_zero() const {
    for (const auto& [n, c] : coeffs_) {
      if (c != 0.0) return false;
    }
    return true;
  }

  /// q_delta for any delta in B (any signs).
  double coefficient(const Index& n) const {
    auto it = coeffs_.find(canonical_index(n));
    return it == coeffs_.end() ? 0.0 : it->second;
  }

  /// Every delta in B with q_delta != 0 and |delta| < radius, lexicographic.
  std::vector<std::pair<LatticeVector, double>> full_lattice_terms(double radius) const {
    std::vector<std::pair<LatticeVector, double>> out;
    for (const auto& [n, c] : coeffs_) {
      if (c == 0.0 || !(norm_sq(box_, n) < radius * radius)) continue;
      for (auto& member : sign_orbit(LatticeVector(box_, n))) out.emplace_back(std::move(member), c);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
  }

 private:
  BoxDomain box_;
  std::map<Index, double> coeffs_;
  int m_ = 0;
  double support_radius_ = 0.0;
};

inline PotentialSpec make_potential(const BoxDomain& box,
                                    const std::vector<std::pair<LatticeVector, double>>& entries,
                                    int smoothness_order) {
  std::map<Index, double> coeffs;
  for (const auto& [v, c] : entries) {
    if (v.dimension() != box.dimension()) {
      throw Error(ErrorCode::DimensionMismatch, "entry " + to_string(v.index()));
    }
    if (v.is_zero()) throw Error(ErrorCode::ZeroModeForbidden, "q_0 must vanish");
    if (!v.is_canonical()) {
      throw Error(ErrorCode::NonCanonicalRepresentative,
                  to_string(v.index()) + " has a negative component");
    }
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
    if (!coeffs.emplace(v.index(), c).second) {
      throw Error(ErrorCode::DuplicateEntry, to_string(v.index()));
    }
  }
  return PotentialSpec(box, std::move(coeffs), smoothness_order);
}

inline PotentialSpec make_potential(const BoxDomain& box,
                                    const std::vector<std::pair<Index, double>>& entries,
                                    int smoothness_order) {
  std::vector<std::pair<LatticeVector, double>> lv;
  for (const auto& [n, c] : entries) {
    if (n.size() != box.dimension()) {
      throw Error(ErrorCode::DimensionMismatch, "entry " + to_string(n));
    }
    lv.emplace_back(LatticeVector(box, n), c);
  }
  return make_potential(box, lv, smoothness_order);
}

/// q(x) by direct cosine synthesis over the representatives.
inline double evaluate(const PotentialSpec& q, std::span<const double> x) {
  const auto& box = q.box();
  if (x.size() != box.dimension()) throw Error(ErrorCode::DimensionMismatch, "point dimension");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= box.side(i))) {
      throw Error(ErrorCode::PointOutsideBox, "coordinate " + std::to_string(i + 1));
    }
  }
  double s = 0.0;
  for (const auto& [n, c] : q.representatives()) {
    const LatticeVector v(box, n);
    s += static_cast<double>(orbit_size(v)) * c * basis_function(v, x);
  }
  return s;
}

/// M = sum over B of |q_beta|.
inline double mass(const PotentialSpec& q) {
  double s = 0.0;
  for (const auto& [n, c] : q.representatives()) {
    s += static_cast<double>(orbit_size(LatticeVector(q.box(), n))) * std::abs(c);
  }
  return s;
}

struct Truncation {
  PotentialSpec kept;
  double tail_mass = 0.0;
};

/// Keep representatives with |beta| < radius; the discarded mass is returned alongside.
inline Truncation truncate(const PotentialSpec& q, double radius) {
  std::map<Index, double> kept;
  double tail = 0.0;
  for (const auto& [n, c] : q.representatives()) {
    if (norm_sq(q.box(), n) < radius * radius) {
      kept.emplace(n, c);
    } else {
      tail += static_cast<double>(orbit_size(LatticeVector(q.box(), n))) * std::abs(c);
    }
  }
  return {PotentialSpec(q.box(), std::move(kept), q.smoothness_order()), tail};
}

/// sum over B of |q_beta|^2 (1 + |beta|^{2m}).
inline double smoothness_sum(const PotentialSpec& q, int m) {
  double s = 0.0;
  for (const auto& [n, c] : q.representatives()) {
    const LatticeVector v(q.box(), n);
    s += static_cast<double>(orbit_size(v)) * c * c * (1.0 + std::pow(v.norm_sq(), m));
  }
  return s;
}

// Potential file format: UTF-8 text, a header line "m=<int>" followed by one
// record per line "n_1 ... n_d coefficient".  Blank lines and lines starting
// with '#' are ignored.

inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string write_potential(const PotentialSpec& q) {
  std::string out = "m=" + std::to_string(q.smoothness_order()) + "\n";
  for (const auto& [n, c] : q.representatives()) {
    for (int v : n) out += std::to_string(v) + " ";
    out += format_double(c) + "\n";
  }
  return out;
}

inline PotentialSpec parse_potential(const std::string& text, const BoxDomain& box) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  int m = 0;
  std::vector<std::pair<Index, double>> entries;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!have_header) {
      if (line.compare(first, 2, "m=") != 0) fail("expected header 'm=<int>'");
      const char* b = line.data() + first + 2;
      const char* e = line.data() + line.size();
      auto [p, ec] = std::from_chars(b, e, m);
      if (ec != std::errc() || p != e) fail("bad smoothness order");
      have_header = true;
      continue;
    }
    std::vector<std::string> tokens;
    std::istringstream ts(line);
    for (std::string t; ts >> t;) tokens.push_back(t);
    if (tokens.size() != box.dimension() + 1) {
      fail("expected " + std::to_string(box.dimension() + 1) + " fields, got " +
           std::to_string(tokens.size()));
    }
    Index n(box.dimension());
    for (std::size_t i = 0; i < box.dimension(); ++i) {
      const auto& t = tokens[i];
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), n[i]);
      if (ec != std::errc() || p != t.data() + t.size()) fail("bad index '" + t + "'");
    }
    double c = 0.0;
    const auto& t = tokens.back();
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), c);
    if (ec != std::errc() || p != t.data() + t.size()) fail("bad coefficient '" + t + "'");
    entries.emplace_back(std::move(n), c);
  }
  if (!have_header) throw Error(ErrorCode::ParseError, "missing header 'm=<int>'");
  return make_potential(box, entries, m);
}

inline PotentialSpec read_potential(const std::string& path, const BoxDomain& box) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::ParseError, "cannot open potential file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_potential(ss.str(), box);
}

}  // namespace fracneu
