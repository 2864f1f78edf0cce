#pragma once

// Box geometry and the cosine-mode lattice of the Neumann Laplacian on
// K = [0,a_1] x ... x [0,a_d].  A mode beta has components n_i * pi / a_i;
// modes are stored as integer multi-indices and components are derived on
// demand.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fracneu/errors.hpp"

namespace fracneu {

using Index = std::vector<int>;

class BoxDomain {
 public:
  BoxDomain() = default;

  std::size_t dimension() const { return impl_ ? impl_->sides.size() : 0; }
  const std::vector<double>& sides() const { return impl_->sides; }
  double side(std::size_t i) const { return impl_->sides[i]; }
  double volume() const { return impl_->volume; }
  /// pi / a_i, the lattice spacing along axis i.
  double spacing(std::size_t i) const { return impl_->spacing[i]; }
  /// (pi / a_i)^2
  double spacing_sq(std::size_t i) const { return impl_->spacing_sq[i]; }

  friend bool operator==(const BoxDomain& a, const BoxDomain& b) {
    if (a.impl_ == b.impl_) return true;
    if (!a.impl_ || !b.impl_) return false;
    return a.impl_->sides == b.impl_->sides;
  }

 private:
  struct Impl {
    std::vector<double> sides;
    std::vector<double> spacing;
    std::vector<double> spacing_sq;
    double volume = 1.0;
  };
  std::shared_ptr<const Impl> impl_;

  friend BoxDomain make_box(std::vector<double> sides);
};

inline BoxDomain make_box(std::vector<double> sides) {
  if (sides.size() < 2) {
    throw Error(ErrorCode::DimensionTooSmall,
                "box needs at least 2 sides, got " + std::to_string(sides.size()));
  }
  auto impl = std::make_shared<BoxDomain::Impl>();
  for (double a : sides) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::NonPositiveSide, "side length " + std::to_string(a));
    }
    impl->spacing.push_back(std::numbers::pi / a);
    impl->spacing_sq.push_back(impl->spacing.back() * impl->spacing.back());
    impl->volume *= a;
  }
  impl->sides = std::move(sides);
  BoxDomain box;
  box.impl_ = std::move(impl);
  return box;
}

/// Squared Euclidean norm of the mode with multi-index n.
inline double norm_sq(const BoxDomain& box, std::span<const int> n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    s += static_cast<double>(n[i]) * static_cast<double>(n[i]) * box.spacing_sq(i);
  }
  return s;
}

/// (|beta|^2)^ell with the zero mode mapped to exactly 0.
inline double frac_power(double norm_sq_value, double ell) {
  if (norm_sq_value <= 0.0) return 0.0;
  return std::pow(norm_sq_value, ell);
}

/// Fractional order range check.  The admitted range is (1/2, 1); ell = 1 is
/// the classical Neumann Laplacian and only passes when explicitly allowed.
inline void check_order(double ell, bool allow_classical) {
  const bool open_range = ell > 0.5 && ell < 1.0;
  const bool classical = allow_classical && ell == 1.0;
  if (!open_range && !classical) {
    throw Error(ErrorCode::OrderOutOfRange,
                "fractional order " + std::to_string(ell) +
                    (allow_classical ? " outside (1/2, 1]" : " outside (1/2, 1)"));
  }
}

class LatticeVector {
 public:
  LatticeVector() = default;
  LatticeVector(BoxDomain box, Index n) : box_(std::move(box)), n_(std::move(n)) {
    if (n_.size() != box_.dimension()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "index has " + std::to_string(n_.size()) + " entries, box has dimension " +
                      std::to_string(box_.dimension()));
    }
  }

  const Index& index() const { return n_; }
  const BoxDomain& box() const { return box_; }
  std::size_t dimension() const { return n_.size(); }

  double component(std::size_t i) const { return n_[i] * box_.spacing(i); }
  std::vector<double> components() const {
    std::vector<double> c(n_.size());
    for (std::size_t i = 0; i < n_.size(); ++i) c[i] = component(i);
    return c;
  }

  double norm_sq() const { return fracneu::norm_sq(box_, n_); }
  double norm() const { return std::sqrt(norm_sq()); }

  bool is_zero() const {
    for (int v : n_) {
      if (v != 0) return false;
    }
    return true;
  }
  /// Member of B+ (every n_i >= 0).
  bool is_canonical() const {
    for (int v : n_) {
      if (v < 0) return false;
    }
    return true;
  }
  /// Componentwise absolute value: the B+ representative of the sign orbit.
  LatticeVector canonical() const {
    Index m = n_;
    for (int& v : m) v = v < 0 ? -v : v;
    return LatticeVector(box_, std::move(m));
  }

  LatticeVector operator+(const LatticeVector& other) const {
    Index m = n_;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += other.n_[i];
    return LatticeVector(box_, std::move(m));
  }
  LatticeVector operator-() const {
    Index m = n_;
    for (int& v : m) v = -v;
    return LatticeVector(box_, std::move(m));
  }

  friend bool operator==(const LatticeVector& a, const LatticeVector& b) { return a.n_ == b.n_; }
  friend auto operator<=>(const LatticeVector& a, const LatticeVector& b) { return a.n_ <=> b.n_; }

 private:
  BoxDomain box_;
  Index n_;
};

inline std::string to_string(const Index& n) {
  std::string s = "(";
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(n[i]);
  }
  return s + ")";
}

inline Index canonical_index(Index n) {
  for (int& v : n) v = v < 0 ? -v : v;
  return n;
}

namespace detail {

inline void enumerate_axis(const BoxDomain& box, double radius_sq, bool positive_only,
                           std::size_t axis, double partial, Index& current,
                           std::vector<LatticeVector>& out) {
  const std::size_t d = box.dimension();
  if (axis == d) {
    out.emplace_back(box, current);
    return;
  }
  const double remaining = radius_sq - partial;
  const int nmax = static_cast<int>(std::floor(std::sqrt(std::max(remaining, 0.0)) / box.spacing(axis)));
  const int nmin = positive_only ? 0 : -nmax;
  for (int n = nmin; n <= nmax; ++n) {
    const double contrib = static_cast<double>(n) * n * box.spacing_sq(axis);
    if (partial + contrib > radius_sq) continue;
    current[axis] = n;
    enumerate_axis(box, radius_sq, positive_only, axis + 1, partial + contrib, current, out);
  }
}

}  // namespace detail

/// All modes of B (or B+) with |beta| <= radius, lexicographic on the index.
inline std::vector<LatticeVector> enumerate_lattice(const BoxDomain& box, double radius,
                                                    bool positive_only) {
  std::vector<LatticeVector> out;
  if (!(radius >= 0.0)) return out;
  Index current(box.dimension(), 0);
  detail::enumerate_axis(box, radius * radius, positive_only, 0, 0.0, current, out);
  return out;
}

/// Modes with 0 < |beta| < radius (strict ball, zero excluded), lexicographic.
inline std::vector<LatticeVector> open_ball_nonzero(const BoxDomain& box, double radius) {
  std::vector<LatticeVector> out;
  for (auto& v : enumerate_lattice(box, radius, false)) {
    if (!v.is_zero() && v.norm_sq() < radius * radius) out.push_back(std::move(v));
  }
  return out;
}

/// Eigenvalue |beta|^{2 ell} of the spectral fractional Neumann Laplacian.
/// Orders in (1/2, 1] are accepted; ell = 1 gives the classical |beta|^2.
inline double frac_norm(const LatticeVector& v, double ell) {
  if (!(ell > 0.5 && ell <= 1.0)) {
    throw Error(ErrorCode::OrderOutOfRange, "fractional order " + std::to_string(ell));
  }
  return frac_power(v.norm_sq(), ell);
}

/// |A_beta| = 2^(number of nonzero components).
inline std::int64_t orbit_size(const LatticeVector& v) {
  std::int64_t s = 1;
  for (int n : v.index()) {
    if (n != 0) s *= 2;
  }
  return s;
}

/// Explicit sign orbit A_beta, lexicographic.
inline std::vector<LatticeVector> sign_orbit(const LatticeVector& v) {
  std::vector<Index> members{Index{}};
  for (int n : v.index()) {
    std::vector<Index> next;
    for (const auto& m : members) {
      auto a = m;
      a.push_back(-std::abs(n));
      next.push_back(a);
      if (n != 0) {
        auto b = m;
        b.push_back(std::abs(n));
        next.push_back(b);
      }
    }
    members = std::move(next);
  }
  std::vector<LatticeVector> out;
  for (auto& m : members) out.emplace_back(v.box(), std::move(m));
  return out;
}

/// ||v_beta||^2 = mu(K) * 2^{-z(beta)}.
inline double basis_norm_sq(const LatticeVector& v, const BoxDomain& box) {
  return box.volume() / static_cast<double>(orbit_size(v));
}

/// v_beta(x) = prod cos(beta^i x_i).
inline double basis_function(const LatticeVector& v, std::span<const double> x) {
  double p = 1.0;
  for (std::size_t i = 0; i < v.dimension(); ++i) p *= std::cos(v.component(i) * x[i]);
  return p;
}

/// e_i, the unit lattice step along axis i (1-based).
inline LatticeVector unit_step(int i, const BoxDomain& box) {
  const int d = static_cast<int>(box.dimension());
  if (i < 1 || i > d) {
    throw Error(ErrorCode::IndexOutOfRange,
                "axis " + std::to_string(i) + " not in 1.." + std::to_string(d));
  }
  Index n(box.dimension(), 0);
  n[static_cast<std::size_t>(i - 1)] = 1;
  return LatticeVector(box, std::move(n));
}

}  // namespace fracneu
