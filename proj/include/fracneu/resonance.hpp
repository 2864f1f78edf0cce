#pragma once

// Resonance / non-resonance classification of points x in R^d.
//
// The resonance domain of beta is V_beta = { x : | |x|^{2l} - |x+beta|^{2l} | < r(l) }
// with r(l) = r^{3 alpha}.  A point is non-resonant when it lies outside
// V_beta for every nonzero beta with |beta| < p r^alpha (the test set).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "fracneu/errors.hpp"
#include "fracneu/lattice.hpp"

namespace fracneu {

/// Shell constants for |x| ~ r: c1 r < |x| < c2 r.
inline constexpr double kShellInner = 0.5;
inline constexpr double kShellOuter = 2.0;

/// alpha(l) = (2l - 1) / (2 (d + 20) 3^{d+1}).
inline double default_alpha(double ell, int d) {
  return (2.0 * ell - 1.0) / (2.0 * (d + 20) * std::pow(3.0, d + 1));
}

struct ResonanceParams {
  double r = 0.0;
  int p = 0;
  double ell = 0.0;
  int d = 0;
  double alpha = 0.0;
  /// alpha_k = 3^k alpha for k = 1..p, stored at [k-1].
  std::vector<double> alpha_k;
  /// r(l) = r^{alpha_1}.
  double threshold = 0.0;
  /// r^alpha, radius of the ball the potential is truncated to.
  double perturbation_radius = 0.0;
  std::optional<double> exponent_override;
  bool classical = false;
  bool threshold_overridden = false;

  bool override_active() const { return exponent_override.has_value() || threshold_overridden; }
  /// p1 = floor((p + 1) / 3), the number of iterations of the series.
  int p1() const { return (p + 1) / 3; }
  /// c = floor((d - 1) / (2 alpha)) + 1, saturated to int64.
  std::int64_t c() const {
    const double v = std::floor((d - 1) / (2.0 * alpha)) + 1.0;
    if (v >= 9.0e18) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(v);
  }
  /// p r^alpha, radius of the witness test set.
  double test_radius() const { return p * perturbation_radius; }
  double alpha_at(int k) const { return std::pow(3.0, k) * alpha; }

  /// Copy with r(l) replaced; marks the result as an override run.
  ResonanceParams with_threshold(double t) const {
    ResonanceParams q = *this;
    q.threshold = t;
    q.threshold_overridden = true;
    return q;
  }
};

inline ResonanceParams derive_params(double r, int p, double ell, int d,
                                     std::optional<double> alpha_override = std::nullopt,
                                     bool allow_classical = false) {
  check_order(ell, allow_classical);
  if (!(r > 1.0) || !std::isfinite(r)) {
    throw Error(ErrorCode::ScaleTooSmall, "r must exceed 1, got " + std::to_string(r));
  }
  if (p < 1) throw Error(ErrorCode::DepthOutOfRange, "p must be >= 1");
  if (d < 2) throw Error(ErrorCode::DimensionTooSmall, "d must be >= 2");
  if (alpha_override && !(*alpha_override > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "exponent override must be positive");
  }
  ResonanceParams out;
  out.r = r;
  out.p = p;
  out.ell = ell;
  out.d = d;
  out.classical = ell == 1.0;
  out.exponent_override = alpha_override;
  out.alpha = alpha_override ? *alpha_override : default_alpha(ell, d);
  out.alpha_k.reserve(static_cast<std::size_t>(p));
  for (int k = 1; k <= p; ++k) out.alpha_k.push_back(std::pow(3.0, k) * out.alpha);
  out.threshold = std::pow(r, 3.0 * out.alpha);
  out.perturbation_radius = std::pow(r, out.alpha);
  return out;
}

/// | (|x|^2)^l - (|x+beta|^2)^l |, evaluated from the exact difference
/// |x+beta|^2 - |x|^2 = 2<x,beta> + |beta|^2 so that huge |x| does not cancel.
inline double resonance_gap(std::span<const double> x, std::span<const double> beta, double ell) {
  double a = 0.0, dot = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a += x[i] * x[i];
    dot += x[i] * beta[i];
    bb += beta[i] * beta[i];
  }
  const double diff = 2.0 * dot + bb;
  if (diff == 0.0) return 0.0;
  const double b = std::max(a + diff, 0.0);
  constexpr double kTiny = 1e-300;
  if (a > kTiny && b > kTiny) {
    return std::abs(std::pow(a, ell) * std::expm1(ell * std::log1p(diff / a)));
  }
  return std::abs(frac_power(a, ell) - frac_power(b, ell));
}

/// | |x|^2 - |x+beta|^2 |, the l = 1 gap.
inline double classical_gap(std::span<const double> x, std::span<const double> beta) {
  double dot = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * beta[i];
    bb += beta[i] * beta[i];
  }
  return std::abs(2.0 * dot + bb);
}

enum class DomainKind { resonance, non_resonance };

struct DomainLabel {
  DomainKind kind = DomainKind::non_resonance;
  std::vector<LatticeVector> witnesses;
};

/// Caches the witness test set for repeated classification.
class ResonanceClassifier {
 public:
  ResonanceClassifier(BoxDomain box, ResonanceParams params)
      : box_(std::move(box)), params_(std::move(params)) {
    if (static_cast<int>(box_.dimension()) != params_.d) {
      throw Error(ErrorCode::DimensionMismatch, "box and params disagree on d");
    }
    test_set_ = open_ball_nonzero(box_, params_.test_radius());
    if (test_set_.empty()) {
      throw Error(ErrorCode::EmptyTestSet,
                  "no nonzero lattice vector with |beta| < p r^alpha = " +
                      std::to_string(params_.test_radius()));
    }
    for (const auto& b : test_set_) components_.push_back(b.components());
  }

  const BoxDomain& box() const { return box_; }
  const ResonanceParams& params() const { return params_; }
  const std::vector<LatticeVector>& test_set() const { return test_set_; }

  DomainLabel classify(std::span<const double> x) const {
    DomainLabel label;
    for (std::size_t k = 0; k < test_set_.size(); ++k) {
      if (resonance_gap(x, components_[k], params_.ell) < params_.threshold) {
        label.witnesses.push_back(test_set_[k]);
      }
    }
    label.kind = label.witnesses.empty() ? DomainKind::non_resonance : DomainKind::resonance;
    return label;
  }

  /// x in U^l(threshold, p): every fractional gap at least `threshold`.
  bool nonresonant(std::span<const double> x, double threshold) const {
    for (const auto& b : components_) {
      if (resonance_gap(x, b, params_.ell) < threshold) return false;
    }
    return true;
  }
  bool nonresonant(std::span<const double> x) const { return nonresonant(x, params_.threshold); }

  /// x in U(threshold, p) for the classical (l = 1) gap.
  bool classically_nonresonant(std::span<const double> x, double threshold) const {
    for (const auto& b : components_) {
      if (classical_gap(x, b) < threshold) return false;
    }
    return true;
  }

  double min_gap(std::span<const double> x) const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& b : components_) g = std::min(g, resonance_gap(x, b, params_.ell));
    return g;
  }

 private:
  BoxDomain box_;
  ResonanceParams params_;
  std::vector<LatticeVector> test_set_;
  std::vector<std::vector<double>> components_;
};

inline DomainLabel classify_point(std::span<const double> x, const BoxDomain& box,
                                  const ResonanceParams& params) {
  return ResonanceClassifier(box, params).classify(x);
}

/// |beta^k| > (1/3) r^{alpha_1 - 2l + 2} for every component k.
inline bool coordinate_bound_check(const LatticeVector& beta, const ResonanceParams& params) {
  const double bound = std::pow(params.r, 3.0 * params.alpha - 2.0 * params.ell + 2.0) / 3.0;
  for (std::size_t k = 0; k < beta.dimension(); ++k) {
    if (!(std::abs(beta.component(k)) > bound)) return false;
  }
  return true;
}

// Counter-based randomness: every (seed, sample, stream) triple maps to a
// fixed uniform deviate, independent of evaluation order.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform on [0, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t stream) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(sample ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Sample `index` of the uniform distribution on { c1 r < |x| < c2 r } in R^d.
inline void sample_shell_point(int d, double r, std::uint64_t seed, std::uint64_t index,
                               std::span<double> out, double c1 = kShellInner,
                               double c2 = kShellOuter) {
  double nrm = 0.0;
  std::uint64_t stream = 0;
  for (int i = 0; i < d; i += 2) {
    const double u1 = 1.0 - counter_uniform(seed, index, stream++);
    const double u2 = counter_uniform(seed, index, stream++);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    out[i] = rad * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < d) out[i + 1] = rad * std::sin(2.0 * std::numbers::pi * u2);
  }
  for (int i = 0; i < d; ++i) nrm += out[i] * out[i];
  nrm = std::sqrt(nrm);
  const double u = counter_uniform(seed, index, stream++);
  const double lo = std::pow(c1, d), hi = std::pow(c2, d);
  const double rho = r * std::pow(lo + u * (hi - lo), 1.0 / d);
  for (int i = 0; i < d; ++i) out[i] *= rho / nrm;
}

/// Run body(begin, end, worker) over [0, n) split into contiguous blocks.
template <class Body>
void parallel_blocks(std::uint64_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, threads);
  if (threads == 1 || n < 2) {
    body(std::uint64_t{0}, n, 0u);
    return;
  }
  std::vector<std::thread> pool;
  const std::uint64_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::uint64_t b = t * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e, t] { body(b, e, t); });
  }
  for (auto& th : pool) th.join();
}

struct MeasureEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::uint64_t nonresonant = 0;
  std::uint64_t samples = 0;
  bool override_active = false;
};

/// Monte Carlo estimate of mu(U^l cap shell) / mu(shell).
inline MeasureEstimate nonresonance_fraction(const BoxDomain& box, const ResonanceParams& params,
                                             std::uint64_t n_samples, std::uint64_t seed,
                                             unsigned threads = 1) {
  if (n_samples < 1000) throw Error(ErrorCode::InvalidArgument, "need at least 1000 samples");
  const ResonanceClassifier cls(box, params);
  std::vector<std::uint64_t> counts(std::max(1u, threads), 0);
  parallel_blocks(n_samples, threads, [&](std::uint64_t b, std::uint64_t e, unsigned t) {
    std::vector<double> x(static_cast<std::size_t>(params.d));
    std::uint64_t local = 0;
    for (std::uint64_t i = b; i < e; ++i) {
      sample_shell_point(params.d, params.r, seed, i, x);
      if (cls.nonresonant(x)) ++local;
    }
    counts[t] = local;
  });
  MeasureEstimate est;
  for (auto c : counts) est.nonresonant += c;
  est.samples = n_samples;
  est.fraction = static_cast<double>(est.nonresonant) / static_cast<double>(n_samples);
  est.standard_error = std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(n_samples));
  est.override_active = params.override_active();
  return est;
}

/// A 2-D affine slice: point(s, t) = base + s u + t v with s = s0 + i ds, t = t0 + j dt.
struct GridSpec {
  std::vector<double> base;
  std::vector<double> u;
  std::vector<double> v;
  double s0 = 0.0, t0 = 0.0;
  double ds = 1.0, dt = 1.0;
  std::size_t ns = 1, nt = 1;

  /// Coordinate-plane grid in d = 2.
  static GridSpec plane(double x0, double y0, double dx, double dy, std::size_t nx, std::size_t ny) {
    GridSpec g;
    g.base = {0.0, 0.0};
    g.u = {1.0, 0.0};
    g.v = {0.0, 1.0};
    g.s0 = x0;
    g.t0 = y0;
    g.ds = dx;
    g.dt = dy;
    g.ns = nx;
    g.nt = ny;
    return g;
  }
};

struct ScanCell {
  double s = 0.0, t = 0.0;
  std::vector<double> gaps;
  double gap_min = 0.0;
  int witness_count = 0;
  bool in_resonance = false;
};

struct ScanResult {
  std::vector<ScanCell> cells;  // row-major over t then s
  std::vector<LatticeVector> betas;
  double threshold = 0.0;
  bool override_active = false;
};

inline constexpr std::size_t kDefaultMaxCells = 4'000'000;

/// Gap per beta and union membership on every cell of the slice.  An empty
/// beta list means the params' witness test set.
inline ScanResult scan_slice(const BoxDomain& box, const ResonanceParams& params,
                             const GridSpec& grid, std::vector<LatticeVector> betas,
                             std::size_t max_cells = kDefaultMaxCells, unsigned threads = 1) {
  const std::size_t d = box.dimension();
  if (grid.base.size() != d || grid.u.size() != d || grid.v.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "grid vectors must have dimension d");
  }
  if (grid.ns == 0 || grid.nt == 0 || grid.ns > max_cells / grid.nt) {
    throw Error(ErrorCode::GridTooLarge,
                std::to_string(grid.ns) + " x " + std::to_string(grid.nt) + " cells, cap " +
                    std::to_string(max_cells));
  }
  if (betas.empty()) betas = ResonanceClassifier(box, params).test_set();
  std::vector<std::vector<double>> comps;
  for (const auto& b : betas) comps.push_back(b.components());

  ScanResult res;
  res.betas = betas;
  res.threshold = params.threshold;
  res.override_active = params.override_active();
  res.cells.resize(grid.ns * grid.nt);
  parallel_blocks(grid.nt, threads, [&](std::uint64_t b, std::uint64_t e, unsigned) {
    std::vector<double> x(d);
    for (std::uint64_t j = b; j < e; ++j) {
      for (std::size_t i = 0; i < grid.ns; ++i) {
        ScanCell& cell = res.cells[j * grid.ns + i];
        cell.s = grid.s0 + static_cast<double>(i) * grid.ds;
        cell.t = grid.t0 + static_cast<double>(j) * grid.dt;
        for (std::size_t k = 0; k < d; ++k) x[k] = grid.base[k] + cell.s * grid.u[k] + cell.t * grid.v[k];
        cell.gaps.resize(comps.size());
        cell.gap_min = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < comps.size(); ++m) {
          cell.gaps[m] = resonance_gap(x, comps[m], params.ell);
          cell.gap_min = std::min(cell.gap_min, cell.gaps[m]);
          if (cell.gaps[m] < params.threshold) ++cell.witness_count;
        }
        cell.in_resonance = cell.witness_count > 0;
      }
    }
  });
  return res;
}

inline std::string format_sig12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

/// Map data: header "x1,x2,gap_min,witness_count,in_resonance", one row per cell.
inline std::string scan_to_csv(const ScanResult& scan) {
  std::string out = "x1,x2,gap_min,witness_count,in_resonance\n";
  for (const auto& c : scan.cells) {
    out += format_sig12(c.s) + "," + format_sig12(c.t) + "," + format_sig12(c.gap_min) + "," +
           std::to_string(c.witness_count) + "," + (c.in_resonance ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace fracneu
