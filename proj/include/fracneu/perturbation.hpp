#pragma once

// Iteration series for a non-resonance mode beta.
//
// Tuples (b_1, ..., b_{j+1}) are drawn from the full lattice ball
// B(r^alpha) restricted to q != 0.  Partial sums P_i = b_1 + ... + b_i index
// the denominators xi - |beta + P_i|^{2l}.  S_j keeps tuples with P_{j+1} = 0
// and P_1..P_j != 0; C_{p1} keeps tuples with every partial sum nonzero.
// Under this rule the series is an exact rearrangement of the binding formula.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracneu/errors.hpp"
#include "fracneu/galerkin.hpp"
#include "fracneu/lattice.hpp"
#include "fracneu/potential.hpp"
#include "fracneu/resonance.hpp"

namespace fracneu {

/// |xi - |beta|^{2l}| > r(l) / 2.
inline bool iteration_condition(double xi, const LatticeVector& beta, const ResonanceParams& params) {
  return std::abs(xi - frac_power(beta.norm_sq(), params.ell)) > 0.5 * params.threshold;
}

namespace detail {

struct StepSet {
  std::vector<std::pair<Index, double>> terms;  // lexicographic
  std::map<Index, double> lookup;
  std::vector<int> reach;  // max |n_a| over the steps, per axis
};

inline StepSet step_set(const PotentialSpec& q, const ResonanceParams& params) {
  StepSet s;
  s.reach.assign(q.box().dimension(), 0);
  for (auto& [v, c] : q.full_lattice_terms(params.perturbation_radius)) {
    for (std::size_t a = 0; a < v.dimension(); ++a) s.reach[a] = std::max(s.reach[a], std::abs(v.index()[a]));
    s.lookup.emplace(v.index(), c);
    s.terms.emplace_back(v.index(), c);
  }
  return s;
}

inline bool is_zero_index(const Index& n) {
  for (int v : n) {
    if (v != 0) return false;
  }
  return true;
}

inline bool reachable(const Index& partial, const std::vector<int>& reach, int steps) {
  for (std::size_t a = 0; a < partial.size(); ++a) {
    if (std::abs(partial[a]) > static_cast<std::int64_t>(steps) * reach[a]) return false;
  }
  return true;
}

inline double vanishing_tolerance(double xi) {
  return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(xi));
}

inline std::string tuple_string(const std::vector<Index>& tuple) {
  std::string s = "[";
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    if (i) s += ",";
    s += to_string(tuple[i]);
  }
  return s + "]";
}

}  // namespace detail

struct SeriesTerm {
  double value = 0.0;
  /// Smallest |xi - |beta + P_i|^{2l}| over contributing tuples (inf if none).
  double min_denominator = std::numeric_limits<double>::infinity();
  std::uint64_t tuples = 0;
};

/// S_j(xi) with full diagnostics.  Partitioned over b_1 when threads > 1; the
/// per-partition sums are reduced in b_1 order regardless of thread count.
inline SeriesTerm series_term_detail(int j, double xi, const LatticeVector& beta, const PotentialSpec& q,
                                     const ResonanceParams& params, unsigned threads = 1) {
  if (j < 1 || j > params.p1()) {
    throw Error(ErrorCode::DepthOutOfRange,
                "j=" + std::to_string(j) + " outside 1.." + std::to_string(params.p1()));
  }
  if (!(q.box() == beta.box())) throw Error(ErrorCode::DimensionMismatch, "q and beta boxes differ");
  const auto steps = detail::step_set(q, params);
  const auto& box = beta.box();
  const std::size_t d = box.dimension();
  const double tol = detail::vanishing_tolerance(xi);
  const std::size_t n1 = steps.terms.size();

  struct Partial {
    double sum = 0.0;
    double min_den = std::numeric_limits<double>::infinity();
    std::uint64_t tuples = 0;
    std::optional<std::string> vanishing;
  };
  std::vector<Partial> partials(n1);

  parallel_blocks(n1, threads, [&](std::uint64_t b0, std::uint64_t b1, unsigned) {
    std::vector<Index> path(static_cast<std::size_t>(j));
    Index shifted(d);
    for (std::uint64_t first = b0; first < b1; ++first) {
      Partial& out = partials[first];
      // depth i has chosen b_1..b_i; P holds P_i, num the product of q's, den the product of denominators
      std::function<void(int, const Index&, double, double, double)> dfs =
          [&](int i, const Index& P, double num, double den, double min_den) {
            if (out.vanishing) return;
            if (i == j) {
              Index last(d);
              for (std::size_t a = 0; a < d; ++a) last[a] = -P[a];
              auto it = steps.lookup.find(last);
              if (it == steps.lookup.end()) return;
              if (min_den <= tol) {
                auto tuple = path;
                tuple.push_back(last);
                out.vanishing = "tuple " + detail::tuple_string(tuple) + " at xi=" + std::to_string(xi);
                return;
              }
              out.sum += num * it->second / den;
              out.min_den = std::min(out.min_den, min_den);
              ++out.tuples;
              return;
            }
            for (const auto& [step, c] : steps.terms) {
              Index next = P;
              for (std::size_t a = 0; a < d; ++a) next[a] += step[a];
              if (detail::is_zero_index(next)) continue;
              if (!detail::reachable(next, steps.reach, j - i)) continue;
              for (std::size_t a = 0; a < d; ++a) shifted[a] = beta.index()[a] + next[a];
              const double dn = xi - frac_power(norm_sq(box, shifted), params.ell);
              path[static_cast<std::size_t>(i)] = step;
              dfs(i + 1, next, num * c, den * dn, std::min(min_den, std::abs(dn)));
            }
          };
      const auto& [step, c] = steps.terms[first];
      if (!detail::reachable(step, steps.reach, j)) continue;
      for (std::size_t a = 0; a < d; ++a) shifted[a] = beta.index()[a] + step[a];
      const double dn = xi - frac_power(norm_sq(box, shifted), params.ell);
      path[0] = step;
      dfs(1, step, c, dn, std::abs(dn));
    }
  });

  SeriesTerm out;
  for (const auto& p : partials) {
    if (p.vanishing) throw Error(ErrorCode::VanishingDenominator, *p.vanishing);
    out.value += p.sum;
    out.min_denominator = std::min(out.min_denominator, p.min_den);
    out.tuples += p.tuples;
  }
  return out;
}

inline double series_term(int j, double xi, const LatticeVector& beta, const PotentialSpec& q,
                          const ResonanceParams& params, unsigned threads = 1) {
  return series_term_detail(j, xi, beta, q, params, threads).value;
}

/// sum over b_1 in B(r^alpha) of q_{b_1}^2 / (|beta|^{2l} - |beta + b_1|^{2l}).
inline double f1_closed_form(const LatticeVector& beta, const PotentialSpec& q, const ResonanceParams& params) {
  const double lam = frac_power(beta.norm_sq(), params.ell);
  double s = 0.0;
  for (const auto& [b1, c] : q.full_lattice_terms(params.perturbation_radius)) {
    const double dn = lam - frac_power((beta + b1).norm_sq(), params.ell);
    if (std::abs(dn) <= detail::vanishing_tolerance(lam)) {
      throw Error(ErrorCode::VanishingDenominator, "b_1=" + to_string(b1.index()));
    }
    s += c * c / dn;
  }
  return s;
}

/// 2^j r(l)^{-j} M^{j+1}
inline double term_bound(int j, double threshold, double mass_value) {
  return std::pow(2.0, j) * std::pow(threshold, -j) * std::pow(mass_value, j + 1);
}

struct SeriesResult {
  LatticeVector beta;
  double ell = 0.0;
  double r = 0.0;
  double free_eigenvalue = 0.0;
  int kmax = 0;
  /// S_1..S_{min(p1, kmax)} evaluated at the predicted value.
  std::vector<double> S;
  /// Minimum denominator magnitude per entry of S.
  std::vector<double> min_denominator;
  /// F_0..F_kmax
  std::vector<double> F;
  /// |beta|^{2l} + F_{k-1} for k = 1..kmax
  std::vector<double> predicted_per_k;
  double predicted = 0.0;
  double f1_closed = 0.0;
  double f1_series = 0.0;
  bool override_active = false;
};

/// F_0 = 0, F_k = sum_{i<=k} S_i(|beta|^{2l} + F_{k-1}); prediction |beta|^{2l} + F_{kmax-1}.
inline SeriesResult F_sequence(int kmax, const LatticeVector& beta, const PotentialSpec& q,
                               const ResonanceParams& params, unsigned threads = 1) {
  const std::int64_t upper = std::min<std::int64_t>(static_cast<std::int64_t>(params.p) - params.c(), params.p1());
  if (kmax < 1 || kmax > upper) {
    throw Error(ErrorCode::DepthOutOfRange,
                "kmax=" + std::to_string(kmax) + " outside 1.." + std::to_string(upper) +
                    " (p - c = " + std::to_string(static_cast<std::int64_t>(params.p) - params.c()) +
                    ", p1 = " + std::to_string(params.p1()) + ")");
  }
  SeriesResult out;
  out.beta = beta;
  out.ell = params.ell;
  out.r = params.r;
  out.kmax = kmax;
  out.override_active = params.override_active();
  out.free_eigenvalue = frac_power(beta.norm_sq(), params.ell);
  const double lam = out.free_eigenvalue;
  out.F.push_back(0.0);
  for (int k = 1; k <= kmax; ++k) {
    const double xi = lam + out.F.back();
    double fk = 0.0;
    for (int i = 1; i <= k; ++i) fk += series_term(i, xi, beta, q, params, threads);
    out.F.push_back(fk);
  }
  for (int k = 1; k <= kmax; ++k) out.predicted_per_k.push_back(lam + out.F[static_cast<std::size_t>(k - 1)]);
  out.predicted = out.predicted_per_k.back();
  out.f1_closed = f1_closed_form(beta, q, params);
  out.f1_series = out.F[1];
  for (int i = 1; i <= std::min(kmax, params.p1()); ++i) {
    const auto t = series_term_detail(i, out.predicted, beta, q, params, threads);
    out.S.push_back(t.value);
    out.min_denominator.push_back(t.min_denominator);
  }
  return out;
}

/// h(N, gamma) lookup for the un-normalized coefficient (chi_N, v_gamma);
/// nullopt marks a target outside the table.
using CoefficientLookup = std::function<std::optional<double>(const Index&)>;

struct RemainderResult {
  double value = 0.0;
  /// A target or intermediate mode was missing from the table.
  bool tail = false;
  double min_denominator = std::numeric_limits<double>::infinity();
};

/// C_{p1}(xi, zeta): tuples of p1 + 1 steps with every partial sum nonzero and
/// zeta = h(beta + P_{p1+1}).  Paths through modes missing from the table are
/// dropped (their h vanishes) and flagged as tail.
inline RemainderResult remainder_C(int p1, double xi, const LatticeVector& beta, const PotentialSpec& q,
                                   const CoefficientLookup& h, const ResonanceParams& params) {
  if (p1 < 1) throw Error(ErrorCode::DepthOutOfRange, "p1 must be >= 1");
  const auto steps = detail::step_set(q, params);
  const auto& box = beta.box();
  const std::size_t d = box.dimension();
  const double tol = detail::vanishing_tolerance(xi);
  RemainderResult out;
  std::vector<Index> path(static_cast<std::size_t>(p1 + 1));
  std::function<void(int, const Index&, double, double, double)> dfs =
      [&](int i, const Index& P, double num, double den, double min_den) {
        for (const auto& [step, c] : steps.terms) {
          Index next = P;
          for (std::size_t a = 0; a < d; ++a) next[a] += step[a];
          if (detail::is_zero_index(next)) continue;
          Index target(d);
          for (std::size_t a = 0; a < d; ++a) target[a] = beta.index()[a] + next[a];
          path[static_cast<std::size_t>(i)] = step;
          const auto hv = h(target);
          if (!hv) {
            out.tail = true;
            continue;
          }
          if (i == p1) {
            if (min_den <= tol) {
              throw Error(ErrorCode::VanishingDenominator, "tuple " + detail::tuple_string(path));
            }
            out.value += num * c * *hv / den;
            out.min_denominator = std::min(out.min_denominator, min_den);
            continue;
          }
          const double dn = xi - frac_power(norm_sq(box, target), params.ell);
          dfs(i + 1, next, num * c, den * dn, std::min(min_den, std::abs(dn)));
        }
      };
  dfs(0, Index(d, 0), 1.0, 1.0, std::numeric_limits<double>::infinity());
  return out;
}

struct IdentityCheck {
  double residual = 0.0;
  double lhs = 0.0;
  double series = 0.0;  // sum_i S_i(xi_N) h(N, beta)
  double remainder = 0.0;
  std::size_t N = 0;
  double xi = 0.0;
  bool tail = false;
};

/// |(xi_N - |beta|^{2l}) h(N,beta) - sum_{i<=p1} S_i(xi_N) h(N,beta) - C_{p1}|
/// with h taken from the Galerkin solution.
inline IdentityCheck verify_iteration_identity(const LatticeVector& beta, const PotentialSpec& q,
                                               const ResonanceParams& params, const EigenSolution& sol,
                                               int p1) {
  if (p1 < 1 || p1 > params.p1()) {
    throw Error(ErrorCode::DepthOutOfRange,
                "p1=" + std::to_string(p1) + " outside 1.." + std::to_string(params.p1()));
  }
  Match m;
  try {
    m = match_eigenvalue(beta, sol, params);
  } catch (const Error& e) {
    throw Error(ErrorCode::NoMatchedEigenpair, e.what());
  }
  IdentityCheck out;
  out.N = m.N;
  out.xi = m.xi;
  const double hb = *sol.h_plain(m.N, beta.index());
  out.lhs = (m.xi - frac_power(beta.norm_sq(), params.ell)) * hb;
  for (int i = 1; i <= p1; ++i) out.series += series_term(i, m.xi, beta, q, params) * hb;
  const auto rem = remainder_C(p1, m.xi, beta, q, [&](const Index& g) { return sol.h_plain(m.N, g); }, params);
  out.remainder = rem.value;
  out.tail = rem.tail;
  out.residual = std::abs(out.lhs - out.series - out.remainder);
  return out;
}

}  // namespace fracneu
