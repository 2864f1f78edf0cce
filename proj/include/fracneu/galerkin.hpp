#pragma once

// Truncated Galerkin model of H = (-Delta_NEU)^l + q in the orthonormalized
// cosine basis { v_beta / ||v_beta|| : beta in B+, |beta| <= cutoff }.
//
// Coefficient convention: EigenSolution stores the orthonormal coefficient
//   hn(N, beta) = (chi_N, v_beta) / ||v_beta||.
// The un-normalized h(N, beta) = (chi_N, v_beta) used by the binding formula
// and the iteration series is hn * ||v_beta|| (see EigenSolution::h_plain).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracneu/errors.hpp"
#include "fracneu/lattice.hpp"
#include "fracneu/potential.hpp"
#include "fracneu/resonance.hpp"

namespace fracneu {

inline constexpr std::size_t kDefaultBasisCap = 4096;

class SpectralBasis {
 public:
  SpectralBasis() = default;
  SpectralBasis(BoxDomain box, double cutoff, std::vector<LatticeVector> modes)
      : box_(std::move(box)), cutoff_(cutoff), modes_(std::move(modes)) {
    for (std::size_t k = 0; k < modes_.size(); ++k) {
      const double n = std::sqrt(basis_norm_sq(modes_[k], box_));
      norms_.push_back(n);
      normalizers_.push_back(1.0 / n);
      lookup_.emplace(modes_[k].index(), k);
    }
  }

  const BoxDomain& box() const { return box_; }
  double cutoff() const { return cutoff_; }
  std::size_t size() const { return modes_.size(); }
  const std::vector<LatticeVector>& modes() const { return modes_; }
  const LatticeVector& mode(std::size_t k) const { return modes_[k]; }
  /// ||v_beta|| per mode.
  const std::vector<double>& norms() const { return norms_; }
  /// 1 / ||v_beta|| per mode.
  const std::vector<double>& normalizers() const { return normalizers_; }

  /// Position of the canonical representative of n, if it is in the basis.
  std::optional<std::size_t> find(const Index& n) const {
    auto it = lookup_.find(canonical_index(n));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

 private:
  BoxDomain box_;
  double cutoff_ = 0.0;
  std::vector<LatticeVector> modes_;
  std::vector<double> norms_;
  std::vector<double> normalizers_;
  std::map<Index, std::size_t> lookup_;
};

inline SpectralBasis build_basis(const BoxDomain& box, double cutoff,
                                 std::size_t cap = kDefaultBasisCap) {
  if (!(cutoff > 0.0)) throw Error(ErrorCode::InvalidArgument, "cutoff must be positive");
  auto modes = enumerate_lattice(box, cutoff, true);
  if (modes.size() > cap) {
    throw Error(ErrorCode::BasisTooLarge, std::to_string(modes.size()) + " modes exceed cap " +
                                              std::to_string(cap));
  }
  return SpectralBasis(box, cutoff, std::move(modes));
}

/// v_delta v_beta = sum_gamma w_gamma v_gamma on integer indices, any d >= 1.
/// Per axis cos(a x) cos(b x) = 1/2 cos((a+b) x) + 1/2 cos(|a-b| x) when both
/// a, b != 0, and cos(max(a, b) x) otherwise.  Equal gammas are merged.
inline std::vector<std::pair<Index, double>> product_expand_index(const Index& delta,
                                                                  const Index& beta) {
  std::map<Index, double> acc;
  std::vector<std::pair<Index, double>> partial{{Index{}, 1.0}};
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const int a = std::abs(delta[i]), b = std::abs(beta[i]);
    std::vector<std::pair<Index, double>> next;
    for (const auto& [g, w] : partial) {
      if (a == 0 || b == 0) {
        auto h = g;
        h.push_back(std::max(a, b));
        next.emplace_back(std::move(h), w);
      } else {
        auto plus = g, minus = g;
        plus.push_back(a + b);
        minus.push_back(std::abs(a - b));
        next.emplace_back(std::move(plus), 0.5 * w);
        next.emplace_back(std::move(minus), 0.5 * w);
      }
    }
    partial = std::move(next);
  }
  for (auto& [g, w] : partial) acc[g] += w;
  return {acc.begin(), acc.end()};
}

inline std::vector<std::pair<LatticeVector, double>> product_expand(const LatticeVector& delta,
                                                                    const LatticeVector& beta) {
  std::vector<std::pair<LatticeVector, double>> out;
  for (auto& [g, w] : product_expand_index(delta.index(), beta.index())) {
    out.emplace_back(LatticeVector(beta.box(), std::move(g)), w);
  }
  return out;
}

/// Matrix of H in the orthonormalized basis:
///   H[g][b] = delta_gb |b|^{2l} + (q v_b, v_g) / (||v_b|| ||v_g||).
/// The potential part is exact: q v_b = sum over representatives delta of
/// |A_delta| q_delta v_delta v_b, expanded with product_expand.
inline Eigen::MatrixXd assemble(const SpectralBasis& basis, const PotentialSpec& q, double ell,
                                unsigned threads = 1) {
  if (!(q.box() == basis.box())) throw Error(ErrorCode::DimensionMismatch, "q and basis boxes differ");
  const std::size_t n = basis.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::pair<Index, double>> weighted;
  for (const auto& [d, c] : q.representatives()) {
    if (c == 0.0) continue;
    weighted.emplace_back(d, static_cast<double>(orbit_size(LatticeVector(q.box(), d))) * c);
  }
  const auto& norms = basis.norms();
  parallel_blocks(n, threads, [&](std::uint64_t b0, std::uint64_t b1, unsigned) {
    for (std::uint64_t b = b0; b < b1; ++b) {
      const auto& beta = basis.mode(b);
      const auto col = static_cast<Eigen::Index>(b);
      h(col, col) += frac_power(beta.norm_sq(), ell);
      for (const auto& [d, wq] : weighted) {
        for (const auto& [g, w] : product_expand_index(d, beta.index())) {
          if (auto row = basis.find(g)) {
            h(static_cast<Eigen::Index>(*row), col) += wq * w * norms[*row] / norms[b];
          }
        }
      }
    }
  });
  return h;
}

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column k pairs with values[k]
  double max_scaled_residual = 0.0;
};

/// Dense symmetric eigendecomposition; each pair must satisfy
/// ||H v - xi v|| <= 1e-9 (1 + |xi|).
inline SymmetricEigen solve_symmetric(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols()) throw Error(ErrorCode::InvalidArgument, "matrix must be square");
  SymmetricEigen out;
  if (h.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "eigensolver did not converge");
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    const double xi = out.values[k];
    const double res = (sym * out.vectors.col(k) - xi * out.vectors.col(k)).norm();
    const double scaled = res / (1.0 + std::abs(xi));
    out.max_scaled_residual = std::max(out.max_scaled_residual, scaled);
    if (scaled > 1e-9) {
      throw Error(ErrorCode::ConvergenceFailure,
                  "eigenpair " + std::to_string(k) + " residual " + std::to_string(res));
    }
  }
  return out;
}

struct Match {
  LatticeVector beta;
  std::size_t N = 0;
  double xi = 0.0;
  /// Orthonormal coefficient hn(N, beta).
  double h = 0.0;
  double free_eigenvalue = 0.0;
  double half_width = 0.0;
  /// Basis modes sharing beta's free eigenvalue (the degenerate cluster).
  std::vector<LatticeVector> cluster;
  /// r^{-(d - 2l)/2}, the scale of the lower bound on |h|.
  double h_scale = 0.0;
};

class EigenSolution {
 public:
  EigenSolution() = default;
  EigenSolution(SpectralBasis basis, SymmetricEigen eig)
      : basis_(std::move(basis)), eig_(std::move(eig)) {}

  const SpectralBasis& basis() const { return basis_; }
  std::size_t size() const { return static_cast<std::size_t>(eig_.values.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eig_.values; }
  double eigenvalue(std::size_t N) const { return eig_.values[static_cast<Eigen::Index>(N)]; }
  const Eigen::MatrixXd& coefficients() const { return eig_.vectors; }
  double max_scaled_residual() const { return eig_.max_scaled_residual; }

  /// hn(N, gamma) for any-sign gamma; nullopt outside the truncated basis.
  std::optional<double> h_normalized(std::size_t N, const Index& gamma) const {
    auto k = basis_.find(gamma);
    if (!k) return std::nullopt;
    return eig_.vectors(static_cast<Eigen::Index>(*k), static_cast<Eigen::Index>(N));
  }
  /// h(N, gamma) = (chi_N, v_gamma); nullopt outside the truncated basis.
  std::optional<double> h_plain(std::size_t N, const Index& gamma) const {
    auto k = basis_.find(gamma);
    if (!k) return std::nullopt;
    return eig_.vectors(static_cast<Eigen::Index>(*k), static_cast<Eigen::Index>(N)) *
           basis_.norms()[*k];
  }

  std::vector<Match> matches;

 private:
  SpectralBasis basis_;
  SymmetricEigen eig_;
};

inline EigenSolution solve(const SpectralBasis& basis, const Eigen::MatrixXd& h) {
  if (static_cast<std::size_t>(h.rows()) != basis.size()) {
    throw Error(ErrorCode::DimensionMismatch, "matrix and basis sizes differ");
  }
  return EigenSolution(basis, solve_symmetric(h));
}

/// Eigenvalue xi_N with |xi_N - |beta|^{2l}| < half_width (default r(l)/2)
/// maximizing |hn(N, beta)|.
inline Match match_eigenvalue(const LatticeVector& beta, const EigenSolution& sol,
                              const ResonanceParams& params,
                              std::optional<double> half_width = std::nullopt) {
  const auto k = sol.basis().find(beta.index());
  if (!k) throw Error(ErrorCode::ModeOutsideBasis, to_string(beta.index()) + " is not a basis mode");
  Match m;
  m.beta = beta.canonical();
  m.free_eigenvalue = frac_power(beta.norm_sq(), params.ell);
  m.half_width = half_width.value_or(0.5 * params.threshold);
  m.h_scale = std::pow(params.r, -(params.d - 2.0 * params.ell) / 2.0);
  const auto& vecs = sol.coefficients();
  bool found = false;
  double best = -1.0;
  for (std::size_t N = 0; N < sol.size(); ++N) {
    if (!(std::abs(sol.eigenvalue(N) - m.free_eigenvalue) < m.half_width)) continue;
    const double h = vecs(static_cast<Eigen::Index>(*k), static_cast<Eigen::Index>(N));
    if (std::abs(h) > best) {
      best = std::abs(h);
      m.N = N;
      m.xi = sol.eigenvalue(N);
      m.h = h;
      found = true;
    }
  }
  if (!found) {
    throw Error(ErrorCode::NoEigenvalueInWindow,
                "no eigenvalue within " + std::to_string(m.half_width) + " of " +
                    std::to_string(m.free_eigenvalue));
  }
  const double ns = beta.norm_sq();
  for (const auto& mode : sol.basis().modes()) {
    if (std::abs(mode.norm_sq() - ns) <= 1e-12 * std::max(1.0, ns)) m.cluster.push_back(mode);
  }
  return m;
}

struct BindingCheck {
  double residual = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::size_t N = 0;
  double xi = 0.0;
  /// Some beta + beta_1 fell outside the basis (treated as h = 0).
  bool tail = false;
  /// |beta| <= cutoff - support_radius(q).
  bool interior = false;
};

/// Residual of (xi_N - |beta|^{2l}) h(N, beta) = (chi_N, q v_beta), with the
/// right side expanded as sum_{beta_1 in B} q_{beta_1} h(N, beta + beta_1).
inline BindingCheck verify_binding(const EigenSolution& sol, const PotentialSpec& q,
                                   const LatticeVector& beta, const ResonanceParams& params) {
  Match m;
  try {
    m = match_eigenvalue(beta, sol, params);
  } catch (const Error& e) {
    throw Error(ErrorCode::NoMatchedEigenpair, e.what());
  }
  BindingCheck out;
  out.N = m.N;
  out.xi = m.xi;
  out.interior = beta.norm() <= sol.basis().cutoff() - q.support_radius();
  out.lhs = (m.xi - m.free_eigenvalue) * *sol.h_plain(m.N, beta.index());
  double rhs = 0.0;
  for (const auto& [b1, c] : q.full_lattice_terms(std::numeric_limits<double>::infinity())) {
    const auto h = sol.h_plain(m.N, (beta + b1).index());
    if (!h) {
      out.tail = true;
      continue;
    }
    rhs += c * *h;
  }
  out.rhs = rhs;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

struct ParsevalSplit {
  double inside_mass = 0.0;
  double outside_mass = 0.0;
};

/// Split of sum_N hn(N, beta)^2 by |xi_N - |beta|^{2l}| <= half_width.
inline ParsevalSplit parseval_check(const EigenSolution& sol, const LatticeVector& beta,
                                    const ResonanceParams& params,
                                    std::optional<double> half_width = std::nullopt) {
  const auto k = sol.basis().find(beta.index());
  if (!k) throw Error(ErrorCode::ModeOutsideBasis, to_string(beta.index()) + " is not a basis mode");
  const double lam = frac_power(beta.norm_sq(), params.ell);
  const double hw = half_width.value_or(0.5 * params.threshold);
  ParsevalSplit out;
  for (std::size_t N = 0; N < sol.size(); ++N) {
    const double h = sol.coefficients()(static_cast<Eigen::Index>(*k), static_cast<Eigen::Index>(N));
    (std::abs(sol.eigenvalue(N) - lam) <= hw ? out.inside_mass : out.outside_mass) += h * h;
  }
  return out;
}

/// max_N |a_N - b_N| for two ascending spectra of equal length.
inline double sorted_spectrum_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "spectra differ in length");
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

/// Number of free eigenvalues |beta|^{2l}, beta in B+, inside (a^{2l} - 1, a^{2l} + 1).
inline std::size_t free_window_count(const BoxDomain& box, double a, double ell) {
  const double centre = std::pow(a, 2.0 * ell);
  const double outer = std::pow(centre + 1.0, 1.0 / (2.0 * ell));
  std::size_t count = 0;
  for (const auto& v : enumerate_lattice(box, outer, true)) {
    const double lam = frac_power(v.norm_sq(), ell);
    if (lam > centre - 1.0 && lam < centre + 1.0) ++count;
  }
  return count;
}

}  // namespace fracneu
