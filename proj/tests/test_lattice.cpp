#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "fracneu/lattice.hpp"

using namespace fracneu;

namespace {

constexpr double pi = std::numbers::pi;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(MakeBox, VolumeAndDimension) {
  const auto b = make_box({pi, pi});
  EXPECT_EQ(b.dimension(), 2u);
  EXPECT_NEAR(b.volume(), pi * pi, 1e-14 * pi * pi);
  const auto c = make_box({pi, pi / std::sqrt(2.0)});
  EXPECT_NEAR(c.volume(), pi * pi / std::sqrt(2.0), 1e-14 * c.volume());
}

TEST(MakeBox, Errors) {
  EXPECT_EQ(code_of([] { make_box({pi}); }), ErrorCode::DimensionTooSmall);
  EXPECT_EQ(code_of([] { make_box({pi, 0.0}); }), ErrorCode::NonPositiveSide);
  EXPECT_EQ(code_of([] { make_box({-1.0, 2.0}); }), ErrorCode::NonPositiveSide);
}

TEST(MakeBox, VolumeIsProductOfSides) {
  const std::vector<double> sides{0.3, 1.7, 2.9};
  const auto b = make_box(sides);
  EXPECT_NEAR(b.volume(), 0.3 * 1.7 * 2.9, 1e-14 * b.volume());
}

TEST(EnumerateLattice, PositiveRadiusOnePointFive) {
  const auto b = make_box({pi, pi});
  const auto v = enumerate_lattice(b, 1.5, true);
  std::vector<Index> got;
  for (const auto& x : v) got.push_back(x.index());
  EXPECT_EQ(got, (std::vector<Index>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(EnumerateLattice, FullLatticeHasNine) {
  const auto b = make_box({pi, pi});
  EXPECT_EQ(enumerate_lattice(b, 1.5, false).size(), 9u);
}

TEST(EnumerateLattice, SmallRadiusOnlyZero) {
  const auto b = make_box({pi, pi});
  const auto v = enumerate_lattice(b, 0.5, true);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_TRUE(v[0].is_zero());
}

TEST(EnumerateLattice, PositiveIsCanonicalImageOfFull) {
  for (auto sides : {std::vector<double>{pi, pi}, std::vector<double>{pi, pi / std::sqrt(2.0)},
                     std::vector<double>{1.0, 2.0, 0.7}}) {
    const auto b = make_box(sides);
    for (double radius : {0.5, 3.0, 7.3}) {
      std::set<Index> image;
      for (const auto& v : enumerate_lattice(b, radius, false)) image.insert(v.canonical().index());
      std::set<Index> pos;
      for (const auto& v : enumerate_lattice(b, radius, true)) pos.insert(v.index());
      EXPECT_EQ(image, pos);
    }
  }
}

TEST(EnumerateLattice, LexicographicAndWithinRadius) {
  const auto b = make_box({pi, pi / std::sqrt(2.0)});
  const auto v = enumerate_lattice(b, 9.3, false);
  EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
  for (const auto& x : v) EXPECT_LE(x.norm(), 9.3);
  // brute force count
  std::size_t count = 0;
  for (int i = -20; i <= 20; ++i)
    for (int j = -20; j <= 20; ++j)
      if (i * i + 2 * j * j <= 86) ++count;  // 9.3^2 = 86.49
  EXPECT_EQ(v.size(), count);
}

TEST(FracNorm, Examples) {
  const auto b = make_box({pi, pi});
  EXPECT_NEAR(frac_norm(LatticeVector(b, {3, 4}), 0.75), 11.180339887, 1e-9);
  EXPECT_EQ(frac_norm(LatticeVector(b, {0, 0}), 0.6), 0.0);
  EXPECT_DOUBLE_EQ(frac_norm(LatticeVector(b, {1, 0}), 1.0), 1.0);
  EXPECT_EQ(code_of([&] { frac_norm(LatticeVector(b, {1, 0}), 0.5); }), ErrorCode::OrderOutOfRange);
  EXPECT_EQ(code_of([&] { frac_norm(LatticeVector(b, {1, 0}), 1.01); }), ErrorCode::OrderOutOfRange);
}

TEST(FracNorm, StrictlyIncreasingAndClassicalLimit) {
  const auto b = make_box({pi, pi / std::sqrt(2.0)});
  auto v = enumerate_lattice(b, 12.0, true);
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& c) { return a.norm_sq() < c.norm_sq(); });
  for (double ell : {0.55, 0.75, 0.95}) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i].norm_sq() > v[i - 1].norm_sq() * (1 + 1e-12)) EXPECT_GT(frac_norm(v[i], ell), frac_norm(v[i - 1], ell));
    }
  }
  for (const auto& x : v) EXPECT_NEAR(frac_norm(x, 1.0), x.norm_sq(), 1e-12 * std::max(1.0, x.norm_sq()));
}

TEST(OrbitSize, Examples) {
  const auto b3 = make_box({1.0, 1.0, 1.0});
  const auto b2 = make_box({1.0, 1.0});
  EXPECT_EQ(orbit_size(LatticeVector(b3, {3, 0, 2})), 4);
  EXPECT_EQ(orbit_size(LatticeVector(b2, {0, 0})), 1);
  EXPECT_EQ(orbit_size(LatticeVector(b2, {1, 2})), 4);
}

TEST(OrbitSize, MatchesBruteForceSignFlips) {
  for (std::size_t d : {2u, 3u}) {
    const auto b = make_box(std::vector<double>(d, 1.0));
    for (const auto& v : enumerate_lattice(b, 4.0 * pi * std::sqrt(static_cast<double>(d)), false)) {
      bool small = true;
      for (int n : v.index()) small = small && std::abs(n) <= 4;
      if (!small) continue;
      std::set<Index> orbit;
      for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Index m = v.index();
        for (std::size_t i = 0; i < d; ++i)
          if (mask & (1u << i)) m[i] = -m[i];
        orbit.insert(m);
      }
      EXPECT_EQ(static_cast<std::size_t>(orbit_size(v)), orbit.size());
      EXPECT_EQ(sign_orbit(v).size(), orbit.size());
    }
  }
}

TEST(BasisNormSq, Examples) {
  const auto b = make_box({pi, pi});
  EXPECT_NEAR(basis_norm_sq(LatticeVector(b, {0, 0}), b), pi * pi, 1e-14);
  EXPECT_NEAR(basis_norm_sq(LatticeVector(b, {1, 2}), b), pi * pi / 4.0, 1e-14);
  const auto c = make_box({pi, pi / std::sqrt(2.0)});
  EXPECT_NEAR(basis_norm_sq(LatticeVector(c, {1, 0}), c), pi * pi / std::sqrt(2.0) / 2.0, 1e-14);
}

TEST(BasisNormSq, MatchesGaussQuadrature) {
  using Rule = boost::math::quadrature::gauss<double, 64>;
  const auto b = make_box({pi, pi / std::sqrt(2.0)});
  for (const auto& v : enumerate_lattice(b, 6.0, true)) {
    const double k1 = v.component(0), k2 = v.component(1);
    const double ix = Rule::integrate([&](double x) { return std::cos(k1 * x) * std::cos(k1 * x); }, 0.0, b.side(0));
    const double iy = Rule::integrate([&](double y) { return std::cos(k2 * y) * std::cos(k2 * y); }, 0.0, b.side(1));
    EXPECT_NEAR(basis_norm_sq(v, b), ix * iy, 1e-10 * ix * iy) << to_string(v.index());
  }
}

TEST(UnitStep, Examples) {
  const auto b = make_box({pi, pi / 2.0});
  const auto e2 = unit_step(2, b);
  EXPECT_EQ(e2.index(), (Index{0, 1}));
  EXPECT_NEAR(e2.component(1), 2.0, 1e-15);
  EXPECT_EQ(unit_step(1, make_box({pi, pi})).index(), (Index{1, 0}));
  EXPECT_EQ(code_of([&] { unit_step(3, b); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { unit_step(0, b); }), ErrorCode::IndexOutOfRange);
}

TEST(LatticeVector, DimensionMismatch) {
  const auto b = make_box({pi, pi});
  EXPECT_EQ(code_of([&] { LatticeVector(b, {1, 2, 3}); }), ErrorCode::DimensionMismatch);
}
