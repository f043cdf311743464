#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "odmr/errors.hpp"
#include "odmr/geometry.hpp"
#include "support/oracles.hpp"

using namespace odmr;

namespace {
const double kInv = 1.0 / std::sqrt(3.0);
}

TEST_CASE("axis directions and mutual angles") {
  const auto& axes = nv_axes();
  REQUIRE(axes.size() == 4);

  CHECK(axes[0].unit.isApprox(Eigen::Vector3d(kInv, kInv, kInv), 1e-15));
  CHECK(axes[1].unit.isApprox(Eigen::Vector3d(-kInv, -kInv, kInv), 1e-15));
  CHECK(axes[2].unit.isApprox(Eigen::Vector3d(-kInv, kInv, -kInv), 1e-15));
  CHECK(axes[3].unit.isApprox(Eigen::Vector3d(kInv, -kInv, -kInv), 1e-15));

  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& a : axes) {
    CHECK(a.unit.norm() == doctest::Approx(1.0).epsilon(1e-15));
    sum += a.unit;
  }
  CHECK(sum.norm() < 1e-14);

  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      CHECK(axes[i].unit.dot(axes[j].unit) == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("projection matrix is exactly sign pattern over sqrt(3)") {
  const auto& m = projection_matrix();
  const auto& s = projection_sign_matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 3; ++c) CHECK(m(r, c) == s[r][c] * kInv);
}

TEST_CASE("sign matrix satisfies S^T S = 4 I in integer arithmetic") {
  const auto& s = projection_sign_matrix();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      int acc = 0;
      for (int r = 0; r < 4; ++r) acc += s[r][a] * s[r][b];
      CHECK(acc == (a == b ? 4 : 0));
    }
}

TEST_CASE("spherical to cartesian") {
  SUBCASE("poles and equator") {
    const auto up = spherical_to_cartesian({3.0, 0.0, 0.0});
    CHECK(up.bx == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(up.bz == doctest::Approx(3.0).epsilon(1e-15));
    const auto eq = spherical_to_cartesian({2.0, 90.0, 90.0});
    CHECK(std::abs(eq.bx) < 1e-12);
    CHECK(eq.by == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(eq.bz) < 1e-12);
  }
  SUBCASE("axis-aligned direction") {
    const double theta = std::acos(kInv) * 180.0 / M_PI;
    const auto b = spherical_to_cartesian({3.0, theta, 45.0});
    CHECK(b.vec().dot(nv_axes()[0].unit) == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("field projections, hand-computed values") {
  SUBCASE("field along z") {
    const auto p = project_field({0.0, 0.0, 3.0});
    const double e = 3.0 * kInv;
    CHECK(p.b_kappa == doctest::Approx(e).epsilon(1e-15));
    CHECK(p.b_chi == doctest::Approx(e).epsilon(1e-15));
    CHECK(p.b_phi == doctest::Approx(-e).epsilon(1e-15));
    CHECK(p.b_lambda == doctest::Approx(-e).epsilon(1e-15));
  }
  SUBCASE("field along the first axis") {
    const auto b = FieldVector::from(3.0 * nv_axes()[0].unit);
    const auto p = project_field(b);
    CHECK(p.b_kappa == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(p.b_chi == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(p.b_phi == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(p.b_lambda == doctest::Approx(-1.0).epsilon(1e-13));
  }
  SUBCASE("zero field") {
    const auto p = project_field({0.0, 0.0, 0.0});
    for (double v : p.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("projections sum to zero for random fields") {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 10000; ++i) {
    const auto b = oracles::random_field(rng, 4.0);
    const auto p = project_field(b);
    CHECK(std::abs(p.sum()) <= 1e-12 * std::max(1.0, b.magnitude()));
  }
}

TEST_CASE("reconstruction inverts projection") {
  std::mt19937_64 rng(202);
  for (int i = 0; i < 10000; ++i) {
    const auto b = oracles::random_field(rng, 4.0);
    const auto r = reconstruct_field(project_field(b));
    const double tol = 1e-12 * std::max(1.0, b.magnitude());
    CHECK(std::abs(r.bx - b.bx) <= tol);
    CHECK(std::abs(r.by - b.by) <= tol);
    CHECK(std::abs(r.bz - b.bz) <= tol);
  }
}

TEST_CASE("reconstruction rejects inconsistent projections") {
  CHECK_THROWS_AS(reconstruct_field({1.0, 1.0, 1.0, 1.0}), inconsistent_projections);
  CHECK_THROWS_AS(reconstruct_field({0.5, 0.0, 0.0, 0.0}), inconsistent_projections);
  // A barely inconsistent set passes with an explicit looser tolerance.
  CHECK_NOTHROW(reconstruct_field({1.0, -1.0, 0.5, -0.5 + 1e-12}));
  CHECK_NOTHROW(reconstruct_field({1.0, 1.0, 1.0, 1.0}, 10.0));
}

TEST_CASE("symmetry group structure") {
  const auto& g = symmetry_group();
  REQUIRE(g.size() == 48);

  SUBCASE("contains identity and inversion") {
    const auto id = identity_operation();
    SymmetryOperation inv;
    for (int i = 0; i < 3; ++i) inv.m[i][i] = -1;
    CHECK(std::count(g.begin(), g.end(), id) == 1);
    CHECK(std::count(g.begin(), g.end(), inv) == 1);
  }

  SUBCASE("all elements distinct, orthogonal, det +-1") {
    std::set<std::array<std::array<int, 3>, 3>> uniq;
    for (const auto& op : g) {
      uniq.insert(op.m);
      const Eigen::Matrix3d m = op.matrix();
      CHECK((m * m.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-15);
      CHECK(std::abs(op.determinant()) == 1);
    }
    CHECK(uniq.size() == 48);
  }

  SUBCASE("closed under composition") {
    for (std::size_t i = 0; i < g.size(); i += 7)
      for (std::size_t j = 0; j < g.size(); ++j)
        CHECK(std::count(g.begin(), g.end(), g[i] * g[j]) == 1);
  }

  SUBCASE("maps the set of axis lines onto itself") {
    for (const auto& op : g) {
      for (const auto& axis : nv_axes()) {
        const Eigen::Vector3d mapped = op.matrix() * axis.unit;
        bool found = false;
        for (const auto& other : nv_axes())
          if ((mapped - other.unit).norm() < 1e-12 ||
              (mapped + other.unit).norm() < 1e-12)
            found = true;
        CHECK(found);
      }
    }
  }
}

TEST_CASE("projection magnitude multiset is invariant under the group") {
  std::mt19937_64 rng(303);
  for (int i = 0; i < 500; ++i) {
    const auto b = oracles::random_field(rng, 4.0);
    auto base = project_field(b).values();
    for (auto& v : base) v = std::abs(v);
    std::sort(base.begin(), base.end());
    for (const auto& op : symmetry_group()) {
      auto mapped = project_field(op.apply(b)).values();
      for (auto& v : mapped) v = std::abs(v);
      std::sort(mapped.begin(), mapped.end());
      for (int k = 0; k < 4; ++k)
        CHECK(std::abs(mapped[k] - base[k]) <= 1e-12 * std::max(1.0, base[3]));
    }
  }
}
