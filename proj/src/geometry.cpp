#include "odmr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "odmr/errors.hpp"

namespace odmr {

namespace {

constexpr double kPi = std::numbers::pi;

double deg_to_rad(double d) { return d * kPi / 180.0; }

const double kInvSqrt3 = 1.0 / std::sqrt(3.0);

std::array<int, 9> flatten(const SymmetryOperation& op) {
  std::array<int, 9> f{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) f[r * 3 + c] = op.m[r][c];
  return f;
}

}  // namespace

double FieldVector::magnitude() const {
  return std::sqrt(bx * bx + by * by + bz * bz);
}

FieldVector spherical_to_cartesian(const SphericalField& s) {
  const double th = deg_to_rad(s.theta_deg);
  const double ph = deg_to_rad(s.phi_deg);
  const double st = std::sin(th);
  return {s.magnitude_mt * st * std::cos(ph), s.magnitude_mt * st * std::sin(ph),
          s.magnitude_mt * std::cos(th)};
}

const char* axis_name(AxisLabel label) {
  switch (label) {
    case AxisLabel::kappa:
      return "kappa";
    case AxisLabel::chi:
      return "chi";
    case AxisLabel::phi:
      return "phi";
    case AxisLabel::lambda:
      return "lambda";
  }
  return "?";
}

const std::array<NvAxis, 4>& nv_axes() {
  static const std::array<NvAxis, 4> axes = {
      NvAxis{AxisLabel::kappa, {kInvSqrt3, kInvSqrt3, kInvSqrt3}},
      NvAxis{AxisLabel::chi, {-kInvSqrt3, -kInvSqrt3, kInvSqrt3}},
      NvAxis{AxisLabel::phi, {-kInvSqrt3, kInvSqrt3, -kInvSqrt3}},
      NvAxis{AxisLabel::lambda, {kInvSqrt3, -kInvSqrt3, -kInvSqrt3}}};
  return axes;
}

const std::array<std::array<int, 3>, 4>& projection_sign_matrix() {
  static const std::array<std::array<int, 3>, 4> signs = {{
      {{1, 1, 1}},
      {{-1, -1, 1}},
      {{-1, 1, -1}},
      {{1, -1, -1}},
  }};
  return signs;
}

const Eigen::Matrix<double, 4, 3>& projection_matrix() {
  static const Eigen::Matrix<double, 4, 3> m = [] {
    Eigen::Matrix<double, 4, 3> t;
    const auto& s = projection_sign_matrix();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = s[r][c] * kInvSqrt3;
    return t;
  }();
  return m;
}

ProjectionSet project_field(const FieldVector& b) {
  const auto& s = projection_sign_matrix();
  std::array<double, 4> p{};
  for (int r = 0; r < 4; ++r)
    p[r] = (s[r][0] * b.bx + s[r][1] * b.by + s[r][2] * b.bz) * kInvSqrt3;
  return ProjectionSet::from(p);
}

double default_sum_tolerance(const ProjectionSet& p) {
  double mx = 0.0;
  for (double v : p.values()) mx = std::max(mx, std::abs(v));
  return std::max(1e-9, 1e-9 * mx);
}

FieldVector reconstruct_field_unchecked(const ProjectionSet& p) {
  const auto& s = projection_sign_matrix();
  const auto v = p.values();
  double out[3];
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int r = 0; r < 4; ++r) acc += s[r][c] * v[r];
    // (3/4) * M^T p with M = signs/sqrt(3) gives sqrt(3)/4 * signs^T p.
    out[c] = acc * std::sqrt(3.0) / 4.0;
  }
  return {out[0], out[1], out[2]};
}

FieldVector reconstruct_field(const ProjectionSet& p) {
  return reconstruct_field(p, default_sum_tolerance(p));
}

FieldVector reconstruct_field(const ProjectionSet& p, double sum_tolerance_mt) {
  const double s = p.sum();
  if (std::abs(s) > sum_tolerance_mt) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "projection components sum to %.6g mT (tolerance %.3g); "
                  "not the projections of any single field",
                  s, sum_tolerance_mt);
    throw inconsistent_projections(buf);
  }
  return reconstruct_field_unchecked(p);
}

FieldVector SymmetryOperation::apply(const FieldVector& b) const {
  const double in[3] = {b.bx, b.by, b.bz};
  double out[3] = {0.0, 0.0, 0.0};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out[r] += m[r][c] * in[c];
  return {out[0], out[1], out[2]};
}

Eigen::Matrix3d SymmetryOperation::matrix() const {
  Eigen::Matrix3d e;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) e(r, c) = m[r][c];
  return e;
}

int SymmetryOperation::determinant() const {
  const auto& a = m;
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

SymmetryOperation operator*(const SymmetryOperation& a, const SymmetryOperation& b) {
  SymmetryOperation out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      int acc = 0;
      for (int k = 0; k < 3; ++k) acc += a.m[r][k] * b.m[k][c];
      out.m[r][c] = acc;
    }
  return out;
}

SymmetryOperation identity_operation() {
  return SymmetryOperation{{{{{1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}}}};
}

const std::vector<SymmetryOperation>& symmetry_group() {
  static const std::vector<SymmetryOperation> group = [] {
    const SymmetryOperation swap_xy{{{{{0, 1, 0}}, {{1, 0, 0}}, {{0, 0, 1}}}}};
    const SymmetryOperation cycle{{{{{0, 0, 1}}, {{1, 0, 0}}, {{0, 1, 0}}}}};
    const SymmetryOperation flip_x{{{{{-1, 0, 0}}, {{0, 1, 0}}, {{0, 0, 1}}}}};

    std::vector<SymmetryOperation> elems{identity_operation()};
    std::set<std::array<int, 9>> seen{flatten(elems[0])};
    // Breadth-first closure under right multiplication by the generators.
    for (std::size_t i = 0; i < elems.size(); ++i) {
      for (const auto& g : {swap_xy, cycle, flip_x}) {
        const SymmetryOperation next = elems[i] * g;
        if (seen.insert(flatten(next)).second) elems.push_back(next);
      }
    }
    return elems;
  }();
  return group;
}

}  // namespace odmr
