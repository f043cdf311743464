#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

namespace odmr {

// Magnetic field in the cubic crystal frame (x||[100], y||[010], z||[001]), millitesla.
struct FieldVector {
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;

  double magnitude() const;
  Eigen::Vector3d vec() const { return {bx, by, bz}; }
  static FieldVector from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
};

// Spherical parametrization of a field: polar angle from +z, azimuth from +x.
struct SphericalField {
  double magnitude_mt = 0.0;
  double theta_deg = 0.0;
  double phi_deg = 0.0;
};

FieldVector spherical_to_cartesian(const SphericalField& s);

enum class AxisLabel : int { kappa = 0, chi = 1, phi = 2, lambda = 3 };

const char* axis_name(AxisLabel label);

// One of the four <111> defect orientation axes.
struct NvAxis {
  AxisLabel label;
  Eigen::Vector3d unit;
};

// The four axes in fixed order (kappa, chi, phi, lambda).
const std::array<NvAxis, 4>& nv_axes();

// Signed field projections onto the four axes, millitesla.
// Any set produced from a real field satisfies sum() == 0 up to rounding.
struct ProjectionSet {
  double b_kappa = 0.0;
  double b_chi = 0.0;
  double b_phi = 0.0;
  double b_lambda = 0.0;

  double sum() const { return b_kappa + b_chi + b_phi + b_lambda; }
  std::array<double, 4> values() const { return {b_kappa, b_chi, b_phi, b_lambda}; }
  static ProjectionSet from(const std::array<double, 4>& v) {
    return {v[0], v[1], v[2], v[3]};
  }
};

// 4x3 matrix whose rows are the axis unit vectors; left-multiplies a field.
const Eigen::Matrix<double, 4, 3>& projection_matrix();

// Integer entries of projection_matrix() before the common 1/sqrt(3) factor.
const std::array<std::array<int, 3>, 4>& projection_sign_matrix();

ProjectionSet project_field(const FieldVector& b);

// max(1e-9, 1e-9 * max component magnitude), millitesla.
double default_sum_tolerance(const ProjectionSet& p);

// Left-inverse of project_field: b = (3/4) M^T p.
// Throws inconsistent_projections when |p.sum()| exceeds the tolerance.
FieldVector reconstruct_field(const ProjectionSet& p);
FieldVector reconstruct_field(const ProjectionSet& p, double sum_tolerance_mt);

// Same left-inverse without the consistency check.
FieldVector reconstruct_field_unchecked(const ProjectionSet& p);

// Signed permutation of the crystal axes. Every such operation maps the set
// of four defect axis lines onto itself, permuting projection magnitudes.
struct SymmetryOperation {
  std::array<std::array<int, 3>, 3> m{};

  FieldVector apply(const FieldVector& b) const;
  Eigen::Matrix3d matrix() const;
  int determinant() const;

  friend SymmetryOperation operator*(const SymmetryOperation& a,
                                     const SymmetryOperation& b);
  friend bool operator==(const SymmetryOperation&, const SymmetryOperation&) = default;
};

SymmetryOperation identity_operation();

// All 48 signed permutations of the coordinate axes (full octahedral group),
// generated by closure from a transposition, a 3-cycle, and one sign flip.
const std::vector<SymmetryOperation>& symmetry_group();

}  // namespace odmr
