#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

#include "odmr/geometry.hpp"

namespace odmr {

// Zero-field splitting and gyromagnetic ratio of the ground-state triplet.
struct HamiltonianParams {
  double d_zfs_mhz = 2870.0;
  double gamma_mhz_per_mt = 28.0;
  double max_field_mt = 50.0;
};

// Spin-1 operators in the {|+1>, |0>, |-1>} basis.
struct SpinOperators {
  Eigen::Matrix3cd sx;
  Eigen::Matrix3cd sy;
  Eigen::Matrix3cd sz;
};

const SpinOperators& spin_one_operators();

// Orthonormal frame attached to one defect axis; z is the axis itself.
struct LocalFrame {
  Eigen::Vector3d x;
  Eigen::Vector3d y;
  Eigen::Vector3d z;
};

LocalFrame nv_local_frame(const NvAxis& axis);

// H = D Sz^2 + gamma (bx Sx + by Sy + bz Sz), field components in the local frame.
Eigen::Matrix3cd nv_hamiltonian(const Eigen::Vector3d& local_field_mt,
                                const HamiltonianParams& params);

// Eigenvalues of a 3x3 Hermitian matrix, ascending, via the closed-form
// trigonometric solution of the characteristic cubic.
std::array<double, 3> hermitian_eigenvalues(const Eigen::Matrix3cd& a);

// The two magnetic-resonance frequencies of one defect orientation.
struct TransitionPair {
  AxisLabel axis = AxisLabel::kappa;
  double f_minus_mhz = 0.0;
  double f_plus_mhz = 0.0;
};

struct TransitionTable {
  std::array<TransitionPair, 4> pairs;

  std::array<double, 8> all_frequencies() const;
};

// First-order model: f = D -+ gamma * |projection| per axis.
TransitionTable first_order_transitions(const ProjectionSet& p,
                                        const HamiltonianParams& params);

// Full diagonalization of the local Hamiltonian per axis.
// Throws invalid_argument_error when |b| exceeds params.max_field_mt.
TransitionTable exact_transitions(const FieldVector& b,
                                  const HamiltonianParams& params);

// 2 * gamma * |projection| for one axis.
double zeeman_splitting_mhz(double projection_mt, const HamiltonianParams& params);

}  // namespace odmr
