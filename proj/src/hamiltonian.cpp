#include "odmr/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "odmr/errors.hpp"

namespace odmr {

namespace {

using cd = std::complex<double>;

constexpr double kTwoPiThirds = 2.0 * std::numbers::pi / 3.0;

Eigen::Vector3cd bilinear_cross(const Eigen::Vector3cd& a,
                                const Eigen::Vector3cd& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
          a(0) * b(1) - a(1) * b(0)};
}

// The trigonometric formula loses a few digits when two eigenvalues are
// close; two Rayleigh-quotient passes restore near-machine accuracy. The
// null vector of (a - lambda I) comes from the largest row cross product.
double rayleigh_refine(const Eigen::Matrix3cd& a, double lambda) {
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::Matrix3cd m = a;
    for (int i = 0; i < 3; ++i) m(i, i) -= lambda;
    const Eigen::Vector3cd rows[3] = {m.row(0), m.row(1), m.row(2)};
    Eigen::Vector3cd v = Eigen::Vector3cd::Zero();
    double best = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3cd c = bilinear_cross(rows[i], rows[(i + 1) % 3]);
      const double n2 = c.squaredNorm();
      if (n2 > best) {
        best = n2;
        v = c;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) break;
    const double rho = (v.adjoint() * a * v)(0, 0).real() / v.squaredNorm();
    if (!std::isfinite(rho) || std::abs(rho - lambda) > 1.0) break;
    lambda = rho;
  }
  return lambda;
}

}  // namespace

const SpinOperators& spin_one_operators() {
  static const SpinOperators ops = [] {
    const double r = 1.0 / std::sqrt(2.0);
    SpinOperators s;
    s.sx << cd(0), cd(r), cd(0), cd(r), cd(0), cd(r), cd(0), cd(r), cd(0);
    s.sy << cd(0), cd(0, -r), cd(0), cd(0, r), cd(0), cd(0, -r), cd(0), cd(0, r),
        cd(0);
    s.sz << cd(1), cd(0), cd(0), cd(0), cd(0), cd(0), cd(0), cd(0), cd(-1);
    return s;
  }();
  return ops;
}

LocalFrame nv_local_frame(const NvAxis& axis) {
  const Eigen::Vector3d z = axis.unit.normalized();
  // Gram-Schmidt of a lab axis against z; [100] works for every <111> axis,
  // the [010] fallback covers fields aligned with x.
  Eigen::Vector3d seed(1.0, 0.0, 0.0);
  Eigen::Vector3d x = seed - seed.dot(z) * z;
  if (x.norm() < 1e-6) {
    seed = Eigen::Vector3d(0.0, 1.0, 0.0);
    x = seed - seed.dot(z) * z;
  }
  x.normalize();
  return {x, z.cross(x), z};
}

Eigen::Matrix3cd nv_hamiltonian(const Eigen::Vector3d& local_field_mt,
                                const HamiltonianParams& params) {
  const auto& s = spin_one_operators();
  const double g = params.gamma_mhz_per_mt;
  return params.d_zfs_mhz * (s.sz * s.sz) +
         g * (local_field_mt.x() * s.sx + local_field_mt.y() * s.sy +
              local_field_mt.z() * s.sz);
}

std::array<double, 3> hermitian_eigenvalues(const Eigen::Matrix3cd& a) {
  const double p1 =
      std::norm(a(0, 1)) + std::norm(a(0, 2)) + std::norm(a(1, 2));
  const double q = a.trace().real() / 3.0;
  if (p1 == 0.0) {
    std::array<double, 3> e = {a(0, 0).real(), a(1, 1).real(), a(2, 2).real()};
    std::sort(e.begin(), e.end());
    return e;
  }
  const double d0 = a(0, 0).real() - q;
  const double d1 = a(1, 1).real() - q;
  const double d2 = a(2, 2).real() - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Eigen::Matrix3cd b = (a - q * Eigen::Matrix3cd::Identity()) / p;
  // det of a Hermitian matrix is real; clamp guards acos against rounding.
  const double r = std::clamp(b.determinant().real() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double hi = q + 2.0 * p * std::cos(phi);
  const double lo = q + 2.0 * p * std::cos(phi + kTwoPiThirds);
  std::array<double, 3> e = {lo, 3.0 * q - lo - hi, hi};
  for (double& ev : e) ev = rayleigh_refine(a, ev);
  std::sort(e.begin(), e.end());
  return e;
}

std::array<double, 8> TransitionTable::all_frequencies() const {
  std::array<double, 8> f{};
  for (int i = 0; i < 4; ++i) {
    f[2 * i] = pairs[i].f_minus_mhz;
    f[2 * i + 1] = pairs[i].f_plus_mhz;
  }
  return f;
}

TransitionTable first_order_transitions(const ProjectionSet& p,
                                        const HamiltonianParams& params) {
  TransitionTable t;
  const auto v = p.values();
  for (int i = 0; i < 4; ++i) {
    const double shift = params.gamma_mhz_per_mt * std::abs(v[i]);
    t.pairs[i] = {nv_axes()[i].label, params.d_zfs_mhz - shift,
                  params.d_zfs_mhz + shift};
  }
  return t;
}

TransitionTable exact_transitions(const FieldVector& b,
                                  const HamiltonianParams& params) {
  const double mag = b.magnitude();
  if (mag > params.max_field_mt) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "|B| = %.6g mT exceeds the %.6g mT limit",
                  mag, params.max_field_mt);
    throw invalid_argument_error(buf);
  }
  TransitionTable t;
  const Eigen::Vector3d bvec = b.vec();
  for (int i = 0; i < 4; ++i) {
    const LocalFrame fr = nv_local_frame(nv_axes()[i]);
    const Eigen::Vector3d local(bvec.dot(fr.x), bvec.dot(fr.y), bvec.dot(fr.z));
    const auto e = hermitian_eigenvalues(nv_hamiltonian(local, params));
    t.pairs[i] = {nv_axes()[i].label, e[1] - e[0], e[2] - e[0]};
  }
  return t;
}

double zeeman_splitting_mhz(double projection_mt, const HamiltonianParams& params) {
  return 2.0 * params.gamma_mhz_per_mt * std::abs(projection_mt);
}

}  // namespace odmr
