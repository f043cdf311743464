#include "odmr/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "odmr/errors.hpp"

namespace odmr {

double FrequencyGrid::step_mhz() const {
  if (n_points < 2) return 0.0;
  return (stop_mhz - start_mhz) / static_cast<double>(n_points - 1);
}

double FrequencyGrid::frequency_at(std::size_t i) const {
  return start_mhz + step_mhz() * static_cast<double>(i);
}

std::vector<double> FrequencyGrid::frequencies() const {
  std::vector<double> f(n_points);
  for (std::size_t i = 0; i < n_points; ++i) f[i] = frequency_at(i);
  return f;
}

std::vector<ResonanceComponent> resonance_components(const TransitionTable& t,
                                                     const LineshapeParams& lp) {
  std::vector<ResonanceComponent> out;
  out.reserve(16);
  for (const auto& pair : t.pairs) {
    for (double f : {pair.f_minus_mhz, pair.f_plus_mhz}) {
      if (lp.intrinsic_splitting_mhz > 0.0) {
        const double h = lp.intrinsic_splitting_mhz / 2.0;
        out.push_back({f - h, lp.contrast / 2.0});
        out.push_back({f + h, lp.contrast / 2.0});
      } else {
        out.push_back({f, lp.contrast});
      }
    }
  }
  return out;
}

SyntheticSpectrum synthesize_spectrum(const TransitionTable& t,
                                      const LineshapeParams& lp,
                                      const FrequencyGrid& grid,
                                      const std::optional<NoiseModel>& noise) {
  if (grid.n_points < 2 || !(grid.stop_mhz > grid.start_mhz))
    throw invalid_argument_error("frequency grid needs at least 2 points and stop > start");
  if (!(lp.fwhm_mhz > 0.0))
    throw invalid_argument_error("lineshape fwhm must be positive");

  const auto comps = resonance_components(t, lp);

  SyntheticSpectrum s;
  s.grid = grid;
  s.meta.lineshape = lp;
  for (const auto& c : comps) {
    if (c.center_mhz < grid.start_mhz || c.center_mhz > grid.stop_mhz) {
      s.grid_too_narrow = true;
      break;
    }
  }

  s.values.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double f = grid.frequency_at(i);
    double depth = 0.0;
    for (const auto& c : comps) {
      const double u = 2.0 * (f - c.center_mhz) / lp.fwhm_mhz;
      depth += c.contrast / (1.0 + u * u);
    }
    s.values[i] = lp.baseline * (1.0 - depth);
  }

  if (noise && noise->sigma > 0.0) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> dist(0.0, noise->sigma);
    for (auto& v : s.values) v += dist(rng);
    s.meta.noise_seed = noise->seed;
  }
  return s;
}

SyntheticSpectrum synthesize_field_spectrum(const FieldVector& b,
                                            const HamiltonianParams& h,
                                            const LineshapeParams& lp,
                                            const FrequencyGrid& grid,
                                            const std::optional<NoiseModel>& noise) {
  auto s = synthesize_spectrum(first_order_transitions(project_field(b), h), lp,
                               grid, noise);
  s.meta.field = b;
  return s;
}

std::vector<DipCluster> cluster_dips(const std::vector<double>& freqs_mhz,
                                     double threshold_mhz) {
  if (freqs_mhz.empty())
    throw invalid_argument_error("cluster_dips: empty frequency list");
  std::vector<double> sorted = freqs_mhz;
  std::sort(sorted.begin(), sorted.end());

  std::vector<DipCluster> clusters;
  clusters.push_back({0.0, {sorted.front()}});
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - clusters.back().members_mhz.back() <= threshold_mhz)
      clusters.back().members_mhz.push_back(sorted[i]);
    else
      clusters.push_back({0.0, {sorted[i]}});
  }
  for (auto& c : clusters) {
    double acc = 0.0;
    for (double m : c.members_mhz) acc += m;
    c.mean_mhz = acc / static_cast<double>(c.members_mhz.size());
  }
  return clusters;
}

int count_dips(const FieldVector& b, const HamiltonianParams& h,
               double threshold_mhz) {
  const auto t = first_order_transitions(project_field(b), h);
  const auto f = t.all_frequencies();
  return static_cast<int>(
      cluster_dips(std::vector<double>(f.begin(), f.end()), threshold_mhz).size());
}

int DipCountMap::at(std::size_t theta_idx, std::size_t phi_idx) const {
  return counts[theta_idx * phi_axis.values.size() + phi_idx];
}

namespace {

AngularAxis make_axis(double start, double stop, double step) {
  if (!(step > 0.0))
    throw invalid_argument_error("angular step must be positive");
  AngularAxis ax{start, stop, step, {}};
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  ax.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) ax.values[i] = start + step * static_cast<double>(i);
  return ax;
}

}  // namespace

DipCountMap dip_count_map(double magnitude_mt, double theta_step_deg,
                          double phi_step_deg, const HamiltonianParams& h,
                          double threshold_mhz) {
  DipCountMap map;
  map.theta_axis = make_axis(0.0, 180.0, theta_step_deg);
  map.phi_axis = make_axis(0.0, 360.0, phi_step_deg);
  map.magnitude_mt = magnitude_mt;
  map.threshold_mhz = threshold_mhz;
  map.counts.resize(map.theta_axis.values.size() * map.phi_axis.values.size());

  std::size_t k = 0;
  for (double theta : map.theta_axis.values)
    for (double phi : map.phi_axis.values)
      map.counts[k++] = count_dips(
          spherical_to_cartesian({magnitude_mt, theta, phi}), h, threshold_mhz);
  return map;
}

CaseClassification classify_case(const ProjectionSet& p,
                                 const HamiltonianParams& h,
                                 double threshold_mhz) {
  std::array<double, 4> split{};
  {
    const auto v = p.values();
    for (int i = 0; i < 4; ++i) split[i] = zeeman_splitting_mhz(v[i], h);
  }

  CaseClassification c;
  std::vector<double> nonzero;
  for (double s : split) {
    if (s <= threshold_mhz)
      ++c.zero_projections;
    else
      nonzero.push_back(s);
  }
  std::sort(nonzero.begin(), nonzero.end());

  // Single-linkage grouping of the nonzero splittings, same join rule as
  // cluster_dips so classification matches what a spectrum resolves.
  std::vector<int> sizes;
  for (std::size_t i = 0; i < nonzero.size(); ++i) {
    if (i == 0 || nonzero[i] - nonzero[i - 1] > threshold_mhz)
      sizes.push_back(1);
    else
      ++sizes.back();
  }
  std::sort(sizes.begin(), sizes.end());
  c.group_sizes = sizes;

  const int k = static_cast<int>(sizes.size());
  const int z = c.zero_projections;
  c.nominal_dips = (z > 0 ? 1 : 0) + 2 * k;
  c.observable_dips = c.nominal_dips;

  if (z == 4) {
    c.label = "1";
  } else if (z == 0 && k == 1) {
    c.label = "2";
  } else if (z > 0 && k == 1) {
    c.label = "3";
  } else if (z == 0 && k == 2) {
    c.label = (sizes[0] == 2) ? "4a" : "4b";
  } else if (z > 0 && k == 2) {
    c.label = "5";
  } else if (z == 0 && k == 3) {
    c.label = "6";
  } else if (z > 0 && k == 3) {
    c.label = "7";
  } else {
    c.label = "8";
  }
  return c;
}

}  // namespace odmr
