#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "odmr/geometry.hpp"
#include "odmr/hamiltonian.hpp"

namespace odmr {

// Lorentzian dip shape shared by all resonances of a synthesized trace.
struct LineshapeParams {
  double contrast = 0.01;
  double fwhm_mhz = 12.0;
  double baseline = 1.0;
  // When > 0, every resonance is split into a +-half-splitting doublet with
  // half the contrast, emulating unresolved internal structure.
  double intrinsic_splitting_mhz = 0.0;
};

struct FrequencyGrid {
  double start_mhz = 2700.0;
  double stop_mhz = 3040.0;
  std::size_t n_points = 2048;

  double step_mhz() const;
  double frequency_at(std::size_t i) const;
  std::vector<double> frequencies() const;
};

struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SpectrumMeta {
  std::optional<FieldVector> field;
  std::optional<LineshapeParams> lineshape;
  std::optional<std::uint64_t> noise_seed;
};

struct SyntheticSpectrum {
  FrequencyGrid grid;
  std::vector<double> values;
  SpectrumMeta meta;
  bool grid_too_narrow = false;
};

// One Lorentzian component: center and its contrast fraction.
struct ResonanceComponent {
  double center_mhz = 0.0;
  double contrast = 0.0;
};

// Expands a transition table into Lorentzian components, applying the
// intrinsic-splitting doubling when configured.
std::vector<ResonanceComponent> resonance_components(const TransitionTable& t,
                                                     const LineshapeParams& lp);

// value(f) = baseline * (1 - sum_k c_k / (1 + (2 (f - f_k) / w)^2)), plus
// optional Gaussian noise drawn deterministically from the seed.
SyntheticSpectrum synthesize_spectrum(const TransitionTable& t,
                                      const LineshapeParams& lp,
                                      const FrequencyGrid& grid,
                                      const std::optional<NoiseModel>& noise);

// Convenience: first-order transitions of a field, synthesized and tagged.
SyntheticSpectrum synthesize_field_spectrum(const FieldVector& b,
                                            const HamiltonianParams& h,
                                            const LineshapeParams& lp,
                                            const FrequencyGrid& grid,
                                            const std::optional<NoiseModel>& noise);

struct DipCluster {
  double mean_mhz = 0.0;
  std::vector<double> members_mhz;
};

// Single-linkage clustering of sorted frequencies; members joined while the
// gap to the previous one is <= threshold. Throws invalid_argument_error on
// empty input.
std::vector<DipCluster> cluster_dips(const std::vector<double>& freqs_mhz,
                                     double threshold_mhz);

// Number of resolvable dips of the first-order spectrum of b.
int count_dips(const FieldVector& b, const HamiltonianParams& h,
               double threshold_mhz);

struct AngularAxis {
  double start_deg = 0.0;
  double stop_deg = 0.0;
  double step_deg = 1.0;
  std::vector<double> values;
};

struct DipCountMap {
  AngularAxis theta_axis;
  AngularAxis phi_axis;
  double magnitude_mt = 0.0;
  double threshold_mhz = 12.0;
  std::vector<int> counts;  // row-major, theta major

  int at(std::size_t theta_idx, std::size_t phi_idx) const;
};

// Dip count over the full sphere, theta in [0, 180], phi in [0, 360], both
// endpoints included.
DipCountMap dip_count_map(double magnitude_mt, double theta_step_deg,
                          double phi_step_deg, const HamiltonianParams& h,
                          double threshold_mhz);

// Degeneracy pattern of the projection magnitudes.
struct CaseClassification {
  std::string label;          // "1", "2", ..., "4a", "4b", "8"
  int nominal_dips = 0;       // dips expected from the pattern
  int observable_dips = 0;    // same, kept separate for near-threshold patterns
  int zero_projections = 0;
  std::vector<int> group_sizes;  // nonzero-magnitude groups, ascending size
};

// Classifies by the multiset pattern of projection magnitudes: equal when
// their Zeeman splittings differ by <= threshold, zero when the full
// splitting 2 gamma |b_i| is <= threshold.
CaseClassification classify_case(const ProjectionSet& p,
                                 const HamiltonianParams& h,
                                 double threshold_mhz);

}  // namespace odmr
