#pragma once

#include <array>
#include <vector>

#include "odmr/fitting.hpp"
#include "odmr/geometry.hpp"
#include "odmr/hamiltonian.hpp"

namespace odmr {

// One possible multiset of the four projection magnitudes, millitesla,
// sorted ascending. Zeros stand for axes whose splitting is unresolved.
using MagnitudeMultiset = std::array<double, 4>;

struct MagnitudeOptions {
  double threshold_mhz = 12.0;   // dip-merging threshold of the spectrum model
  double center_window_mhz = 0.0;  // 0 selects threshold / 2
};

// Converts fitted dip centers to the possible magnitude multisets.
// A dip within the center window of the zero-field line may absorb any number
// of unresolved axes; paired dips are matched outermost-first and must be
// symmetric about the zero-field line within the window. Every multiset
// consistent with the dip pattern is returned (multiplicities of coincident
// splittings cannot be read off a merged dip). Throws unpairable_dips when no
// consistent reading exists.
std::vector<MagnitudeMultiset> dips_to_magnitudes(
    const std::vector<double>& centers_mhz, const HamiltonianParams& h,
    const MagnitudeOptions& opts);

struct FieldCandidate {
  FieldVector field;
  ProjectionSet projections;
  double residual_mt = 0.0;  // |sum of signed projections|
};

struct CandidateOptions {
  double sum_tolerance_mt = 1e-9;
  double dedup_tolerance_mt = 1e-6;
};

// All fields whose projection magnitudes reproduce the multiset: every
// assignment of the four values to axes with every sign choice, kept when the
// signed sum vanishes within tolerance, deduplicated, sorted by components.
// Throws empty_candidate_set when no assignment satisfies the constraint.
std::vector<FieldCandidate> enumerate_candidates(const MagnitudeMultiset& ms,
                                                 const CandidateOptions& opts);

enum class SignConvention {
  distinct,    // b and -b count separately
  identified,  // b and -b count once
};

// Number of fields indistinguishable from b by dip positions alone, derived
// from its true magnitude multiset (splittings at or below the threshold are
// treated as unresolved zeros).
int degeneracy_count(const FieldVector& b, const HamiltonianParams& h,
                     double threshold_mhz,
                     SignConvention conv = SignConvention::distinct);

struct InversionConfig {
  HamiltonianParams hamiltonian;
  PeakDetectParams detect;
  FitOptions fit;
  MagnitudeOptions magnitudes;
  CandidateOptions candidates;
};

struct InversionResult {
  FitResult fit;
  std::vector<double> dip_centers_mhz;
  std::vector<MagnitudeMultiset> magnitude_sets;
  std::vector<FieldCandidate> candidates;  // union over magnitude sets
};

// Full pipeline: detect, fit, pair, enumerate. Candidate sets from every
// admissible magnitude multiset are merged.
InversionResult invert_spectrum(const SyntheticSpectrum& s,
                                const InversionConfig& cfg);

}  // namespace odmr
