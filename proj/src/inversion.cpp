#include "odmr/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "odmr/errors.hpp"

namespace odmr {

namespace {

// Multiplicity completions: ways to expand p pair levels (plus an optional
// zero level) into exactly four axes, each level used at least once.
void expand_levels(const std::vector<double>& levels, std::size_t idx,
                   int remaining, MagnitudeMultiset& acc, int filled,
                   std::vector<MagnitudeMultiset>& out) {
  if (idx == levels.size()) {
    if (remaining == 0) {
      MagnitudeMultiset m = acc;
      std::sort(m.begin(), m.end());
      out.push_back(m);
    }
    return;
  }
  const int slots_left = static_cast<int>(levels.size() - idx);
  for (int take = 1; take <= remaining - (slots_left - 1); ++take) {
    for (int j = 0; j < take; ++j) acc[static_cast<std::size_t>(filled + j)] = levels[idx];
    expand_levels(levels, idx + 1, remaining - take, acc, filled + take, out);
  }
}

std::vector<MagnitudeMultiset> completions(bool has_zero,
                                           const std::vector<double>& pair_mags) {
  std::vector<double> levels;
  if (has_zero) levels.push_back(0.0);
  levels.insert(levels.end(), pair_mags.begin(), pair_mags.end());
  std::vector<MagnitudeMultiset> out;
  if (levels.empty() || levels.size() > 4) return out;
  MagnitudeMultiset acc{};
  expand_levels(levels, 0, 4, acc, 0, out);
  return out;
}

bool same_multiset(const MagnitudeMultiset& a, const MagnitudeMultiset& b,
                   double tol) {
  for (int i = 0; i < 4; ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

bool same_field(const FieldVector& a, const FieldVector& b, double tol) {
  return std::abs(a.bx - b.bx) <= tol && std::abs(a.by - b.by) <= tol &&
         std::abs(a.bz - b.bz) <= tol;
}

}  // namespace

std::vector<MagnitudeMultiset> dips_to_magnitudes(
    const std::vector<double>& centers_mhz, const HamiltonianParams& h,
    const MagnitudeOptions& opts) {
  if (centers_mhz.empty() || centers_mhz.size() > 8)
    throw invalid_argument_error("dips_to_magnitudes: need 1..8 dip centers");

  std::vector<double> centers = centers_mhz;
  std::sort(centers.begin(), centers.end());
  const double d = h.d_zfs_mhz;
  const double window =
      opts.center_window_mhz > 0.0 ? opts.center_window_mhz : opts.threshold_mhz / 2.0;

  // The dip closest to the zero-field line may be the unresolved-axes dip.
  std::size_t center_idx = 0;
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (std::abs(centers[i] - d) < std::abs(centers[center_idx] - d)) center_idx = i;
  const bool center_possible = std::abs(centers[center_idx] - d) <= window;

  std::vector<MagnitudeMultiset> out;
  auto push_unique = [&](const MagnitudeMultiset& m) {
    for (const auto& e : out)
      if (same_multiset(e, m, 0.0)) return;
    out.push_back(m);
  };

  // Pair the sorted list outermost-with-outermost; every pair must straddle
  // the zero-field line symmetrically within the window.
  auto try_pairing = [&](const std::vector<double>& list, bool has_zero) {
    if (list.size() % 2 != 0) return;
    std::vector<double> mags;
    for (std::size_t i = 0; i < list.size() / 2; ++i) {
      const double lo = list[i];
      const double hi = list[list.size() - 1 - i];
      if (std::abs((lo + hi) / 2.0 - d) > window) return;
      mags.push_back((hi - lo) / (2.0 * h.gamma_mhz_per_mt));
    }
    if (static_cast<int>(mags.size()) + (has_zero ? 1 : 0) > 4) return;
    for (const auto& m : completions(has_zero, mags)) push_unique(m);
  };

  if (center_possible) {
    std::vector<double> rest;
    for (std::size_t i = 0; i < centers.size(); ++i)
      if (i != center_idx) rest.push_back(centers[i]);
    try_pairing(rest, true);
  }
  try_pairing(centers, false);

  if (out.empty()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "%zu dip(s) cannot be paired symmetrically about %.6g MHz",
                  centers.size(), d);
    throw unpairable_dips(buf);
  }
  return out;
}

std::vector<FieldCandidate> enumerate_candidates(const MagnitudeMultiset& ms,
                                                 const CandidateOptions& opts) {
  for (double m : ms)
    if (!(m >= 0.0) || !std::isfinite(m))
      throw invalid_argument_error("magnitudes must be finite and non-negative");

  MagnitudeMultiset sorted = ms;
  std::sort(sorted.begin(), sorted.end());

  std::vector<FieldCandidate> found;
  do {
    for (int mask = 0; mask < 16; ++mask) {
      ProjectionSet p;
      std::array<double, 4> v{};
      for (int i = 0; i < 4; ++i)
        v[static_cast<std::size_t>(i)] =
            ((mask >> i) & 1) ? -sorted[static_cast<std::size_t>(i)]
                              : sorted[static_cast<std::size_t>(i)];
      p = ProjectionSet::from(v);
      const double resid = std::abs(p.sum());
      if (resid <= opts.sum_tolerance_mt)
        found.push_back({reconstruct_field_unchecked(p), p, resid});
    }
  } while (std::next_permutation(sorted.begin(), sorted.end()));

  if (found.empty())
    throw empty_candidate_set(
        "no signed assignment of the magnitudes sums to zero within tolerance");

  // Keep the best-residual representative of each duplicate field.
  std::sort(found.begin(), found.end(),
            [](const FieldCandidate& a, const FieldCandidate& b) {
              return a.residual_mt < b.residual_mt;
            });
  std::vector<FieldCandidate> unique;
  for (const auto& c : found) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const auto& u) {
      return same_field(u.field, c.field, opts.dedup_tolerance_mt);
    });
    if (!dup) unique.push_back(c);
  }
  std::sort(unique.begin(), unique.end(),
            [](const FieldCandidate& a, const FieldCandidate& b) {
              const auto ta = std::array{a.field.bx, a.field.by, a.field.bz};
              const auto tb = std::array{b.field.bx, b.field.by, b.field.bz};
              return ta < tb;
            });
  return unique;
}

int degeneracy_count(const FieldVector& b, const HamiltonianParams& h,
                     double threshold_mhz, SignConvention conv) {
  const auto proj = project_field(b).values();
  MagnitudeMultiset mags{};
  double clamped_total = 0.0;
  double max_mag = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double m = std::abs(proj[static_cast<std::size_t>(i)]);
    if (zeeman_splitting_mhz(m, h) <= threshold_mhz) {
      mags[static_cast<std::size_t>(i)] = 0.0;
      clamped_total += m;
    } else {
      mags[static_cast<std::size_t>(i)] = m;
      max_mag = std::max(max_mag, m);
    }
  }
  std::sort(mags.begin(), mags.end());
  // Snap nearly equal magnitudes so permutations of an (FP-wise) degenerate
  // multiset land on identical fields.
  for (int i = 1; i < 4; ++i)
    if (mags[i] - mags[i - 1] <= 1e-9 * std::max(1.0, max_mag)) mags[i] = mags[i - 1];

  CandidateOptions opts;
  opts.sum_tolerance_mt =
      std::max(1e-9 * (1.0 + max_mag), clamped_total * (1.0 + 1e-9) + 1e-12);
  opts.dedup_tolerance_mt = 1e-6 * std::max(1.0, max_mag);
  const auto cands = enumerate_candidates(mags, opts);

  if (conv == SignConvention::distinct) return static_cast<int>(cands.size());

  int pairs = 0;
  int self = 0;
  for (const auto& c : cands) {
    if (c.field.magnitude() <= opts.dedup_tolerance_mt) {
      ++self;
      continue;
    }
    const FieldVector neg{-c.field.bx, -c.field.by, -c.field.bz};
    for (const auto& other : cands)
      if (same_field(other.field, neg, opts.dedup_tolerance_mt)) {
        ++pairs;
        break;
      }
  }
  return self + pairs / 2 + (static_cast<int>(cands.size()) - self - pairs);
}

InversionResult invert_spectrum(const SyntheticSpectrum& s,
                                const InversionConfig& cfg) {
  InversionResult r;
  const auto guesses = detect_peaks(s, cfg.detect);
  r.fit = fit_multi_lorentzian(s, guesses, cfg.fit);
  for (const auto& p : r.fit.peaks) r.dip_centers_mhz.push_back(p.center_mhz);

  r.magnitude_sets = dips_to_magnitudes(r.dip_centers_mhz, cfg.hamiltonian,
                                        cfg.magnitudes);

  // Widen the sum-zero tolerance by the center uncertainty of the fit, else
  // noise in the dip positions would reject the true sign assignment.
  CandidateOptions copts = cfg.candidates;
  double sigma_c = 0.0;
  for (std::size_t k = 1; k < r.fit.standard_errors.size(); k += 3)
    sigma_c = std::max(sigma_c, r.fit.standard_errors[k]);
  copts.sum_tolerance_mt =
      std::max(cfg.candidates.sum_tolerance_mt,
               5.0 * std::sqrt(2.0) * sigma_c / cfg.hamiltonian.gamma_mhz_per_mt);

  for (const auto& ms : r.magnitude_sets) {
    std::vector<FieldCandidate> cands;
    try {
      cands = enumerate_candidates(ms, copts);
    } catch (const empty_candidate_set&) {
      continue;  // this multiset admits no sign assignment; others may
    }
    for (const auto& c : cands) {
      const bool dup =
          std::any_of(r.candidates.begin(), r.candidates.end(), [&](const auto& u) {
            return same_field(u.field, c.field, cfg.candidates.dedup_tolerance_mt);
          });
      if (!dup) r.candidates.push_back(c);
    }
  }
  if (r.candidates.empty())
    throw empty_candidate_set("no magnitude multiset admits a sum-zero assignment");

  std::sort(r.candidates.begin(), r.candidates.end(),
            [](const FieldCandidate& a, const FieldCandidate& b) {
              const auto ta = std::array{a.field.bx, a.field.by, a.field.bz};
              const auto tb = std::array{b.field.bx, b.field.by, b.field.bz};
              return ta < tb;
            });
  return r;
}

}  // namespace odmr
