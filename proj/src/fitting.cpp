#include "odmr/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "odmr/errors.hpp"

namespace odmr {

namespace {

std::vector<double> moving_average(const std::vector<double>& v, std::size_t window) {
  if (window < 2) return v;
  const std::size_t half = window / 2;
  const std::size_t n = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n - 1, i + half);
    double acc = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) acc += v[j];
    out[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// Prominence of the dip at index i: height of the lower of the two barriers
// separating it from a deeper dip (or the trace edge), measured from the
// minimum. Mirror image of the usual peak prominence.
double dip_prominence(const std::vector<double>& y, std::size_t i) {
  const double yi = y[i];
  double left_bar = -std::numeric_limits<double>::infinity();
  for (std::size_t j = i; j-- > 0;) {
    if (y[j] < yi) break;
    left_bar = std::max(left_bar, y[j]);
  }
  double right_bar = -std::numeric_limits<double>::infinity();
  for (std::size_t j = i + 1; j < y.size(); ++j) {
    if (y[j] < yi) break;
    right_bar = std::max(right_bar, y[j]);
  }
  if (!std::isfinite(left_bar) && !std::isfinite(right_bar)) return 0.0;
  if (!std::isfinite(left_bar)) return right_bar - yi;
  if (!std::isfinite(right_bar)) return left_bar - yi;
  return std::min(left_bar, right_bar) - yi;
}

// Interpolated frequency where the trace recrosses level, walking outward.
double half_level_crossing(const std::vector<double>& y, const FrequencyGrid& grid,
                           std::size_t i, double level, int dir) {
  std::size_t j = i;
  while (true) {
    const std::size_t next = static_cast<std::size_t>(static_cast<long>(j) + dir);
    if ((dir < 0 && j == 0) || (dir > 0 && next >= y.size())) return grid.frequency_at(j);
    if (y[next] >= level) {
      const double f0 = grid.frequency_at(j);
      const double f1 = grid.frequency_at(next);
      const double denom = y[next] - y[j];
      const double t = denom != 0.0 ? (level - y[j]) / denom : 0.5;
      return f0 + t * (f1 - f0);
    }
    j = next;
  }
}

struct ScaledSpace {
  double f_start = 0.0;
  double f_span = 1.0;
  double v_scale = 1.0;

  Eigen::VectorXd to_internal(const Eigen::VectorXd& phys, bool shared) const {
    const auto n_peaks = (phys.size() - 1) / 3;
    Eigen::VectorXd t(shared ? 2 + 2 * n_peaks : phys.size());
    t[0] = phys[0] / v_scale;
    double log_acc = 0.0;
    for (Eigen::Index k = 0; k < n_peaks; ++k) {
      const double c = phys[1 + 3 * k];
      const double w = phys[2 + 3 * k];
      const double d = phys[3 + 3 * k];
      log_acc += std::log(w / f_span);
      if (shared) {
        t[2 + 2 * k] = (c - f_start) / f_span;
        t[3 + 2 * k] = d / v_scale;
      } else {
        t[1 + 3 * k] = (c - f_start) / f_span;
        t[2 + 3 * k] = std::log(w / f_span);
        t[3 + 3 * k] = d / v_scale;
      }
    }
    if (shared) t[1] = log_acc / static_cast<double>(n_peaks);
    return t;
  }

  Eigen::VectorXd to_physical(const Eigen::VectorXd& t, bool shared) const {
    const auto n_peaks = shared ? (t.size() - 2) / 2 : (t.size() - 1) / 3;
    Eigen::VectorXd phys(1 + 3 * n_peaks);
    phys[0] = t[0] * v_scale;
    for (Eigen::Index k = 0; k < n_peaks; ++k) {
      if (shared) {
        phys[1 + 3 * k] = f_start + t[2 + 2 * k] * f_span;
        phys[2 + 3 * k] = std::exp(t[1]) * f_span;
        phys[3 + 3 * k] = t[3 + 2 * k] * v_scale;
      } else {
        phys[1 + 3 * k] = f_start + t[1 + 3 * k] * f_span;
        phys[2 + 3 * k] = std::exp(t[2 + 3 * k]) * f_span;
        phys[3 + 3 * k] = t[3 + 3 * k] * v_scale;
      }
    }
    return phys;
  }

  // Chain rule from physical-parameter columns to internal columns.
  Eigen::MatrixXd jacobian_internal(const Eigen::MatrixXd& j_phys,
                                    const Eigen::VectorXd& phys, bool shared) const {
    const auto n_peaks = (phys.size() - 1) / 3;
    Eigen::MatrixXd j(j_phys.rows(), shared ? 2 + 2 * n_peaks : phys.size());
    j.col(0) = j_phys.col(0) * v_scale;
    if (shared) j.col(1).setZero();
    for (Eigen::Index k = 0; k < n_peaks; ++k) {
      const double w = phys[2 + 3 * k];
      if (shared) {
        j.col(2 + 2 * k) = j_phys.col(1 + 3 * k) * f_span;
        j.col(1) += j_phys.col(2 + 3 * k) * w;
        j.col(3 + 2 * k) = j_phys.col(3 + 3 * k) * v_scale;
      } else {
        j.col(1 + 3 * k) = j_phys.col(1 + 3 * k) * f_span;
        j.col(2 + 3 * k) = j_phys.col(2 + 3 * k) * w;
        j.col(3 + 3 * k) = j_phys.col(3 + 3 * k) * v_scale;
      }
    }
    return j;
  }
};

Eigen::VectorXd residuals_for(const Eigen::VectorXd& phys,
                              const std::vector<double>& freqs,
                              const std::vector<double>& values) {
  double baseline = 0.0;
  std::vector<PeakGuess> peaks;
  unpack_parameters(phys, baseline, peaks);
  Eigen::VectorXd r(static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t i = 0; i < freqs.size(); ++i)
    r[static_cast<Eigen::Index>(i)] =
        values[i] - lorentzian_model(freqs[i], baseline, peaks);
  return r;
}

}  // namespace

std::vector<PeakGuess> detect_peaks(const SyntheticSpectrum& s,
                                    const PeakDetectParams& params) {
  if (s.values.size() < 16)
    throw invalid_argument_error("detect_peaks: need at least 16 samples");
  if (!(params.prominence > 0.0))
    throw invalid_argument_error("detect_peaks: prominence must be positive");

  const auto y = moving_average(s.values, params.smooth_window);
  const std::size_t n = y.size();

  struct Cand {
    std::size_t idx;
    double prom;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (y[i] < y[i - 1] && y[i] < y[i + 1]) {
      const double p = dip_prominence(y, i);
      if (p >= params.prominence) cands.push_back({i, p});
    }
  }
  if (cands.empty())
    throw no_peaks_found("no dips above the prominence threshold");

  std::sort(cands.begin(), cands.end(),
            [](const Cand& a, const Cand& b) { return a.prom > b.prom; });
  std::vector<Cand> kept;
  for (const auto& c : cands) {
    const double fc = s.grid.frequency_at(c.idx);
    const bool clash = std::any_of(kept.begin(), kept.end(), [&](const Cand& k) {
      return std::abs(s.grid.frequency_at(k.idx) - fc) < params.min_separation_mhz;
    });
    if (!clash) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Cand& a, const Cand& b) { return a.idx < b.idx; });

  std::vector<PeakGuess> guesses;
  for (const auto& c : kept) {
    PeakGuess g;
    // Parabolic refinement of the minimum through its neighbours.
    const double y0 = y[c.idx - 1], y1 = y[c.idx], y2 = y[c.idx + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    double offset = 0.0;
    if (denom > 0.0) offset = std::clamp(0.5 * (y0 - y2) / denom, -1.0, 1.0);
    g.center_mhz = s.grid.frequency_at(c.idx) + offset * s.grid.step_mhz();
    g.depth = c.prom;
    const double level = y1 + c.prom / 2.0;
    const double fl = half_level_crossing(y, s.grid, c.idx, level, -1);
    const double fr = half_level_crossing(y, s.grid, c.idx, level, +1);
    g.fwhm_mhz = std::max(fr - fl, 2.0 * s.grid.step_mhz());
    guesses.push_back(g);
  }
  return guesses;
}

double lorentzian_model(double f_mhz, double baseline,
                        const std::vector<PeakGuess>& peaks) {
  double acc = baseline;
  for (const auto& p : peaks) {
    const double u = 2.0 * (f_mhz - p.center_mhz) / p.fwhm_mhz;
    acc -= p.depth / (1.0 + u * u);
  }
  return acc;
}

Eigen::VectorXd pack_parameters(double baseline,
                                const std::vector<PeakGuess>& peaks) {
  Eigen::VectorXd v(1 + 3 * static_cast<Eigen::Index>(peaks.size()));
  v[0] = baseline;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    v[1 + 3 * static_cast<Eigen::Index>(k)] = peaks[k].center_mhz;
    v[2 + 3 * static_cast<Eigen::Index>(k)] = peaks[k].fwhm_mhz;
    v[3 + 3 * static_cast<Eigen::Index>(k)] = peaks[k].depth;
  }
  return v;
}

void unpack_parameters(const Eigen::VectorXd& params, double& baseline,
                       std::vector<PeakGuess>& peaks) {
  if (params.size() < 1 || (params.size() - 1) % 3 != 0)
    throw invalid_argument_error("parameter vector must have size 1 + 3n");
  baseline = params[0];
  const auto n = (params.size() - 1) / 3;
  peaks.assign(static_cast<std::size_t>(n), {});
  for (Eigen::Index k = 0; k < n; ++k) {
    peaks[static_cast<std::size_t>(k)] = {params[1 + 3 * k], params[2 + 3 * k],
                                          params[3 + 3 * k]};
  }
}

Eigen::MatrixXd model_jacobian(const Eigen::VectorXd& params,
                               const std::vector<double>& freqs_mhz) {
  double baseline = 0.0;
  std::vector<PeakGuess> peaks;
  unpack_parameters(params, baseline, peaks);
  (void)baseline;

  const auto m = static_cast<Eigen::Index>(freqs_mhz.size());
  Eigen::MatrixXd j(m, params.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    const double f = freqs_mhz[static_cast<std::size_t>(i)];
    j(i, 0) = 1.0;
    for (std::size_t k = 0; k < peaks.size(); ++k) {
      const auto& p = peaks[k];
      const double u = 2.0 * (f - p.center_mhz) / p.fwhm_mhz;
      const double den = 1.0 + u * u;
      const double den2 = den * den;
      const auto col = static_cast<Eigen::Index>(1 + 3 * k);
      j(i, col) = -4.0 * p.depth * u / (p.fwhm_mhz * den2);
      j(i, col + 1) = -2.0 * p.depth * u * u / (p.fwhm_mhz * den2);
      j(i, col + 2) = -1.0 / den;
    }
  }
  return j;
}

FitResult fit_multi_lorentzian(const SyntheticSpectrum& s,
                               const std::vector<PeakGuess>& guesses,
                               const FitOptions& opts) {
  if (guesses.empty())
    throw invalid_argument_error("fit needs at least one peak guess");
  const std::size_t n_params = 1 + 3 * guesses.size();
  if (s.values.size() <= n_params)
    throw invalid_argument_error("fit needs more samples than parameters");
  for (const auto& g : guesses)
    if (!(g.fwhm_mhz > 0.0) || !std::isfinite(g.center_mhz) || !std::isfinite(g.depth))
      throw invalid_argument_error("peak guesses must be finite with positive width");

  const std::vector<double> freqs = s.grid.frequencies();
  const auto& values = s.values;

  ScaledSpace space;
  space.f_start = s.grid.start_mhz;
  space.f_span = s.grid.stop_mhz - s.grid.start_mhz;
  const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
  space.v_scale = (*vmax > *vmin) ? (*vmax - *vmin) : 1.0;

  const double baseline0 = *vmax;
  Eigen::VectorXd t = space.to_internal(pack_parameters(baseline0, guesses),
                                        opts.shared_width);

  // Residuals are divided by the signal range so costs, gradients and the
  // termination tests are invariant under rescaling of the input values.
  auto cost_of = [&](const Eigen::VectorXd& internal) {
    const Eigen::VectorXd r =
        residuals_for(space.to_physical(internal, opts.shared_width), freqs, values) /
        space.v_scale;
    return std::make_pair(r.squaredNorm(), r);
  };

  auto [cost, resid] = cost_of(t);
  double lambda = opts.initial_damping;
  bool converged = false;
  std::size_t iter = 0;

  for (; iter < opts.max_iterations; ++iter) {
    const Eigen::VectorXd phys = space.to_physical(t, opts.shared_width);
    const Eigen::MatrixXd j =
        space.jacobian_internal(model_jacobian(phys, freqs), phys, opts.shared_width) /
        space.v_scale;
    if (!j.allFinite())
      throw singular_normal_equations("Jacobian is not finite; degenerate peak parameters");

    const Eigen::VectorXd g = j.transpose() * resid;
    if (g.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd jtj = j.transpose() * j;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda;
      const Eigen::VectorXd delta = a.ldlt().solve(g);
      if (!delta.allFinite())
        throw singular_normal_equations("normal equations solve failed");

      const Eigen::VectorXd trial = t + delta;
      const auto [trial_cost, trial_resid] = cost_of(trial);
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        t = trial;
        cost = trial_cost;
        resid = trial_resid;
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        if (delta.lpNorm<Eigen::Infinity>() <= opts.step_tolerance) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e15) break;  // stuck; report not converged
      }
    }
    if (!accepted || converged) {
      if (accepted && converged) ++iter;
      break;
    }
  }

  FitResult res;
  const Eigen::VectorXd phys = space.to_physical(t, opts.shared_width);
  unpack_parameters(phys, res.baseline, res.peaks);
  res.converged = converged;
  res.iterations = iter;
  const double phys_cost = cost * space.v_scale * space.v_scale;
  res.residual_rms = std::sqrt(phys_cost / static_cast<double>(values.size()));

  // Sort peaks by center, standard errors reordered along with them.
  std::vector<std::size_t> order(res.peaks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return res.peaks[a].center_mhz < res.peaks[b].center_mhz;
  });

  const auto m = static_cast<Eigen::Index>(values.size());
  const auto p = static_cast<Eigen::Index>(n_params);
  if (m > p) {
    const Eigen::MatrixXd j = model_jacobian(phys, freqs);
    const double sigma2 = phys_cost / static_cast<double>(m - p);
    Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::MatrixXd cov =
        jtj.ldlt().solve(Eigen::MatrixXd::Identity(p, p)) * sigma2;
    if (cov.allFinite()) {
      res.standard_errors.resize(static_cast<std::size_t>(p));
      res.standard_errors[0] = std::sqrt(std::max(0.0, cov(0, 0)));
      for (std::size_t k = 0; k < order.size(); ++k) {
        const auto src = static_cast<Eigen::Index>(1 + 3 * order[k]);
        for (int off = 0; off < 3; ++off)
          res.standard_errors[1 + 3 * k + static_cast<std::size_t>(off)] =
              std::sqrt(std::max(0.0, cov(src + off, src + off)));
      }
    }
  }

  std::vector<PeakGuess> sorted_peaks(res.peaks.size());
  for (std::size_t k = 0; k < order.size(); ++k) sorted_peaks[k] = res.peaks[order[k]];
  res.peaks = std::move(sorted_peaks);
  return res;
}

}  // namespace odmr
