#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "odmr/spectrum.hpp"

namespace odmr {

struct PeakGuess {
  double center_mhz = 0.0;
  double fwhm_mhz = 0.0;
  double depth = 0.0;  // absolute signal drop at the dip minimum
};

struct PeakDetectParams {
  double prominence = 1e-3;
  double min_separation_mhz = 6.0;
  std::size_t smooth_window = 5;
};

// Locates dips by prominence on a lightly smoothed copy of the trace.
// Throws no_peaks_found when nothing clears the prominence threshold and
// invalid_argument_error for traces shorter than 16 samples.
std::vector<PeakGuess> detect_peaks(const SyntheticSpectrum& s,
                                    const PeakDetectParams& params);

// model(f) = baseline - sum_k depth_k / (1 + (2 (f - c_k) / w_k)^2)
double lorentzian_model(double f_mhz, double baseline,
                        const std::vector<PeakGuess>& peaks);

// Parameter vector layout: [baseline, c_1, w_1, d_1, ..., c_n, w_n, d_n].
Eigen::VectorXd pack_parameters(double baseline,
                                const std::vector<PeakGuess>& peaks);
void unpack_parameters(const Eigen::VectorXd& params, double& baseline,
                       std::vector<PeakGuess>& peaks);

// Analytic Jacobian of the model at each frequency, one row per sample,
// columns in pack_parameters order.
Eigen::MatrixXd model_jacobian(const Eigen::VectorXd& params,
                               const std::vector<double>& freqs_mhz);

struct FitOptions {
  std::size_t max_iterations = 200;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
  bool shared_width = false;
};

struct FitResult {
  double baseline = 0.0;
  std::vector<PeakGuess> peaks;  // sorted by center
  double residual_rms = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  // [baseline, c_1, w_1, d_1, ...] ordering, empty when dof <= 0 or the
  // covariance solve degenerates.
  std::vector<double> standard_errors;
};

// Damped least squares on internally rescaled parameters: centers are offset
// by grid start and divided by the span, widths enter through their log, and
// depths plus baseline are divided by the signal range. This makes the result
// equivariant under frequency translation and signal rescaling.
FitResult fit_multi_lorentzian(const SyntheticSpectrum& s,
                               const std::vector<PeakGuess>& guesses,
                               const FitOptions& opts);

}  // namespace odmr
