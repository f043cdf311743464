#pragma once

#include <stdexcept>
#include <string>

namespace odmr {

// Base class for every error raised by this library.
class odmr_error : public std::runtime_error {
 public:
  explicit odmr_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed arguments or out-of-contract parameter values.
class invalid_argument_error : public odmr_error {
 public:
  explicit invalid_argument_error(const std::string& what) : odmr_error(what) {}
};

// Projection sets whose components do not sum to zero within tolerance.
class inconsistent_projections : public invalid_argument_error {
 public:
  explicit inconsistent_projections(const std::string& what)
      : invalid_argument_error(what) {}
};

// File I/O failures (open, write, rename).
class io_error : public odmr_error {
 public:
  explicit io_error(const std::string& what) : odmr_error(what) {}
};

// Structurally invalid CSV input; message carries the offending line number.
class csv_format_error : public io_error {
 public:
  explicit csv_format_error(const std::string& what) : io_error(what) {}
};

// A computation that ran but could not produce a usable result.
class computation_error : public odmr_error {
 public:
  explicit computation_error(const std::string& what) : odmr_error(what) {}
};

// Peak detection found nothing above the prominence threshold.
class no_peaks_found : public computation_error {
 public:
  explicit no_peaks_found(const std::string& what) : computation_error(what) {}
};

// Dip centers cannot be paired symmetrically about the zero-field line.
class unpairable_dips : public computation_error {
 public:
  explicit unpairable_dips(const std::string& what) : computation_error(what) {}
};

// No signed assignment of the magnitudes satisfies the sum-zero constraint.
class empty_candidate_set : public computation_error {
 public:
  explicit empty_candidate_set(const std::string& what) : computation_error(what) {}
};

// Normal equations became degenerate during least-squares refinement.
class singular_normal_equations : public computation_error {
 public:
  explicit singular_normal_equations(const std::string& what)
      : computation_error(what) {}
};

}  // namespace odmr
