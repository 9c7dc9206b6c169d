#pragma once

#include <stdexcept>
#include <string>

namespace cavity {

// Nonlinear fit did not converge, or converged with an unacceptable
// residual. Carries the fit window for diagnosis.
class FitDiverged : public std::runtime_error {
 public:
  FitDiverged(const std::string& msg, double window_lo, double window_hi)
      : std::runtime_error(msg), window_lo_(window_lo), window_hi_(window_hi) {}
  double window_lo() const { return window_lo_; }
  double window_hi() const { return window_hi_; }

 private:
  double window_lo_, window_hi_;
};

// Two peak candidates whose fit windows overlap; fitting refuses and
// reports both centers.
class OverlappingPeaks : public std::runtime_error {
 public:
  OverlappingPeaks(double first, double second)
      : std::runtime_error("overlapping peak candidates at omega = " +
                           std::to_string(first) + " and " +
                           std::to_string(second)),
        first_(first),
        second_(second) {}
  double first() const { return first_; }
  double second() const { return second_; }

 private:
  double first_, second_;
};

// Time integration lost accuracy (norm drift beyond tolerance).
class NumericalInstability : public std::runtime_error {
 public:
  explicit NumericalInstability(const std::string& msg)
      : std::runtime_error(msg) {}
};

// No fitted resonance close enough to the atomic frequency.
class NoResonantMode : public std::runtime_error {
 public:
  explicit NoResonantMode(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cavity
