#pragma once

#include <string>
#include <vector>

#include "prepsy/common.hpp"
#include "prepsy/protocol.hpp"

namespace prepsy::spectral {

// Magnitude spectrum of a 2D time-domain signal. Axes hold ordinary
// frequencies (cycles per unit time), ascending and zero-centered; axis1
// indexes rows (conjugate to t1) and axis2 columns (conjugate to t2).
struct Spectrum2D {
  RealMatrix magnitude;
  RealVector axis1;
  RealVector axis2;
  std::string label;
};

struct AnalysisOptions {
  bool window = false;    // separable Hann taper before the transform
  Index zero_pad = 2;     // transform length = zero_pad * sample count (>= 1)
  double rel_threshold = 0.1;       // peak cut relative to the global maximum
  bool positive_quadrant = false;   // keep only peaks with f1 >= 0 and f2 >= 0
  void validate() const;
};

// Discrete 2D Fourier magnitude of the signal after removing additive
// row/column means (grand mean restored), optionally Hann-tapered and
// zero-padded. Requires at least 8 samples per axis. Output is centered so
// frequency 0 sits at index floor(N/2).
Spectrum2D fft2(const protocol::Signal2D& signal, const AnalysisOptions& options = {});

struct Peak {
  double f1 = 0.0;
  double f2 = 0.0;
  double magnitude = 0.0;
};

// Strict local maxima over the 8-neighborhood, at least rel_threshold times
// the global maximum. Empty when the global maximum is below 1e-12. Sorted by
// decreasing magnitude, ties broken by (f1, f2).
std::vector<Peak> detect_peaks(const Spectrum2D& spectrum, const AnalysisOptions& options = {});

// Total intensity: the sum of every magnitude entry of the spectrum. Linear
// in the probed correlation coefficient for states that differ only in it.
double total_intensity(const Spectrum2D& spectrum);

struct CalibrationLine {
  double slope = 0.0;            // intensity per unit |coefficient|; > 0
  double anchor_coefficient = 0.0;  // signed thermal coefficient used to fit
  double anchor_intensity = 0.0;
};

// Builds the intensity-vs-|coefficient| line through the origin for a
// two-qubit model: takes the Gibbs state of the config's own Hamiltonian at
// inverse temperature `beta`, reads the true diagonal correlation-tensor
// entry along `axis` (0=x, 1=y, 2=z), runs the protocol on that state, and
// divides the resulting difference-spectrum intensity by |coefficient|.
// Requires exactly two projections (the opposite pair probing that axis).
CalibrationLine calibrate(const protocol::PrepsyConfig& config, double beta, int axis,
                          const AnalysisOptions& options = {});

// Inverts the calibration line: measured intensity -> inferred |coefficient|.
double measure_correlation(const CalibrationLine& line, double intensity);

}  // namespace prepsy::spectral
