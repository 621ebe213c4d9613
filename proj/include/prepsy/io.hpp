#pragma once

#include <string>
#include <vector>

#include "prepsy/common.hpp"
#include "prepsy/protocol.hpp"
#include "prepsy/spectral.hpp"
#include "prepsy/states.hpp"

namespace prepsy::io {

// All numeric CSV output uses 17 significant digits so round trips are exact.
std::string fmt(double v);

// Header row carries the t2 values after a corner label, first column the t1
// values, body the signal samples.
void write_signal_csv(const std::string& path, const protocol::Signal2D& signal);

// Same layout with frequency axes and magnitudes.
void write_spectrum_csv(const std::string& path, const spectral::Spectrum2D& spectrum);

// Columns f1, f2, magnitude; one row per detected peak.
void write_peaks_csv(const std::string& path, const std::vector<spectral::Peak>& peaks);

// Dense density matrix as "i,j,re,im" rows preceded by a "# dims=..." line.
void write_state_csv(const std::string& path, const states::DensityMatrix& state);
states::DensityMatrix read_state_csv(const std::string& path);

// Binary 8-bit grayscale (P5) heatmap, max-normalized; row 0 at the top.
void write_pgm(const std::string& path, const RealMatrix& values);

}  // namespace prepsy::io
