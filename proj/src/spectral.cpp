#include "prepsy/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "prepsy/states.hpp"

namespace prepsy::spectral {

namespace {

// DFT matrix D[k][i] = exp(-2*pi*i*k*i/n).
ComplexMatrix dft_matrix(Index n) {
  ComplexMatrix d(n, n);
  const double step = -kTwoPi / static_cast<double>(n);
  for (Index k = 0; k < n; ++k)
    for (Index i = 0; i < n; ++i)
      d(k, i) = std::polar(1.0, step * static_cast<double>(k * i));
  return d;
}

RealVector hann(Index n) {
  RealVector w(n);
  for (Index i = 0; i < n; ++i)
    w(i) = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n - 1)));
  return w;
}

// Centered frequency axis: entry i is (i - n/2) / (n * spacing).
RealVector centered_axis(Index n, double spacing) {
  RealVector axis(n);
  for (Index i = 0; i < n; ++i)
    axis(i) = static_cast<double>(i - n / 2) / (static_cast<double>(n) * spacing);
  return axis;
}

}  // namespace

void AnalysisOptions::validate() const {
  if (zero_pad < 1) throw ContractError("zero_pad factor must be a positive integer");
  if (!(rel_threshold > 0.0 && rel_threshold < 1.0))
    throw ContractError("rel_threshold must lie strictly between 0 and 1");
}

Spectrum2D fft2(const protocol::Signal2D& signal, const AnalysisOptions& options) {
  options.validate();
  const Index n1 = signal.values.rows();
  const Index n2 = signal.values.cols();
  if (n1 < 8 || n2 < 8) throw ContractError("fft2: grid too small (need at least 8 per axis)");
  if (!(signal.t1_spacing > 0.0) || !(signal.t2_spacing > 0.0))
    throw ContractError("fft2: grid spacings must be positive");

  // Remove additive row/column means (grand mean restored) so the DC ridge
  // does not mask the cross-peaks.
  RealMatrix centered = signal.values;
  const RealVector row_mean = centered.rowwise().mean();
  const RealVector col_mean = centered.colwise().mean().transpose();
  const double grand = centered.mean();
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean.transpose();
  centered.array() += grand;

  if (options.window) {
    const RealVector w1 = hann(n1), w2 = hann(n2);
    centered = w1.asDiagonal() * centered * w2.asDiagonal();
  }

  const Index big1 = n1 * options.zero_pad;
  const Index big2 = n2 * options.zero_pad;
  ComplexMatrix padded = ComplexMatrix::Zero(big1, big2);
  padded.topLeftCorner(n1, n2) = centered.cast<Complex>();

  const ComplexMatrix transformed = dft_matrix(big1) * padded * dft_matrix(big2).transpose();

  Spectrum2D out;
  out.label = signal.label;
  out.axis1 = centered_axis(big1, signal.t1_spacing);
  out.axis2 = centered_axis(big2, signal.t2_spacing);
  out.magnitude.resize(big1, big2);
  const Index shift1 = big1 - big1 / 2, shift2 = big2 - big2 / 2;
  for (Index i = 0; i < big1; ++i)
    for (Index j = 0; j < big2; ++j)
      out.magnitude(i, j) = std::abs(transformed((i + shift1) % big1, (j + shift2) % big2));
  return out;
}

std::vector<Peak> detect_peaks(const Spectrum2D& spectrum, const AnalysisOptions& options) {
  options.validate();
  if (spectrum.magnitude.rows() != spectrum.axis1.size() ||
      spectrum.magnitude.cols() != spectrum.axis2.size())
    throw ContractError("detect_peaks: axes do not match the magnitude grid");

  const double global_max = spectrum.magnitude.maxCoeff();
  std::vector<Peak> peaks;
  if (global_max < 1e-12) return peaks;
  const double cut = options.rel_threshold * global_max;

  const Index n1 = spectrum.magnitude.rows(), n2 = spectrum.magnitude.cols();
  for (Index i = 1; i + 1 < n1; ++i)
    for (Index j = 1; j + 1 < n2; ++j) {
      const double v = spectrum.magnitude(i, j);
      if (v < cut) continue;
      bool is_max = true;
      for (Index di = -1; di <= 1 && is_max; ++di)
        for (Index dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (spectrum.magnitude(i + di, j + dj) >= v) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      if (options.positive_quadrant &&
          (spectrum.axis1(i) < 0.0 || spectrum.axis2(j) < 0.0))
        continue;
      peaks.push_back(Peak{spectrum.axis1(i), spectrum.axis2(j), v});
    }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    if (a.f1 != b.f1) return a.f1 < b.f1;
    return a.f2 < b.f2;
  });
  return peaks;
}

double total_intensity(const Spectrum2D& spectrum) { return spectrum.magnitude.sum(); }

CalibrationLine calibrate(const protocol::PrepsyConfig& config, double beta, int axis,
                          const AnalysisOptions& options) {
  if (axis < 0 || axis > 2) throw ContractError("calibrate: axis must be 0, 1 or 2");
  if (config.projections.size() != 2)
    throw ContractError("calibrate: needs exactly the two opposite projections probing the axis");
  const ComplexMatrix& h = config.evolution.hamiltonian;
  if (h.rows() != 4)
    throw UnsupportedConfiguration("calibrate: supported for two-qubit models only");

  const HilbertStructure structure = qubits(2);
  const states::DensityMatrix thermal = states::gibbs_state(h, beta, structure);
  const states::BipartiteDecomposition parts = states::decompose(thermal);
  const states::FanoCoefficients fano = states::fano_coefficients(thermal);
  const double coefficient = fano.t[axis][axis];
  if (std::abs(coefficient) <= 1e-6 || linalg::max_abs(parts.chi) <= 1e-12)
    throw CalibrationImpossible(
        "thermal state carries no correlation along the probed axis (coefficient " +
        std::to_string(coefficient) + ")");

  const std::vector<protocol::Signal2D> signals = protocol::run_prepsy(thermal, config);
  const std::vector<protocol::Signal2D> diffs = protocol::difference_signals(signals);
  const double intensity = total_intensity(fft2(diffs.front(), options));

  CalibrationLine line;
  line.anchor_coefficient = coefficient;
  line.anchor_intensity = intensity;
  line.slope = intensity / std::abs(coefficient);
  if (!(line.slope > 0.0))
    throw CalibrationImpossible("thermal run produced a null spectrum; no usable slope");
  return line;
}

double measure_correlation(const CalibrationLine& line, double intensity) {
  if (line.slope == 0.0) throw ContractError("measure_correlation: calibration slope is zero");
  if (intensity < 0.0) throw ContractError("measure_correlation: intensity must be nonnegative");
  return intensity / line.slope;
}

}  // namespace prepsy::spectral
