#include "prepsy/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace prepsy::io {

namespace {

std::ofstream open_out(const std::string& path, std::ios_base::openmode mode = std::ios_base::out) {
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

void write_grid_csv(const std::string& path, const std::string& corner, const RealVector& rows,
                    const RealVector& cols, const RealMatrix& body) {
  std::ofstream out = open_out(path);
  out << corner;
  for (Index j = 0; j < cols.size(); ++j) out << ',' << fmt(cols(j));
  out << '\n';
  for (Index i = 0; i < rows.size(); ++i) {
    out << fmt(rows(i));
    for (Index j = 0; j < cols.size(); ++j) out << ',' << fmt(body(i, j));
    out << '\n';
  }
  finish(out, path);
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_signal_csv(const std::string& path, const protocol::Signal2D& signal) {
  const Index n1 = signal.values.rows(), n2 = signal.values.cols();
  RealVector t1(n1), t2(n2);
  for (Index i = 0; i < n1; ++i) t1(i) = static_cast<double>(i) * signal.t1_spacing;
  for (Index j = 0; j < n2; ++j) t2(j) = static_cast<double>(j) * signal.t2_spacing;
  write_grid_csv(path, "t1\\t2", t1, t2, signal.values);
}

void write_spectrum_csv(const std::string& path, const spectral::Spectrum2D& spectrum) {
  write_grid_csv(path, "f1\\f2", spectrum.axis1, spectrum.axis2, spectrum.magnitude);
}

void write_peaks_csv(const std::string& path, const std::vector<spectral::Peak>& peaks) {
  std::ofstream out = open_out(path);
  out << "f1,f2,magnitude\n";
  for (const spectral::Peak& p : peaks)
    out << fmt(p.f1) << ',' << fmt(p.f2) << ',' << fmt(p.magnitude) << '\n';
  finish(out, path);
}

void write_state_csv(const std::string& path, const states::DensityMatrix& state) {
  std::ofstream out = open_out(path);
  out << "# dims=";
  for (size_t k = 0; k < state.structure.dims.size(); ++k)
    out << (k ? "x" : "") << state.structure.dims[k];
  out << "\ni,j,re,im\n";
  for (Index i = 0; i < state.dim(); ++i)
    for (Index j = 0; j < state.dim(); ++j)
      out << i << ',' << j << ',' << fmt(state.matrix(i, j).real()) << ','
          << fmt(state.matrix(i, j).imag()) << '\n';
  finish(out, path);
}

states::DensityMatrix read_state_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open state file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("# dims=", 0) != 0)
    throw Error("state file '" + path + "' must start with a '# dims=AxBx...' line");
  HilbertStructure structure;
  {
    std::string spec = line.substr(7);
    std::replace(spec.begin(), spec.end(), 'x', ' ');
    std::istringstream ss(spec);
    Index d;
    while (ss >> d) structure.dims.push_back(d);
  }
  structure.validate();
  if (!std::getline(in, line) || line != "i,j,re,im")
    throw Error("state file '" + path + "' missing 'i,j,re,im' header");

  const Index dim = structure.total_dim();
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  size_t entries = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Index i, j;
    double re, im;
    if (!(ss >> i >> j >> re >> im))
      throw Error("state file '" + path + "': malformed row '" + line + "'");
    if (i < 0 || i >= dim || j < 0 || j >= dim)
      throw Error("state file '" + path + "': index out of range");
    m(i, j) = Complex(re, im);
    ++entries;
  }
  if (entries != static_cast<size_t>(dim) * static_cast<size_t>(dim))
    throw Error("state file '" + path + "': expected " + std::to_string(dim * dim) + " rows");
  return states::DensityMatrix(m, structure);
}

void write_pgm(const std::string& path, const RealMatrix& values) {
  const Index rows = values.rows(), cols = values.cols();
  if (rows == 0 || cols == 0) throw ContractError("write_pgm: empty image");
  const double top = values.maxCoeff();
  std::ofstream out = open_out(path, std::ios_base::out | std::ios_base::binary);
  out << "P5\n" << cols << ' ' << rows << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(cols));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const double v = top > 0.0 ? std::clamp(values(i, j) / top, 0.0, 1.0) : 0.0;
      row[static_cast<size_t>(j)] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(cols));
  }
  finish(out, path);
}

}  // namespace prepsy::io
