#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prepsy/common.hpp"
#include "prepsy/models.hpp"
#include "prepsy/protocol.hpp"
#include "prepsy/spectral.hpp"
#include "prepsy/states.hpp"

namespace prepsy::experiment {

// A parsed, validated experiment file: every key resolved (defaults filled
// in), ready to be materialized into model + state + protocol objects.
struct ExperimentFile {
  enum class ModelKind { kToy, kNvPairwise, kNvCollective };
  enum class StateKind { kFano, kGibbs, kGibbsProduct, kFile };

  ModelKind model_kind = ModelKind::kToy;
  models::ToyModelParams toy;       // ordinary-frequency inputs (Hz)
  models::NvEnsembleParams nv;      // xi and rates in ordinary units of g

  StateKind state_kind = StateKind::kFano;
  double c[3] = {0.0, 0.0, 0.0};
  double beta = 0.0;
  std::string state_path;           // resolved relative to the experiment file
  bool save_state = false;

  std::vector<std::string> projection_tokens;
  std::string standard_token = "+x";
  std::string pulse_token = "sz";
  double pulse_angle = kPi / 2.0;
  std::string observable_token = "+x";
  Index t1_count = 0, t2_count = 0;
  double t1_spacing = 0.0, t2_spacing = 0.0;  // 0 = auto from the spectral span
  double dt = 0.0;                            // 0 = auto
  dynamics::Method method = dynamics::Method::kAuto;
  int workers = 0;

  spectral::AnalysisOptions analysis;
  bool heatmaps = false;
  bool calibration = false;
  int calibration_axis = 0;
  double calibration_beta = 0.0;

  std::optional<std::string> sweep_parameter;  // "section.key"
  std::vector<double> sweep_values;

  // Resolved (section, key) -> value echo, in declaration order, for
  // describe/manifest output.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Parses the documented sectioned key/value format. Throws ConfigError with
// the offending line number and a remedy hint.
ExperimentFile parse_experiment(const std::string& path);

// In-memory variant used by tests and sweeps (virtual path names the source).
ExperimentFile parse_experiment_text(const std::string& text, const std::string& origin);

// Everything needed to execute one protocol run.
struct Materialized {
  states::DensityMatrix initial;
  protocol::PrepsyConfig config;
  spectral::AnalysisOptions analysis;
  HilbertStructure structure;
  double max_eigen_gap = 0.0;  // angular units, of the evolution Hamiltonian
  bool adiabatic_ok = true;
};

// Builds Hamiltonian (ordinary-frequency inputs scaled to angular units),
// initial state and protocol config; resolves auto grid spacings as
// 0.8*pi / (largest Hamiltonian eigen-gap).
Materialized materialize(const ExperimentFile& experiment);

struct RunReport {
  bool invariants_ok = true;
  bool null_result = false;
  std::string manifest_path;
};

// Executes the full pipeline into out_dir: per-projection signals, pairwise
// differences, spectra, peak lists, optional heatmaps/calibration/sweep, and
// manifest.json. workers_override > 0 takes precedence over the file's value.
RunReport run_experiment(const ExperimentFile& experiment, const std::string& out_dir,
                         int workers_override = 0);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool ok() const;
};

// Re-checks a completed run directory: manifest present, every listed output
// file exists, and the recorded invariant summary is within tolerance.
VerifyReport verify_run(const std::string& out_dir);

}  // namespace prepsy::experiment
