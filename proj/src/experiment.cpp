#include "prepsy/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "prepsy/io.hpp"
#include "prepsy/version.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace prepsy::experiment {

namespace {

constexpr double kNullIntensityFloor = 1e-8;

// ------------------------------ raw parsing ------------------------------

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> table = {
      {"model",
       {"kind", "omega_s", "omega_e", "lambda_x", "lambda_y", "lambda_z", "n_spins", "xi",
        "gamma10", "g", "delta", "omega_raman", "kappa", "gamma_e0", "gamma_e1"}},
      {"state", {"kind", "c_x", "c_y", "c_z", "beta", "path", "save"}},
      {"protocol",
       {"projections", "standard", "pulse", "pulse_angle", "observable", "t1_count", "t2_count",
        "t1_spacing", "t2_spacing", "dt", "method", "workers"}},
      {"analysis",
       {"window", "zero_pad", "threshold", "quadrant", "heatmaps", "calibration",
        "calibration_axis", "calibration_beta"}},
      {"sweep", {"parameter", "values"}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct RawFile {
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;
};

RawFile tokenize(const std::string& text, const std::string& origin) {
  RawFile raw;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw ConfigError("unterminated section header", number, "write it as [section]");
      const std::string name = trim(body.substr(1, body.size() - 2));
      if (!allowed_keys().count(name))
        throw ConfigError("unknown section [" + name + "]", number,
                          "valid sections: model, state, protocol, analysis, sweep");
      if (raw.sections.count(name))
        throw ConfigError("duplicate section [" + name + "]", number,
                          "each section may appear once");
      raw.sections[name];
      raw.section_lines[name] = number;
      current = name;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", number, "in " + origin);
    if (current.empty())
      throw ConfigError("key outside any section", number, "start with a [section] header");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!allowed_keys().at(current).count(key)) {
      std::string known;
      for (const std::string& k : allowed_keys().at(current)) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError("unknown key '" + key + "' in [" + current + "]", number,
                        "known keys: " + known);
    }
    if (raw.sections[current].count(key))
      throw ConfigError("duplicate key '" + key + "'", number, "keep a single assignment");
    if (value.empty()) throw ConfigError("empty value for '" + key + "'", number, "give a value");
    raw.sections[current][key] = Entry{value, number};
  }
  for (const char* required : {"model", "state", "protocol"})
    if (!raw.sections.count(required))
      throw ConfigError(std::string("missing [") + required + "] section", 0,
                        "experiment files need [model], [state] and [protocol]");
  return raw;
}

// ----------------------------- typed getters -----------------------------

class Reader {
 public:
  Reader(const RawFile& raw, const std::string& section) : raw_(raw), section_(section) {}

  bool has(const std::string& key) const {
    const Section* s = find();
    return s && s->count(key);
  }

  const Entry& require(const std::string& key) const {
    const Section* s = find();
    if (!s || !s->count(key))
      throw ConfigError("missing required key '" + key + "' in [" + section_ + "]",
                        s ? raw_.section_lines.at(section_) : 0, "add '" + key + " = ...'");
    const Entry& e = s->at(key);
    e.used = true;
    return e;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const Section* s = find();
    if (!s || !s->count(key)) return fallback;
    const Entry& e = s->at(key);
    e.used = true;
    return e.value;
  }

  double to_double(const Entry& e, const std::string& key) const {
    try {
      size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' must be a number, got '" + e.value + "'", e.line,
                        "use plain decimal notation");
    }
  }

  long to_int(const Entry& e, const std::string& key) const {
    try {
      size_t pos = 0;
      const long v = std::stol(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' must be an integer, got '" + e.value + "'", e.line,
                        "use a whole number");
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const Section* s = find();
    if (!s || !s->count(key)) return fallback;
    const Entry& e = s->at(key);
    e.used = true;
    return to_double(e, key);
  }

  long get_int(const std::string& key, long fallback) const {
    const Section* s = find();
    if (!s || !s->count(key)) return fallback;
    const Entry& e = s->at(key);
    e.used = true;
    return to_int(e, key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const Section* s = find();
    if (!s || !s->count(key)) return fallback;
    const Entry& e = s->at(key);
    e.used = true;
    if (e.value == "on" || e.value == "true" || e.value == "yes") return true;
    if (e.value == "off" || e.value == "false" || e.value == "no") return false;
    throw ConfigError("'" + key + "' must be on/off", e.line, "got '" + e.value + "'");
  }

  // 0 means "auto".
  double get_auto_double(const std::string& key, const char* what) const {
    const Section* s = find();
    if (!s || !s->count(key)) return 0.0;
    const Entry& e = s->at(key);
    e.used = true;
    if (e.value == "auto") return 0.0;
    const double v = to_double(e, key);
    if (!(v > 0.0))
      throw ConfigError(std::string(what) + " must be positive or 'auto'", e.line,
                        "got '" + e.value + "'");
    return v;
  }

  void reject_unused(const std::string& context) const {
    const Section* s = find();
    if (!s) return;
    for (const auto& [key, entry] : *s)
      if (!entry.used)
        throw ConfigError("key '" + key + "' does not apply " + context, entry.line,
                          "remove it or change the kind");
  }

 private:
  const Section* find() const {
    const auto it = raw_.sections.find(section_);
    return it == raw_.sections.end() ? nullptr : &it->second;
  }
  const RawFile& raw_;
  std::string section_;
};

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// Named qubit axis states or explicit "re:im,re:im,..." amplitude lists.
ComplexVector token_to_state(const std::string& token) {
  const double r = 1.0 / std::sqrt(2.0);
  ComplexVector v(2);
  if (token == "+x") { v << r, r; return v; }
  if (token == "-x") { v << r, -r; return v; }
  if (token == "+y") { v << r, Complex(0, r); return v; }
  if (token == "-y") { v << r, Complex(0, -r); return v; }
  if (token == "+z") { v << 1, 0; return v; }
  if (token == "-z") { v << 0, 1; return v; }
  if (token.find(',') == std::string::npos)
    throw Error("unknown state token '" + token +
                "' (use +x/-x/+y/-y/+z/-z or comma-separated re:im amplitudes)");
  std::vector<Complex> amps;
  std::istringstream in(token);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto colon = part.find(':');
    try {
      const double re = std::stod(colon == std::string::npos ? part : part.substr(0, colon));
      const double im = colon == std::string::npos ? 0.0 : std::stod(part.substr(colon + 1));
      amps.emplace_back(re, im);
    } catch (const std::exception&) {
      throw Error("bad amplitude '" + part + "' in state token '" + token + "'");
    }
  }
  ComplexVector out(static_cast<Index>(amps.size()));
  for (size_t i = 0; i < amps.size(); ++i) out(static_cast<Index>(i)) = amps[i];
  const double norm = out.norm();
  if (norm < 1e-12) throw Error("state token '" + token + "' has zero norm");
  return out / norm;
}

int axis_index(const std::string& name, int line) {
  if (name == "x") return 0;
  if (name == "y") return 1;
  if (name == "z") return 2;
  throw ConfigError("axis must be x, y or z", line, "got '" + name + "'");
}

const std::set<std::string>& sweepable() {
  static const std::set<std::string> names = {
      "state.c_x",        "state.c_y",      "state.c_z",      "state.beta",
      "model.omega_s",    "model.omega_e",  "model.lambda_x", "model.lambda_y",
      "model.lambda_z",   "model.xi",       "model.gamma10",  "protocol.pulse_angle",
  };
  return names;
}

std::string render_bool(bool b) { return b ? "on" : "off"; }

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;  // already carries line context
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(name + ": " + e.what(), e.trace_drift, e.min_eigenvalue);
  } catch (const BranchImpossible& e) {
    throw BranchImpossible(name + ": " + e.what());
  } catch (const UnsupportedConfiguration& e) {
    throw UnsupportedConfiguration(name + ": " + e.what());
  } catch (const CalibrationImpossible& e) {
    throw CalibrationImpossible(name + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(name + ": " + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ------------------------------ parsing API ------------------------------

ExperimentFile parse_experiment_text(const std::string& text, const std::string& origin) {
  const RawFile raw = tokenize(text, origin);
  ExperimentFile exp;

  // --- model ---
  {
    Reader model(raw, "model");
    const Entry& kind = model.require("kind");
    if (kind.value == "toy") {
      exp.model_kind = ExperimentFile::ModelKind::kToy;
      exp.toy.omega_s = model.get_double("omega_s", 0.0);
      exp.toy.omega_e = model.get_double("omega_e", 0.0);
      exp.toy.lambda = {};
      exp.toy.lambda[0][0] = model.get_double("lambda_x", 0.0);
      exp.toy.lambda[1][1] = model.get_double("lambda_y", 0.0);
      exp.toy.lambda[2][2] = model.get_double("lambda_z", 0.0);
    } else if (kind.value == "nv-pairwise" || kind.value == "nv-collective") {
      exp.model_kind = kind.value == "nv-pairwise" ? ExperimentFile::ModelKind::kNvPairwise
                                                   : ExperimentFile::ModelKind::kNvCollective;
      const Entry& n_entry = model.require("n_spins");
      const long n = model.to_int(n_entry, "n_spins");
      if (n < 2 || n > 8)
        throw ConfigError("n_spins must lie in [2, 8] (dense cap)", n_entry.line,
                          "got " + n_entry.value);
      const Entry& xi_entry = model.require("xi");
      const double xi = model.to_double(xi_entry, "xi");
      if (xi == 0.0) throw ConfigError("xi must be nonzero", xi_entry.line, "set a coupling");
      const double gamma = model.get_double("gamma10", 0.0);
      if (gamma < 0.0)
        throw ConfigError("gamma10 must be nonnegative", raw.sections.at("model").at("gamma10").line,
                          "rates are plain decay rates");
      exp.nv = models::NvEnsembleParams::uniform(static_cast<Index>(n), xi, gamma);
      if (model.has("g")) exp.nv.g = model.get_double("g", 0.0);
      if (model.has("delta")) exp.nv.delta = model.get_double("delta", 0.0);
      if (model.has("omega_raman")) exp.nv.omega_raman = model.get_double("omega_raman", 0.0);
      if (model.has("kappa")) exp.nv.kappa = model.get_double("kappa", 0.0);
      if (model.has("gamma_e0")) exp.nv.gamma_e0 = model.get_double("gamma_e0", 0.0);
      if (model.has("gamma_e1")) exp.nv.gamma_e1 = model.get_double("gamma_e1", 0.0);
    } else {
      throw ConfigError("unknown model kind '" + kind.value + "'", kind.line,
                        "use toy, nv-pairwise or nv-collective");
    }
    model.reject_unused("to model kind '" + kind.value + "'");
  }

  // --- state ---
  {
    Reader state(raw, "state");
    const Entry& kind = state.require("kind");
    if (kind.value == "fano") {
      exp.state_kind = ExperimentFile::StateKind::kFano;
      exp.c[0] = state.get_double("c_x", 0.0);
      exp.c[1] = state.get_double("c_y", 0.0);
      exp.c[2] = state.get_double("c_z", 0.0);
    } else if (kind.value == "gibbs" || kind.value == "gibbs-product") {
      exp.state_kind = kind.value == "gibbs" ? ExperimentFile::StateKind::kGibbs
                                             : ExperimentFile::StateKind::kGibbsProduct;
      const Entry& beta = state.require("beta");
      exp.beta = state.to_double(beta, "beta");
      if (exp.beta < 0.0)
        throw ConfigError("beta must be nonnegative", beta.line, "inverse temperature");
    } else if (kind.value == "file") {
      exp.state_kind = ExperimentFile::StateKind::kFile;
      exp.state_path = state.require("path").value;
    } else {
      throw ConfigError("unknown state kind '" + kind.value + "'", kind.line,
                        "use fano, gibbs, gibbs-product or file");
    }
    exp.save_state = state.get_bool("save", false);
    state.reject_unused("to state kind '" + kind.value + "'");
  }

  // --- protocol ---
  {
    Reader protocol(raw, "protocol");
    const Entry& projections = protocol.require("projections");
    exp.projection_tokens = split_ws(projections.value);
    if (exp.projection_tokens.size() < 2)
      throw ConfigError("need at least 2 projections to difference", projections.line,
                        "e.g. 'projections = +x -x'");
    exp.standard_token = protocol.get_string("standard", "+x");
    exp.pulse_token = protocol.get_string("pulse", "sz");
    if (exp.pulse_token != "sx" && exp.pulse_token != "sy" && exp.pulse_token != "sz") {
      const Entry& e = raw.sections.at("protocol").at("pulse");
      throw ConfigError("pulse must be sx, sy or sz", e.line, "got '" + e.value + "'");
    }
    exp.pulse_angle = protocol.get_double("pulse_angle", kPi / 2.0);
    exp.observable_token = protocol.get_string("observable", "+x");
    const Entry& c1 = protocol.require("t1_count");
    const Entry& c2 = protocol.require("t2_count");
    exp.t1_count = static_cast<Index>(protocol.to_int(c1, "t1_count"));
    exp.t2_count = static_cast<Index>(protocol.to_int(c2, "t2_count"));
    if (exp.t1_count < 8)
      throw ConfigError("t1_count must be at least 8 for spectral analysis", c1.line,
                        "got " + c1.value);
    if (exp.t2_count < 8)
      throw ConfigError("t2_count must be at least 8 for spectral analysis", c2.line,
                        "got " + c2.value);
    exp.t1_spacing = protocol.get_auto_double("t1_spacing", "t1_spacing");
    exp.t2_spacing = protocol.get_auto_double("t2_spacing", "t2_spacing");
    exp.dt = protocol.get_auto_double("dt", "dt");
    const std::string method = protocol.get_string("method", "auto");
    if (method == "auto") exp.method = dynamics::Method::kAuto;
    else if (method == "integrator") exp.method = dynamics::Method::kIntegrator;
    else if (method == "propagator") exp.method = dynamics::Method::kEigenbasis;
    else {
      const Entry& e = raw.sections.at("protocol").at("method");
      throw ConfigError("method must be auto, integrator or propagator", e.line,
                        "got '" + e.value + "'");
    }
    const long workers = protocol.get_int("workers", 0);
    if (workers < 0)
      throw ConfigError("workers must be nonnegative",
                        raw.sections.at("protocol").at("workers").line, "0 picks a default");
    exp.workers = static_cast<int>(workers);
    protocol.reject_unused("to [protocol]");
  }

  // --- analysis (optional) ---
  {
    Reader analysis(raw, "analysis");
    const std::string window = analysis.get_string("window", "none");
    if (window == "none") exp.analysis.window = false;
    else if (window == "hann") exp.analysis.window = true;
    else {
      const Entry& e = raw.sections.at("analysis").at("window");
      throw ConfigError("window must be none or hann", e.line, "got '" + e.value + "'");
    }
    const long pad = analysis.get_int("zero_pad", 2);
    if (pad < 1)
      throw ConfigError("zero_pad must be a positive integer",
                        raw.sections.at("analysis").at("zero_pad").line, "1 disables padding");
    exp.analysis.zero_pad = static_cast<Index>(pad);
    exp.analysis.rel_threshold = analysis.get_double("threshold", 0.1);
    if (!(exp.analysis.rel_threshold > 0.0 && exp.analysis.rel_threshold < 1.0))
      throw ConfigError("threshold must lie strictly between 0 and 1",
                        raw.sections.at("analysis").at("threshold").line, "e.g. 0.1");
    const std::string quadrant = analysis.get_string("quadrant", "full");
    if (quadrant == "full") exp.analysis.positive_quadrant = false;
    else if (quadrant == "positive") exp.analysis.positive_quadrant = true;
    else {
      const Entry& e = raw.sections.at("analysis").at("quadrant");
      throw ConfigError("quadrant must be full or positive", e.line, "got '" + e.value + "'");
    }
    exp.heatmaps = analysis.get_bool("heatmaps", false);
    exp.calibration = analysis.get_bool("calibration", false);
    exp.calibration_axis = axis_index(analysis.get_string("calibration_axis", "x"),
                                      raw.section_lines.count("analysis")
                                          ? raw.section_lines.at("analysis")
                                          : 0);
    if (exp.calibration) {
      Reader a2(raw, "analysis");
      const Entry& beta = a2.require("calibration_beta");
      exp.calibration_beta = a2.to_double(beta, "calibration_beta");
      if (!(exp.calibration_beta > 0.0))
        throw ConfigError("calibration_beta must be positive", beta.line,
                          "the thermal anchor needs beta > 0");
    } else {
      exp.calibration_beta = analysis.get_double("calibration_beta", 0.0);
    }
    analysis.reject_unused("to [analysis]");
  }

  // --- sweep (optional) ---
  if (raw.sections.count("sweep")) {
    Reader sweep(raw, "sweep");
    const Entry& parameter = sweep.require("parameter");
    if (!sweepable().count(parameter.value)) {
      std::string known;
      for (const std::string& name : sweepable()) known += (known.empty() ? "" : ", ") + name;
      throw ConfigError("'" + parameter.value + "' is not sweepable", parameter.line,
                        "sweepable: " + known);
    }
    const bool is_toy = exp.model_kind == ExperimentFile::ModelKind::kToy;
    const bool needs_toy = parameter.value.rfind("model.omega", 0) == 0 ||
                           parameter.value.rfind("model.lambda", 0) == 0;
    const bool needs_nv =
        parameter.value == "model.xi" || parameter.value == "model.gamma10";
    const bool needs_fano = parameter.value.rfind("state.c_", 0) == 0;
    const bool needs_beta = parameter.value == "state.beta";
    if (needs_toy && !is_toy)
      throw ConfigError("parameter applies to the toy model only", parameter.line, "");
    if (needs_nv && is_toy)
      throw ConfigError("parameter applies to nv models only", parameter.line, "");
    if (needs_fano && exp.state_kind != ExperimentFile::StateKind::kFano)
      throw ConfigError("parameter needs state kind fano", parameter.line, "");
    if (needs_beta && exp.state_kind != ExperimentFile::StateKind::kGibbs &&
        exp.state_kind != ExperimentFile::StateKind::kGibbsProduct)
      throw ConfigError("parameter needs a gibbs state kind", parameter.line, "");
    exp.sweep_parameter = parameter.value;
    const Entry& values = sweep.require("values");
    for (const std::string& tok : split_ws(values.value)) {
      try {
        size_t pos = 0;
        exp.sweep_values.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError("bad sweep value '" + tok + "'", values.line, "numbers only");
      }
    }
    if (exp.sweep_values.empty())
      throw ConfigError("sweep needs at least one value", values.line, "space-separated list");
    sweep.reject_unused("to [sweep]");
  }

  // --- resolved echo ---
  auto put = [&exp](const std::string& key, const std::string& value) {
    exp.echo.emplace_back(key, value);
  };
  switch (exp.model_kind) {
    case ExperimentFile::ModelKind::kToy:
      put("model.kind", "toy");
      put("model.omega_s", io::fmt(exp.toy.omega_s));
      put("model.omega_e", io::fmt(exp.toy.omega_e));
      put("model.lambda_x", io::fmt(exp.toy.lambda[0][0]));
      put("model.lambda_y", io::fmt(exp.toy.lambda[1][1]));
      put("model.lambda_z", io::fmt(exp.toy.lambda[2][2]));
      break;
    case ExperimentFile::ModelKind::kNvPairwise:
    case ExperimentFile::ModelKind::kNvCollective:
      put("model.kind", exp.model_kind == ExperimentFile::ModelKind::kNvPairwise
                            ? "nv-pairwise"
                            : "nv-collective");
      put("model.n_spins", std::to_string(exp.nv.n_spins));
      put("model.xi", io::fmt(exp.nv.n_spins >= 2 ? exp.nv.xi(0, 1) : 0.0));
      put("model.gamma10", io::fmt(exp.nv.gamma10.size() ? exp.nv.gamma10(0) : 0.0));
      if (exp.nv.g) put("model.g", io::fmt(*exp.nv.g));
      if (exp.nv.delta) put("model.delta", io::fmt(*exp.nv.delta));
      if (exp.nv.omega_raman) put("model.omega_raman", io::fmt(*exp.nv.omega_raman));
      if (exp.nv.kappa) put("model.kappa", io::fmt(*exp.nv.kappa));
      if (exp.nv.gamma_e0) put("model.gamma_e0", io::fmt(*exp.nv.gamma_e0));
      if (exp.nv.gamma_e1) put("model.gamma_e1", io::fmt(*exp.nv.gamma_e1));
      break;
  }
  switch (exp.state_kind) {
    case ExperimentFile::StateKind::kFano:
      put("state.kind", "fano");
      put("state.c_x", io::fmt(exp.c[0]));
      put("state.c_y", io::fmt(exp.c[1]));
      put("state.c_z", io::fmt(exp.c[2]));
      break;
    case ExperimentFile::StateKind::kGibbs:
    case ExperimentFile::StateKind::kGibbsProduct:
      put("state.kind",
          exp.state_kind == ExperimentFile::StateKind::kGibbs ? "gibbs" : "gibbs-product");
      put("state.beta", io::fmt(exp.beta));
      break;
    case ExperimentFile::StateKind::kFile:
      put("state.kind", "file");
      put("state.path", exp.state_path);
      break;
  }
  put("state.save", render_bool(exp.save_state));
  {
    std::string projections;
    for (const std::string& tok : exp.projection_tokens)
      projections += (projections.empty() ? "" : " ") + tok;
    put("protocol.projections", projections);
    put("protocol.standard", exp.standard_token);
    put("protocol.pulse", exp.pulse_token);
    put("protocol.pulse_angle", io::fmt(exp.pulse_angle));
    put("protocol.observable", exp.observable_token);
    put("protocol.t1_count", std::to_string(exp.t1_count));
    put("protocol.t2_count", std::to_string(exp.t2_count));
    put("protocol.t1_spacing", exp.t1_spacing > 0.0 ? io::fmt(exp.t1_spacing) : "auto");
    put("protocol.t2_spacing", exp.t2_spacing > 0.0 ? io::fmt(exp.t2_spacing) : "auto");
    put("protocol.dt", exp.dt > 0.0 ? io::fmt(exp.dt) : "auto");
    put("protocol.method", exp.method == dynamics::Method::kAuto
                               ? "auto"
                               : exp.method == dynamics::Method::kIntegrator ? "integrator"
                                                                             : "propagator");
    put("protocol.workers", std::to_string(exp.workers));
  }
  put("analysis.window", exp.analysis.window ? "hann" : "none");
  put("analysis.zero_pad", std::to_string(exp.analysis.zero_pad));
  put("analysis.threshold", io::fmt(exp.analysis.rel_threshold));
  put("analysis.quadrant", exp.analysis.positive_quadrant ? "positive" : "full");
  put("analysis.heatmaps", render_bool(exp.heatmaps));
  put("analysis.calibration", render_bool(exp.calibration));
  if (exp.calibration) {
    put("analysis.calibration_axis", std::string(1, "xyz"[exp.calibration_axis]));
    put("analysis.calibration_beta", io::fmt(exp.calibration_beta));
  }
  if (exp.sweep_parameter) {
    put("sweep.parameter", *exp.sweep_parameter);
    std::string values;
    for (double v : exp.sweep_values) values += (values.empty() ? "" : " ") + io::fmt(v);
    put("sweep.values", values);
  }
  return exp;
}

ExperimentFile parse_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment file '" + path + "'", 0, "check the path");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ExperimentFile exp = parse_experiment_text(buffer.str(), path);
  if (exp.state_kind == ExperimentFile::StateKind::kFile) {
    const fs::path parent = fs::path(path).parent_path();
    if (!exp.state_path.empty() && fs::path(exp.state_path).is_relative() && !parent.empty())
      exp.state_path = (parent / exp.state_path).string();
  }
  return exp;
}

// ----------------------------- materialization -----------------------------

Materialized materialize(const ExperimentFile& exp) {
  Materialized out;

  // Hamiltonian: user-facing frequencies are ordinary, internal units angular.
  ComplexMatrix h;
  std::vector<models::LindbladChannel> channels;
  switch (exp.model_kind) {
    case ExperimentFile::ModelKind::kToy: {
      models::ToyModelParams angular = exp.toy;
      angular.omega_s *= kTwoPi;
      angular.omega_e *= kTwoPi;
      for (auto& row : angular.lambda)
        for (double& v : row) v *= kTwoPi;
      out.structure = qubits(2);
      h = models::toy_hamiltonian(angular);
      break;
    }
    case ExperimentFile::ModelKind::kNvPairwise:
    case ExperimentFile::ModelKind::kNvCollective: {
      models::NvEnsembleParams angular = exp.nv;
      angular.xi *= kTwoPi;  // decay rates stay literal
      out.structure = qubits(angular.n_spins);
      h = exp.model_kind == ExperimentFile::ModelKind::kNvPairwise
              ? models::nv_pairwise_hamiltonian(angular)
              : models::nv_collective_hamiltonian(angular);
      channels = models::nv_dissipators(angular, out.structure);
      out.adiabatic_ok = angular.adiabatic_ok();
      break;
    }
  }

  const linalg::EigResult eig = linalg::herm_eig(h);
  out.max_eigen_gap = eig.values(eig.values.size() - 1) - eig.values(0);
  const bool needs_auto = exp.t1_spacing <= 0.0 || exp.t2_spacing <= 0.0;
  if (needs_auto && out.max_eigen_gap <= 1e-12)
    throw ConfigError(
        "the Hamiltonian spectrum is flat, so grid spacings cannot be derived", 0,
        "set t1_spacing and t2_spacing explicitly");
  const double auto_spacing = needs_auto ? 0.8 * kPi / out.max_eigen_gap : 0.0;

  // Initial state.
  try {
    switch (exp.state_kind) {
      case ExperimentFile::StateKind::kFano: {
        if (out.structure.total_dim() != 4)
          throw ConfigError("state kind fano needs a two-qubit model", 0,
                            "use gibbs/gibbs-product/file for larger models");
        out.initial = states::build_maximally_mixed_marginal(
            std::array<double, 3>{exp.c[0], exp.c[1], exp.c[2]});
        break;
      }
      case ExperimentFile::StateKind::kGibbs:
        out.initial = states::gibbs_state(h, exp.beta, out.structure);
        break;
      case ExperimentFile::StateKind::kGibbsProduct: {
        const states::DensityMatrix full = states::gibbs_state(h, exp.beta, out.structure);
        std::vector<Index> env_keep;
        for (Index k = 1; k < out.structure.factors(); ++k) env_keep.push_back(k);
        const ComplexMatrix rho_s = linalg::partial_trace(full.matrix, out.structure, {0});
        const ComplexMatrix tau_e = linalg::partial_trace(full.matrix, out.structure, env_keep);
        out.initial = states::DensityMatrix(linalg::kron(rho_s, tau_e), out.structure);
        break;
      }
      case ExperimentFile::StateKind::kFile: {
        out.initial = io::read_state_csv(exp.state_path);
        if (!(out.initial.structure == out.structure))
          throw ConfigError("state file dimensions do not match the model", 0,
                            "expected " + std::to_string(out.structure.total_dim()) +
                                "-dimensional state");
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("building the initial state failed: ") + e.what(), 0,
                      "check the [state] section");
  }

  // Protocol config.
  try {
    for (const std::string& tok : exp.projection_tokens) {
      out.config.projections.push_back(token_to_state(tok));
      out.config.projection_labels.push_back(tok);
    }
    out.config.standard_state = token_to_state(exp.standard_token);
    out.config.observable = token_to_state(exp.observable_token);
  } catch (const Error& e) {
    throw ConfigError(std::string("bad state token: ") + e.what(), 0,
                      "tokens are +x/-x/+y/-y/+z/-z or re:im,re:im lists");
  }
  out.config.pulse.generator =
      linalg::pauli(exp.pulse_token == "sx" ? 0 : exp.pulse_token == "sy" ? 1 : 2);
  out.config.pulse.angle = exp.pulse_angle;
  out.config.pulse.factor = 0;
  out.config.t1 = protocol::TimeGrid{exp.t1_count, exp.t1_spacing > 0.0 ? exp.t1_spacing : auto_spacing};
  out.config.t2 = protocol::TimeGrid{exp.t2_count, exp.t2_spacing > 0.0 ? exp.t2_spacing : auto_spacing};
  out.config.evolution.hamiltonian = std::move(h);
  out.config.evolution.channels = std::move(channels);
  out.config.evolution.dt = exp.dt;
  out.config.evolution.method = exp.method;
  out.config.workers = exp.workers;
  out.analysis = exp.analysis;

  if (exp.calibration && out.structure.total_dim() != 4)
    throw ConfigError("calibration requires a two-qubit model", 0,
                      "turn calibration off for larger models");
  return out;
}

// ------------------------------ run pipeline ------------------------------

namespace {

std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
            c == '_')
               ? c
               : '_';
  return out;
}

struct DiffStat {
  std::string label;
  double max_abs = 0.0;
  double intensity = 0.0;
  size_t peak_count = 0;
};

struct SingleOutcome {
  protocol::RunDiagnostics diag;
  std::vector<std::string> outputs;  // relative paths inside the run dir
  std::vector<DiffStat> diffs;
  bool null_result = false;
  Json calibration;  // empty when calibration is off
  double protocol_seconds = 0.0;
  double analysis_seconds = 0.0;
};

int env_workers() {
  const char* raw = std::getenv("PREPSY_WORKERS");
  if (!raw) return 0;
  const int v = std::atoi(raw);
  return v > 0 ? v : 0;
}

SingleOutcome execute_single(const ExperimentFile& exp, const Materialized& mat,
                             const std::string& dir) {
  SingleOutcome oc;
  fs::create_directories(dir);

  const auto t_protocol = std::chrono::steady_clock::now();
  const std::vector<protocol::Signal2D> signals =
      stage("protocol", [&] { return protocol::run_prepsy(mat.initial, mat.config, &oc.diag); });
  oc.protocol_seconds = seconds_since(t_protocol);

  auto emit = [&](const std::string& name, auto&& writer) {
    writer((fs::path(dir) / name).string());
    oc.outputs.push_back(name);
  };

  stage("write", [&] {
    if (exp.save_state)
      emit("initial_state.csv",
           [&](const std::string& p) { io::write_state_csv(p, mat.initial); });
    for (const protocol::Signal2D& s : signals)
      emit("signal_" + sanitize(s.label) + ".csv",
           [&](const std::string& p) { io::write_signal_csv(p, s); });
  });

  const auto t_analysis = std::chrono::steady_clock::now();
  const std::vector<protocol::Signal2D> diffs =
      stage("difference", [&] { return protocol::difference_signals(signals); });
  for (const protocol::Signal2D& d : diffs) {
    const std::string tag = sanitize(d.label);
    const spectral::Spectrum2D spectrum =
        stage("analysis", [&] { return spectral::fft2(d, mat.analysis); });
    const std::vector<spectral::Peak> peaks =
        stage("analysis", [&] { return spectral::detect_peaks(spectrum, mat.analysis); });
    DiffStat stat;
    stat.label = d.label;
    stat.max_abs = d.values.cwiseAbs().maxCoeff();
    stat.intensity = spectral::total_intensity(spectrum);
    stat.peak_count = peaks.size();
    oc.diffs.push_back(stat);
    stage("write", [&] {
      emit("diff_" + tag + ".csv", [&](const std::string& p) { io::write_signal_csv(p, d); });
      emit("spectrum_" + tag + ".csv",
           [&](const std::string& p) { io::write_spectrum_csv(p, spectrum); });
      emit("peaks_" + tag + ".csv",
           [&](const std::string& p) { io::write_peaks_csv(p, peaks); });
      if (exp.heatmaps)
        emit("heatmap_" + tag + ".pgm",
             [&](const std::string& p) { io::write_pgm(p, spectrum.magnitude); });
    });
  }
  oc.null_result = std::all_of(oc.diffs.begin(), oc.diffs.end(), [](const DiffStat& s) {
    return s.intensity <= kNullIntensityFloor;
  });

  if (exp.calibration) {
    const spectral::CalibrationLine line = stage("calibration", [&] {
      return spectral::calibrate(mat.config, exp.calibration_beta, exp.calibration_axis,
                                 mat.analysis);
    });
    oc.calibration = Json{
        {"beta", exp.calibration_beta},
        {"axis", std::string(1, "xyz"[exp.calibration_axis])},
        {"thermal_coefficient", line.anchor_coefficient},
        {"thermal_intensity", line.anchor_intensity},
        {"slope", line.slope},
        {"measured_coefficient",
         spectral::measure_correlation(line, oc.diffs.front().intensity)},
    };
  }
  oc.analysis_seconds = seconds_since(t_analysis);
  return oc;
}

Json echo_json(const ExperimentFile& exp) {
  Json j = Json::object();
  for (const auto& [key, value] : exp.echo) j[key] = value;
  return j;
}

Json invariants_json(const protocol::RunDiagnostics& diag) {
  const bool pass = diag.max_trace_drift <= kEvolveTraceTol &&
                    diag.min_eigenvalue >= -kEvolveEigTol &&
                    diag.max_imag_signal <= kImagSignalTol;
  return Json{{"max_trace_drift", diag.max_trace_drift},
              {"min_eigenvalue", diag.min_eigenvalue},
              {"max_imag_signal", diag.max_imag_signal},
              {"trace_tolerance", kEvolveTraceTol},
              {"eigenvalue_tolerance", kEvolveEigTol},
              {"imag_tolerance", kImagSignalTol},
              {"pass", pass}};
}

Json resolved_json(const Materialized& mat) {
  return Json{{"t1_spacing", mat.config.t1.spacing},
              {"t2_spacing", mat.config.t2.spacing},
              {"max_eigen_gap_angular", mat.max_eigen_gap},
              {"hilbert_dimension", mat.structure.total_dim()},
              {"closed_system", mat.config.evolution.closed()},
              {"adiabatic_ok", mat.adiabatic_ok}};
}

Json diffs_json(const SingleOutcome& oc) {
  Json arr = Json::array();
  for (const DiffStat& s : oc.diffs)
    arr.push_back(Json{{"label", s.label},
                       {"max_abs", s.max_abs},
                       {"intensity", s.intensity},
                       {"peak_count", s.peak_count}});
  return arr;
}

void write_manifest(const std::string& dir, const Json& manifest) {
  const std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << manifest.dump(2) << '\n';
  if (!out.flush()) throw Error("write to '" + path + "' failed");
}

void apply_override(ExperimentFile& exp, const std::string& parameter, double value) {
  if (parameter == "state.c_x") exp.c[0] = value;
  else if (parameter == "state.c_y") exp.c[1] = value;
  else if (parameter == "state.c_z") exp.c[2] = value;
  else if (parameter == "state.beta") exp.beta = value;
  else if (parameter == "model.omega_s") exp.toy.omega_s = value;
  else if (parameter == "model.omega_e") exp.toy.omega_e = value;
  else if (parameter == "model.lambda_x") exp.toy.lambda[0][0] = value;
  else if (parameter == "model.lambda_y") exp.toy.lambda[1][1] = value;
  else if (parameter == "model.lambda_z") exp.toy.lambda[2][2] = value;
  else if (parameter == "model.xi") {
    for (Index i = 0; i < exp.nv.n_spins; ++i)
      for (Index j = 0; j < exp.nv.n_spins; ++j)
        if (i != j) exp.nv.xi(i, j) = value;
  } else if (parameter == "model.gamma10") {
    exp.nv.gamma10 = RealVector::Constant(exp.nv.n_spins, value);
  } else if (parameter == "protocol.pulse_angle") {
    exp.pulse_angle = value;
  } else {
    throw ContractError("unsupported sweep parameter '" + parameter + "'");
  }
  for (auto& [key, rendered] : exp.echo)
    if (key == parameter) rendered = io::fmt(value);
}

}  // namespace

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

RunReport run_experiment(const ExperimentFile& exp, const std::string& out_dir,
                         int workers_override) {
  const auto t_total = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  const int workers =
      workers_override > 0 ? workers_override : exp.workers > 0 ? exp.workers : env_workers();

  Json manifest = Json::object();
  manifest["format"] = "prepsy-run-manifest";
  manifest["version"] = kVersion;
  manifest["experiment"] = echo_json(exp);

  RunReport report;

  if (!exp.sweep_parameter) {
    const auto t_mat = std::chrono::steady_clock::now();
    Materialized mat = stage("materialize", [&] { return materialize(exp); });
    const double materialize_seconds = seconds_since(t_mat);
    if (workers > 0) mat.config.workers = workers;
    SingleOutcome oc = execute_single(exp, mat, out_dir);

    manifest["resolved"] = resolved_json(mat);
    manifest["timings_seconds"] = Json{{"materialize", materialize_seconds},
                                       {"protocol", oc.protocol_seconds},
                                       {"analysis", oc.analysis_seconds},
                                       {"total", seconds_since(t_total)}};
    manifest["invariants"] = invariants_json(oc.diag);
    Json results = Json::object();
    results["differences"] = diffs_json(oc);
    results["null_result"] = oc.null_result;
    if (oc.null_result) results["note"] = "null result: no initial correlation detected";
    if (!oc.calibration.empty()) results["calibration"] = oc.calibration;
    manifest["results"] = results;
    oc.outputs.push_back("manifest.json");
    manifest["outputs"] = oc.outputs;
    write_manifest(out_dir, manifest);
    report.null_result = oc.null_result;
    report.invariants_ok = manifest["invariants"]["pass"].get<bool>();
  } else {
    // Parameter sweep: one subdirectory per value, then a merged summary.
    const size_t n_points = exp.sweep_values.size();
    std::vector<ExperimentFile> points(n_points, exp);
    std::vector<Materialized> mats(n_points);
    std::vector<SingleOutcome> outcomes(n_points);
    std::vector<std::string> dirs(n_points);

    const auto t_mat = std::chrono::steady_clock::now();
    for (size_t i = 0; i < n_points; ++i) {
      points[i].sweep_parameter.reset();
      points[i].sweep_values.clear();
      apply_override(points[i], *exp.sweep_parameter, exp.sweep_values[i]);
      char tag[32];
      std::snprintf(tag, sizeof(tag), "sweep_%03zu", i);
      dirs[i] = tag;
      mats[i] = stage("materialize", [&] { return materialize(points[i]); });
    }
    const double materialize_seconds = seconds_since(t_mat);

    const int point_workers =
        static_cast<int>(std::min<size_t>(std::max(workers, 1), n_points));
    for (size_t i = 0; i < n_points; ++i)
      mats[i].config.workers = point_workers > 1 ? 1 : std::max(workers, 1);

    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto run_points = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n_points) break;
        try {
          SingleOutcome oc = execute_single(points[i], mats[i],
                                            (fs::path(out_dir) / dirs[i]).string());
          Json sub = Json::object();
          sub["format"] = "prepsy-run-manifest";
          sub["version"] = kVersion;
          sub["experiment"] = echo_json(points[i]);
          sub["resolved"] = resolved_json(mats[i]);
          sub["timings_seconds"] = Json{{"protocol", oc.protocol_seconds},
                                        {"analysis", oc.analysis_seconds}};
          sub["invariants"] = invariants_json(oc.diag);
          Json results = Json::object();
          results["differences"] = diffs_json(oc);
          results["null_result"] = oc.null_result;
          if (oc.null_result) results["note"] = "null result: no initial correlation detected";
          if (!oc.calibration.empty()) results["calibration"] = oc.calibration;
          sub["results"] = results;
          oc.outputs.push_back("manifest.json");
          sub["outputs"] = oc.outputs;
          write_manifest((fs::path(out_dir) / dirs[i]).string(), sub);
          outcomes[i] = std::move(oc);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          break;
        }
      }
    };
    if (point_workers <= 1) {
      run_points();
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < point_workers; ++w) pool.emplace_back(run_points);
      for (std::thread& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Ordered single-threaded merge.
    protocol::RunDiagnostics merged;
    std::vector<std::string> outputs;
    double protocol_seconds = 0.0, analysis_seconds = 0.0;
    bool all_null = true;
    Json sweep = Json::object();
    sweep["parameter"] = *exp.sweep_parameter;
    Json rows = Json::array();
    double sum_fv = 0.0, sum_vv = 0.0;
    std::vector<std::pair<double, double>> line_points;  // (|value|, intensity)
    for (size_t i = 0; i < n_points; ++i) {
      const SingleOutcome& oc = outcomes[i];
      merged.max_trace_drift = std::max(merged.max_trace_drift, oc.diag.max_trace_drift);
      merged.min_eigenvalue = std::min(merged.min_eigenvalue, oc.diag.min_eigenvalue);
      merged.max_imag_signal = std::max(merged.max_imag_signal, oc.diag.max_imag_signal);
      protocol_seconds += oc.protocol_seconds;
      analysis_seconds += oc.analysis_seconds;
      all_null = all_null && oc.null_result;
      for (const std::string& rel : oc.outputs) outputs.push_back(dirs[i] + "/" + rel);
      const double value = exp.sweep_values[i];
      const double intensity = oc.diffs.front().intensity;
      rows.push_back(Json{{"value", value},
                          {"directory", dirs[i]},
                          {"intensity", intensity},
                          {"null_result", oc.null_result}});
      sum_fv += intensity * std::abs(value);
      sum_vv += value * value;
      line_points.emplace_back(std::abs(value), intensity);
    }
    sweep["points"] = rows;

    // Fit intensity = slope * |value| through the origin; report the fit.
    if (n_points >= 2 && sum_vv > 0.0) {
      const double slope = sum_fv / sum_vv;
      double max_residual = 0.0, max_intensity = 0.0;
      for (const auto& [absv, intensity] : line_points) {
        max_residual = std::max(max_residual, std::abs(intensity - slope * absv));
        max_intensity = std::max(max_intensity, intensity);
      }
      sweep["fit"] = Json{
          {"slope", slope},
          {"max_residual", max_residual},
          {"max_residual_relative", max_intensity > 0.0 ? max_residual / max_intensity : 0.0}};
    }

    // Summary CSV: one row per point, deterministic.
    stage("write", [&] {
      const std::string path = (fs::path(out_dir) / "sweep_summary.csv").string();
      std::ofstream out(path);
      if (!out) throw Error("cannot write '" + path + "'");
      out << "value,intensity,max_abs,peak_count,null_result\n";
      for (size_t i = 0; i < n_points; ++i) {
        const DiffStat& s = outcomes[i].diffs.front();
        out << io::fmt(exp.sweep_values[i]) << ',' << io::fmt(s.intensity) << ','
            << io::fmt(s.max_abs) << ',' << s.peak_count << ','
            << (outcomes[i].null_result ? "1" : "0") << '\n';
      }
      if (!out.flush()) throw Error("write to '" + path + "' failed");
    });
    outputs.push_back("sweep_summary.csv");
    outputs.push_back("manifest.json");

    manifest["timings_seconds"] = Json{{"materialize", materialize_seconds},
                                       {"protocol", protocol_seconds},
                                       {"analysis", analysis_seconds},
                                       {"total", seconds_since(t_total)}};
    manifest["invariants"] = invariants_json(merged);
    manifest["sweep"] = sweep;
    Json results = Json::object();
    results["null_result"] = all_null;
    if (all_null) results["note"] = "null result: no initial correlation detected";
    manifest["results"] = results;
    manifest["outputs"] = outputs;
    write_manifest(out_dir, manifest);
    report.null_result = all_null;
    report.invariants_ok = manifest["invariants"]["pass"].get<bool>();
  }

  report.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  if (!report.invariants_ok)
    throw NumericalFailure("run completed but invariants exceed tolerances (see manifest)", 0.0,
                           0.0);
  return report;
}

VerifyReport verify_run(const std::string& out_dir) {
  VerifyReport report;
  auto add = [&report](const std::string& name, bool pass, const std::string& detail) {
    report.checks.push_back(VerifyCheck{name, pass, detail});
  };

  const fs::path manifest_path = fs::path(out_dir) / "manifest.json";
  Json manifest;
  try {
    std::ifstream in(manifest_path);
    if (!in) throw Error("missing manifest.json");
    manifest = Json::parse(in);
  } catch (const std::exception& e) {
    add("manifest readable", false, e.what());
    return report;
  }
  add("manifest readable", true, manifest_path.string());
  add("manifest format", manifest.value("format", "") == "prepsy-run-manifest",
      manifest.value("format", "(none)"));

  // Inventory: every listed output exists and is nonempty.
  size_t missing = 0;
  std::string first_missing;
  size_t listed = 0;
  if (manifest.contains("outputs") && manifest["outputs"].is_array()) {
    for (const auto& entry : manifest["outputs"]) {
      ++listed;
      const fs::path p = fs::path(out_dir) / entry.get<std::string>();
      std::error_code ec;
      if (!fs::is_regular_file(p, ec) || fs::file_size(p, ec) == 0) {
        ++missing;
        if (first_missing.empty()) first_missing = entry.get<std::string>();
      }
    }
    add("output inventory (" + std::to_string(listed) + " files)", missing == 0,
        missing == 0 ? "all present" : std::to_string(missing) + " missing, first: " + first_missing);
  } else {
    add("output inventory", false, "manifest lists no outputs");
  }

  // Invariant summary within tolerance.
  if (manifest.contains("invariants")) {
    const Json& inv = manifest["invariants"];
    const double drift = inv.value("max_trace_drift", 1.0);
    const double mineig = inv.value("min_eigenvalue", -1.0);
    const double imag = inv.value("max_imag_signal", 1.0);
    const double trace_tol = inv.value("trace_tolerance", kEvolveTraceTol);
    const double eig_tol = inv.value("eigenvalue_tolerance", kEvolveEigTol);
    const double imag_tol = inv.value("imag_tolerance", kImagSignalTol);
    add("trace drift <= " + io::fmt(trace_tol), drift <= trace_tol, io::fmt(drift));
    add("min eigenvalue >= -" + io::fmt(eig_tol), mineig >= -eig_tol, io::fmt(mineig));
    add("imaginary residue <= " + io::fmt(imag_tol), imag <= imag_tol, io::fmt(imag));
    add("invariants flagged pass", inv.value("pass", false), "");
  } else {
    add("invariant summary present", false, "manifest has no invariants object");
  }

  // Null-result flag consistent with the recorded intensities.
  if (manifest.contains("results") && manifest["results"].contains("null_result") &&
      manifest["results"].contains("differences")) {
    const bool declared = manifest["results"]["null_result"].get<bool>();
    bool computed = true;
    for (const auto& d : manifest["results"]["differences"])
      computed = computed && d.value("intensity", 1.0) <= kNullIntensityFloor;
    add("null-result flag consistent", declared == computed,
        declared ? "declared null" : "declared non-null");
  }
  return report;
}

}  // namespace prepsy::experiment
