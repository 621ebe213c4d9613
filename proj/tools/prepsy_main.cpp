#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "prepsy/experiment.hpp"
#include "prepsy/io.hpp"
#include "prepsy/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitConfig = 2;

int report_error(const std::exception& e) {
  if (const auto* config = dynamic_cast<const prepsy::ConfigError*>(&e)) {
    std::fprintf(stderr, "configuration error: %s\n", config->what());
    if (!config->hint.empty()) std::fprintf(stderr, "  hint: %s\n", config->hint.c_str());
    return kExitConfig;
  }
  std::fprintf(stderr, "error: %s\n", e.what());
  return kExitInvariant;
}

int do_run(const std::string& file, const std::string& out_dir, int workers) {
  const prepsy::experiment::ExperimentFile exp = prepsy::experiment::parse_experiment(file);
  const prepsy::experiment::RunReport report =
      prepsy::experiment::run_experiment(exp, out_dir, workers);
  std::printf("run complete: %s\n", report.manifest_path.c_str());
  if (report.null_result) std::printf("null result: no initial correlation detected\n");
  return kExitOk;
}

int do_verify(const std::string& dir) {
  const prepsy::experiment::VerifyReport report = prepsy::experiment::verify_run(dir);
  for (const prepsy::experiment::VerifyCheck& check : report.checks)
    std::printf("[%s] %-40s %s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                check.detail.c_str());
  std::printf("%s\n", report.ok() ? "verification passed" : "verification FAILED");
  return report.ok() ? kExitOk : kExitInvariant;
}

int do_describe(const std::string& file) {
  const prepsy::experiment::ExperimentFile exp = prepsy::experiment::parse_experiment(file);
  for (const auto& [key, value] : exp.echo) std::printf("%s = %s\n", key.c_str(), value.c_str());
  const prepsy::experiment::Materialized mat = prepsy::experiment::materialize(exp);
  std::printf("resolved.t1_spacing = %s\n", prepsy::io::fmt(mat.config.t1.spacing).c_str());
  std::printf("resolved.t2_spacing = %s\n", prepsy::io::fmt(mat.config.t2.spacing).c_str());
  std::printf("resolved.max_eigen_gap_angular = %s\n",
              prepsy::io::fmt(mat.max_eigen_gap).c_str());
  std::printf("resolved.hilbert_dimension = %lld\n",
              static_cast<long long>(mat.structure.total_dim()));
  std::printf("resolved.closed_system = %s\n", mat.config.evolution.closed() ? "yes" : "no");
  std::printf("resolved.adiabatic_ok = %s\n", mat.adiabatic_ok ? "yes" : "no");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("prepsy ") + prepsy::kVersion +
               " - prepare-probe spectroscopy batch runner"};
  app.require_subcommand(1);

  std::string run_file, run_out;
  int run_workers = 0;
  CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment file");
  run_cmd->add_option("file", run_file, "experiment file")->required();
  run_cmd->add_option("--out", run_out, "output directory")->required();
  run_cmd->add_option("--workers", run_workers,
                      "worker threads (default: PREPSY_WORKERS or hardware)");

  std::string verify_dir;
  CLI::App* verify_cmd = app.add_subcommand("verify", "re-check a completed run directory");
  verify_cmd->add_option("dir", verify_dir, "run directory")->required();

  std::string describe_file;
  CLI::App* describe_cmd =
      app.add_subcommand("describe", "echo the resolved configuration of an experiment file");
  describe_cmd->add_option("file", describe_file, "experiment file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return do_run(run_file, run_out, run_workers);
    if (verify_cmd->parsed()) return do_verify(verify_dir);
    if (describe_cmd->parsed()) return do_describe(describe_file);
  } catch (const std::exception& e) {
    return report_error(e);
  }
  return kExitConfig;
}
