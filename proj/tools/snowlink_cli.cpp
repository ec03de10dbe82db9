#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "snowlink/errors.hpp"
#include "snowlink/estimators.hpp"
#include "snowlink/experiment.hpp"
#include "snowlink/json_io.hpp"
#include "snowlink/simulator.hpp"
#include "snowlink/variance.hpp"

using namespace snowlink;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kIoError = 3, kEstimationError = 4 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return kIoError;
    case ErrorKind::ParseError:
    case ErrorKind::ConfigError:
    case ErrorKind::InvariantViolation:
    case ErrorKind::DimensionMismatch: return kConfigError;
    default: return kEstimationError;
  }
}

// a bare model spec applies to both sub-populations
std::pair<ModelSpec, ModelSpec> read_models(const std::string& path, int n) {
  const json doc = read_json_file(path);
  if (doc.contains("model1") || doc.contains("model2")) {
    return {model_spec_from_json(doc.at("model1"), n), model_spec_from_json(doc.at("model2"), n)};
  }
  const auto spec = model_spec_from_json(doc, n);
  return {spec, spec};
}

LinkParams read_theta(const std::string& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.is_array()) return doc.get<LinkParams>();
    return doc.at("theta").get<LinkParams>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, path + ": " + e.what());
  }
}

std::pair<int, std::int64_t> parse_design(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) fail(ErrorKind::ConfigError, "--design expects n,N");
  try {
    return {std::stoi(text.substr(0, comma)), std::stoll(text.substr(comma + 1))};
  } catch (const std::exception&) {
    fail(ErrorKind::ConfigError, "--design expects integers n,N");
  }
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out,
                 const std::string& truth_path) {
  const json doc = read_json_file(config_path);
  const auto cfg = population_from_json(doc.contains("population") ? doc.at("population") : doc);
  const auto sim = draw_sample(cfg, seed);
  save_sample(sim.data, out);
  if (!truth_path.empty()) write_json_file(truth_path, ground_truth_to_json(sim.truth));
  return kOk;
}

int cmd_estimate(const std::string& data_path, const std::string& model_path, const std::string& method_text,
                 const std::string& out, const std::string& source_text, double level) {
  const auto data = load_sample(data_path);
  const auto [spec1, spec2] = read_models(model_path, data.sites());
  const auto model1 = make_model(spec1);
  const auto model2 = make_model(spec2);
  const Method method = parse_method(method_text);
  const VarianceSource source = parse_variance_source(source_text);

  const auto est = fit_total(data, *model1, *model2, method);
  json report = estimate_report_to_json(est);
  report["model1"] = model_spec_to_json(spec1);
  report["model2"] = model_spec_to_json(spec2);
  try {
    report["variance"] = variance_report_to_json(variance_report(est, data, *model1, *model2, source, level));
  } catch (const Error& e) {
    report["variance_error"] = e.what();
  }
  write_json_file(out, report);
  return kOk;
}

int cmd_matrices(const std::string& model_path, const std::string& theta_path, const std::string& design,
                 const std::string& which_text, const std::string& out) {
  const auto [n, N] = parse_design(design);
  const auto spec = model_spec_from_json(read_json_file(model_path), n);
  if (spec.n != n) fail(ErrorKind::ConfigError, "model n differs from --design n");
  const auto model = make_model(spec);
  const auto theta = read_theta(theta_path);
  model->check_params(theta);
  AsymptoticMatrices m;
  switch (parse_matrix_kind(which_text)) {
    case MatrixKind::Sigma1: m = sigma1_inverse(theta, *model, n, N); break;
    case MatrixKind::Psi1: m = psi1_inverse(theta, *model, n, N); break;
    case MatrixKind::Sigma2: m = sigma2_inverse(theta, *model); break;
  }
  write_json_file(out, matrices_to_json(m));
  return kOk;
}

int cmd_experiment(const std::string& config_path, int workers, const std::string& out_dir) {
  auto cfg = load_experiment_config(config_path);
  if (workers > 0) cfg.workers = workers;
  if (!out_dir.empty()) cfg.outputs.dir = out_dir;
  const auto summary = run_experiment(cfg);
  emit_reports(summary, cfg.outputs);
  std::cout << digest_text(summary);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snowlink: population size estimation from cluster and link-tracing samples"};
  app.require_subcommand(1);

  std::string config, out, truth, data, model, method = "umle", theta, design, which, out_dir;
  std::string source = "analytic";
  std::uint64_t seed = 0;
  double level = 0.95;
  int workers = 0;

  auto* sim = app.add_subcommand("simulate", "draw one sample from a population config");
  sim->add_option("--config", config, "population config (JSON)")->required();
  sim->add_option("--seed", seed, "RNG seed")->required();
  sim->add_option("--out", out, "sample output (JSON)")->required();
  sim->add_option("--truth", truth, "ground truth output (JSON)");

  auto* est = app.add_subcommand("estimate", "fit UMLE or CMLE to a sample");
  est->add_option("--data", data, "sample (JSON)")->required();
  est->add_option("--model", model, "model spec, or {model1, model2}")->required();
  est->add_option("--method", method, "umle | cmle")->check(CLI::IsMember({"umle", "cmle"}));
  est->add_option("--out", out, "report output (JSON)")->required();
  est->add_option("--variance", source, "analytic | empirical_v")->check(CLI::IsMember({"analytic", "empirical_v"}));
  est->add_option("--level", level, "interval level");

  auto* mat = app.add_subcommand("matrices", "asymptotic matrices at a given theta");
  mat->add_option("--model", model, "model spec (JSON)")->required();
  mat->add_option("--theta", theta, "theta (JSON array or {theta: [...]})")->required();
  mat->add_option("--design", design, "n,N")->required();
  mat->add_option("--which", which, "sigma1 | psi1 | sigma2")->required()->check(CLI::IsMember({"sigma1", "psi1", "sigma2"}));
  mat->add_option("--out", out, "matrix output (JSON)")->required();

  auto* exp = app.add_subcommand("experiment", "Monte Carlo experiment");
  exp->add_option("--config", config, "experiment config (JSON)")->required();
  exp->add_option("--workers", workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  exp->add_option("--out-dir", out_dir, "output directory (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(config, seed, out, truth);
    if (*est) return cmd_estimate(data, model, method, out, source, level);
    if (*mat) return cmd_matrices(model, theta, design, which, out);
    if (*exp) return cmd_experiment(config, workers, out_dir);
  } catch (const Error& e) {
    std::cerr << "snowlink: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "snowlink: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
