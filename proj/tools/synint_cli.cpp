#include "synint/diagnostics.hpp"
#include "synint/estimators.hpp"
#include "synint/evaluation.hpp"
#include "synint/io.hpp"
#include "synint/random.hpp"
#include "synint/scm_sim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace synint;
using io::Json;

namespace {

constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string input;
  std::string output = ".";
  std::string format;
  std::string estimator = "si_a_fallback";
  double rho = kDefaultRho;
  double energy = kDefaultTestEnergy;
  std::optional<double> denoise;
  double lambda_c = 0.5;
  std::string reference_action;
  int tandem_rounds = 0;
  double tandem_tol = 1e-6;
  std::uint64_t seed = 0;
  std::string donor_strategy = "full";

  // simulate
  std::size_t contexts = 10;
  std::size_t actions = 12;
  Index p = 20;
  Index r = 4;
  double density = 0.7;
  std::string kind = "identifiable";
  double noise_sigma = 0.0;
  std::string noise_kind = "additive";

  // evaluate
  std::vector<std::size_t> sweep_donors;
  std::vector<std::size_t> sweep_training;
  std::size_t sweep_repeats = 5;
};

EstimatorConfig estimator_config(const RunConfig& run) {
  EstimatorConfig config;
  config.rho = run.rho;
  config.energy = run.energy;
  config.denoise = run.denoise;
  config.lambda_c = run.lambda_c;
  if (!run.reference_action.empty()) config.reference_action = run.reference_action;
  config.donor_strategy = parse_donor_strategy(run.donor_strategy);
  config.validate();
  return config;
}

ObservationTensor load_input(const RunConfig& run) {
  if (run.input.empty()) throw UsageError("--input is required");
  return run.format.empty() ? io::ingest(run.input) : io::ingest(run.input, io::parse_format(run.format));
}

void write_json(const fs::path& path, const Json& json) { io::write_text(path, json.dump(2) + "\n"); }

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

int run_impute(const RunConfig& run) {
  const auto tensor = load_input(run);
  const auto config = estimator_config(run);
  const fs::path out = run.output;
  Json doc{{"estimator", run.estimator}};

  std::map<Pair, Vector> predictions;
  if (run.tandem_rounds > 0) {
    const auto result = tandem_impute(tensor, run.tandem_rounds, run.tandem_tol, config);
    for (const auto& pair : result.synthetic) predictions[pair] = result.completed.at(pair.context, pair.action);
    doc["estimator"] = "tandem";
    doc["tandem"] = io::to_json(result);
  } else {
    Json reports = Json::array(), skipped = Json::array();
    for (const auto& c : tensor.contexts()) {
      for (const auto& a : tensor.actions()) {
        if (tensor.contains(c, a)) continue;
        try {
          auto report = impute(tensor, c, a, run.estimator, config);
          predictions[report.target] = report.prediction;
          reports.push_back(io::to_json(report));
        } catch (const Error& e) {
          skipped.push_back(Json{{"context", c}, {"action", a}, {"kind", std::string(to_string(e.kind()))},
                                 {"reason", e.what()}});
        }
      }
    }
    doc["reports"] = std::move(reports);
    doc["skipped"] = std::move(skipped);
  }
  write_json(out / "reports.json", doc);
  std::ostringstream csv;
  io::write_long_csv(csv, tensor.dim(), predictions);
  io::write_text(out / "predictions.csv", csv.str());
  return 0;
}

int run_evaluate(const RunConfig& run) {
  const auto tensor = load_input(run);
  const auto config = estimator_config(run);
  const fs::path out = run.output;
  const auto result = loo_evaluate(tensor, run.estimator, config);
  write_json(out / "loo.json", io::to_json(result));

  std::ostringstream csv;
  csv << "estimator,count,median_r2,mean_r2,median_rmse,mean_rmse\n";
  const auto row = [&](const std::string& name, const LooSummary& s) {
    csv << name << ',' << s.count << ',' << format_real(s.median_r2) << ',' << format_real(s.mean_r2) << ','
        << format_real(s.median_rmse) << ',' << format_real(s.mean_rmse) << '\n';
  };
  row(result.estimator, result.summary);
  for (const auto& [name, s] : result.by_estimator_used)
    if (name != result.estimator) row(result.estimator + ":" + name, s);
  io::write_text(out / "summary.csv", csv.str());

  if (!run.sweep_donors.empty() || !run.sweep_training.empty()) {
    if (run.sweep_donors.empty() || run.sweep_training.empty())
      throw UsageError("--sweep-donors and --sweep-training go together");
    const auto grid = donor_sweep(tensor, run.sweep_donors, run.sweep_training, run.sweep_repeats, run.seed, config);
    write_json(out / "sweep.json", io::to_json(grid));
  }
  return 0;
}

int run_simulate(const RunConfig& run) {
  Instance instance;
  const InstanceSizes sizes{run.contexts, run.actions, run.p, run.r};
  if (run.kind == "identifiable") {
    instance = random_identifiable_instance(run.contexts, run.actions, run.p, run.r, run.density, run.seed);
  } else if (run.kind == "assumption2") {
    instance = violating_instance(Violation::Assumption2, sizes, run.seed);
  } else if (run.kind == "assumption3") {
    instance = violating_instance(Violation::Assumption3, sizes, run.seed);
  } else {
    throw UsageError("unknown instance kind '" + run.kind + "'");
  }
  std::optional<NoiseModel> noise;
  if (run.noise_sigma > 0.0) {
    NoiseModel model;
    model.kind = run.noise_kind == "multiplicative" ? NoiseKind::Multiplicative : NoiseKind::Additive;
    model.sigma = run.noise_sigma;
    model.seed = split_seed(run.seed, 1);
    noise = model;
  }
  const auto generated = generate_tensor(scm_to_factor(instance.scm), instance.sparsity, noise);
  const fs::path out = run.output;
  write_json(out / "ground_truth.json", io::instance_to_json(instance, generated, noise));
  io::export_tensor(out / "observed.csv", generated.observed, io::Format::LongCsv);
  return 0;
}

int run_diagnose(const RunConfig& run) {
  const auto tensor = load_input(run);
  const auto config = estimator_config(run);
  const fs::path out = run.output;
  write_json(out / "spectrum.json", io::to_json(spectrum_report(tensor)));

  Json tests = Json::array();
  for (const auto& c : tensor.contexts()) {
    for (const auto& a : tensor.actions()) {
      Json entry{{"context", c}, {"action", a}, {"observed", tensor.contains(c, a)}};
      try {
        DonorSelection selection;
        switch (config.donor_strategy) {
          case DonorStrategy::Greedy:
            selection = greedy_donor_selection(tensor, c, a, config.rho, config.energy);
            break;
          case DonorStrategy::Exhaustive:
            selection = exhaustive_donor_selection(tensor, c, a, config.rho, config.energy,
                                                   config.max_exhaustive_actions);
            break;
          case DonorStrategy::Full: {
            auto donors = tensor.actions_of(c);
            std::erase(donors, a);
            selection = evaluate_donor_set(tensor, c, a, donors, config.rho, config.energy);
            break;
          }
        }
        entry["selection"] = io::to_json(selection);
      } catch (const Error& e) {
        entry["kind"] = std::string(to_string(e.kind()));
        entry["skip_reason"] = e.what();
      }
      tests.push_back(std::move(entry));
    }
  }
  write_json(out / "subspace_tests.json", tests);
  return 0;
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << Json{{"error", Json{{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

void common_flags(CLI::App* cmd, RunConfig& run, bool needs_input) {
  auto* input = cmd->add_option("--input", run.input, "Observation tensor (long CSV or JSON)");
  if (needs_input) input->required();
  cmd->add_option("--output", run.output, "Output directory")->capture_default_str();
  cmd->add_option("--format", run.format, "Input format")->check(CLI::IsMember({"long-csv", "json"}));
  cmd->add_option("--estimator", run.estimator, "Estimator name")
      ->check(CLI::IsMember(estimator_names()))
      ->capture_default_str();
  cmd->add_option("--rho", run.rho, "Subspace test threshold")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  cmd->add_option("--energy", run.energy, "Spectral energy for the subspace test")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--denoise", run.denoise, "HSVT energy applied before regression")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--lambda-c", run.lambda_c, "two_way weight on the context mean")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--reference-action", run.reference_action, "Reference action for fixed_action_effect");
  cmd->add_option("--tandem-rounds", run.tandem_rounds, "Run tandem SI-A/SI-C completion for this many rounds")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tandem-tol", run.tandem_tol, "Tandem convergence tolerance")->capture_default_str();
  cmd->add_option("--seed", run.seed, "Root seed")->capture_default_str();
  cmd->add_option("--donor-strategy", run.donor_strategy, "Donor selection")
      ->check(CLI::IsMember({"full", "greedy", "exhaustive"}))
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-interventions imputation for context x action outcome tensors"};
  app.require_subcommand(1);
  RunConfig run;

  auto* impute_cmd = app.add_subcommand("impute", "Impute every unobserved pair");
  common_flags(impute_cmd, run, true);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Leave-one-out evaluation");
  common_flags(evaluate_cmd, run, true);
  evaluate_cmd->add_option("--sweep-donors", run.sweep_donors, "Donor counts for the sweep")->delimiter(',');
  evaluate_cmd->add_option("--sweep-training", run.sweep_training, "Training-context counts for the sweep")
      ->delimiter(',');
  evaluate_cmd->add_option("--sweep-repeats", run.sweep_repeats, "Draws per sweep cell")->capture_default_str();

  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a linear-SCM instance");
  common_flags(simulate_cmd, run, false);
  simulate_cmd->add_option("--contexts", run.contexts)->capture_default_str();
  simulate_cmd->add_option("--actions", run.actions)->capture_default_str();
  simulate_cmd->add_option("--p", run.p)->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--r", run.r)->check(CLI::PositiveNumber)->capture_default_str();
  simulate_cmd->add_option("--density", run.density)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  simulate_cmd->add_option("--kind", run.kind)
      ->check(CLI::IsMember({"identifiable", "assumption2", "assumption3"}))
      ->capture_default_str();
  simulate_cmd->add_option("--noise-sigma", run.noise_sigma)->check(CLI::NonNegativeNumber)->capture_default_str();
  simulate_cmd->add_option("--noise-kind", run.noise_kind)
      ->check(CLI::IsMember({"additive", "multiplicative"}))
      ->capture_default_str();

  auto* diagnose_cmd = app.add_subcommand("diagnose", "Spectrum and per-pair subspace tests");
  common_flags(diagnose_cmd, run, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kUsageError;
  }

  try {
    if (*impute_cmd) return run_impute(run);
    if (*evaluate_cmd) return run_evaluate(run);
    if (*simulate_cmd) return run_simulate(run);
    return run_diagnose(run);
  } catch (const UsageError& e) {
    print_error("usage", e.what());
    return kUsageError;
  } catch (const Error& e) {
    const bool usage = e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::UnknownEstimator;
    print_error(std::string(to_string(e.kind())), e.what());
    return usage ? kUsageError : kRuntimeError;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kRuntimeError;
  }
}
