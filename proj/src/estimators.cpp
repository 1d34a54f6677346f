#include "synint/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace synint {

std::string_view to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::MeanOverActions: return "mean_over_actions";
    case Baseline::MeanOverContexts: return "mean_over_contexts";
    case Baseline::TwoWay: return "two_way";
    case Baseline::FixedActionEffect: return "fixed_action_effect";
  }
  return "mean_over_actions";
}

Baseline parse_baseline(std::string_view name) {
  if (name == "mean_over_actions") return Baseline::MeanOverActions;
  if (name == "mean_over_contexts") return Baseline::MeanOverContexts;
  if (name == "two_way") return Baseline::TwoWay;
  if (name == "fixed_action_effect") return Baseline::FixedActionEffect;
  throw Error(ErrorKind::UnknownEstimator, "unknown baseline '" + std::string(name) + "'");
}

void EstimatorConfig::validate() const {
  const auto fraction = [](double v) { return v > 0.0 && v <= 1.0; };
  if (denoise && !fraction(*denoise)) throw Error(ErrorKind::InvalidArgument, "denoise energy must lie in (0,1]");
  if (!(rcond > 0.0 && rcond < 1.0)) throw Error(ErrorKind::InvalidArgument, "rcond must lie in (0,1)");
  if (!fraction(rho)) throw Error(ErrorKind::InvalidArgument, "rho must lie in (0,1]");
  if (!fraction(energy)) throw Error(ErrorKind::InvalidArgument, "energy must lie in (0,1]");
  if (!(lambda_c >= 0.0 && lambda_c <= 1.0)) throw Error(ErrorKind::InvalidArgument, "lambda_c must lie in [0,1]");
}

namespace {

void require_pair(const ObservationTensor& tensor, const ContextId& context, const ActionId& action) {
  if (!tensor.has_context(context)) throw Error(ErrorKind::UnknownContext, "unknown context '" + context + "'");
  if (!tensor.has_action(action)) throw Error(ErrorKind::UnknownAction, "unknown action '" + action + "'");
}

std::vector<std::string> without(std::vector<std::string> ids, const std::string& drop) {
  std::erase(ids, drop);
  return ids;
}

std::vector<std::string> restrict_to(const std::vector<std::string>& requested,
                                     const std::vector<std::string>& available, const char* what) {
  auto chosen = canonical(requested);
  for (const auto& id : chosen) {
    if (!std::binary_search(available.begin(), available.end(), id)) {
      throw Error(ErrorKind::InvalidArgument, std::string(what) + " '" + id + "' is not available");
    }
  }
  return chosen;
}

// Shared regression step once the design matrices are stacked.
void fit_and_predict(RegressionArtifacts& art, ImputationReport& report, const EstimatorConfig& config) {
  if (config.denoise) {
    art.x_train = linalg::hsvt(art.x_train, *config.denoise);
    art.x_test = linalg::hsvt(art.x_test, *config.denoise);
  }
  auto solution = linalg::pseudoinverse_solve(art.x_train, art.y_train, config.rcond);
  art.beta = std::move(solution.weights);
  art.rank = solution.rank;
  art.degenerate = solution.degenerate;
  report.prediction = art.x_test * art.beta;
}

}  // namespace

ImputationReport si_a(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                      const EstimatorConfig& config, const DesignOverride& design) {
  config.validate();
  require_pair(tensor, context, action);

  const auto available = without(tensor.actions_of(context), action);
  auto donors = design.donors ? restrict_to(*design.donors, available, "donor action") : available;
  if (donors.empty()) {
    throw Error(ErrorKind::EmptyDonors, "no donor actions for (" + context + ", " + action + ")");
  }

  auto with_target = donors;
  with_target.push_back(action);
  const auto induced = without(tensor.contexts_of_all(with_target), context);
  auto training = design.training ? restrict_to(*design.training, induced, "training context") : induced;
  if (training.empty()) {
    throw Error(ErrorKind::EmptyTraining, "no training contexts for (" + context + ", " + action + ")");
  }

  RegressionArtifacts art;
  art.axis = RegressionAxis::Actions;
  art.x_train = tensor.stack_training(training, donors);
  const ActionId target_action[] = {action};
  art.y_train = tensor.stack_training(training, target_action).col(0);
  const ContextId target_context[] = {context};
  art.x_test = tensor.stack_training(target_context, donors);
  art.donors = std::move(donors);
  art.training = std::move(training);

  ImputationReport report;
  report.target = Pair{context, action};
  report.estimator_used = "si_a";
  fit_and_predict(art, report, config);
  report.artifacts = std::move(art);
  return report;
}

ImputationReport si_c(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                      const EstimatorConfig& config, const DesignOverride& design) {
  config.validate();
  require_pair(tensor, context, action);

  const auto available = without(tensor.contexts_of(action), context);
  auto donors = design.donors ? restrict_to(*design.donors, available, "donor context") : available;
  if (donors.empty()) {
    throw Error(ErrorKind::EmptyDonors, "no donor contexts for (" + context + ", " + action + ")");
  }

  auto with_target = donors;
  with_target.push_back(context);
  const auto induced = without(tensor.actions_of_all(with_target), action);
  auto training = design.training ? restrict_to(*design.training, induced, "training action") : induced;
  if (training.empty()) {
    throw Error(ErrorKind::EmptyTraining, "no training actions for (" + context + ", " + action + ")");
  }

  RegressionArtifacts art;
  art.axis = RegressionAxis::Contexts;
  art.x_train = tensor.stack_training_by_action(training, donors);
  const ContextId target_context[] = {context};
  art.y_train = tensor.stack_training_by_action(training, target_context).col(0);
  const ActionId target_action[] = {action};
  art.x_test = tensor.stack_training_by_action(target_action, donors);
  art.donors = std::move(donors);
  art.training = std::move(training);

  ImputationReport report;
  report.target = Pair{context, action};
  report.estimator_used = "si_c";
  fit_and_predict(art, report, config);
  report.artifacts = std::move(art);
  return report;
}

Vector mean_over_actions(const ObservationTensor& tensor, const ContextId& context, const ActionId& action) {
  require_pair(tensor, context, action);
  const auto others = without(tensor.actions_of(context), action);
  if (others.empty()) {
    throw Error(ErrorKind::EmptyAveragingSet, "context '" + context + "' has no other observed actions");
  }
  Vector sum = Vector::Zero(tensor.dim());
  for (const auto& j : others) sum += tensor.at(context, j);
  return sum / static_cast<double>(others.size());
}

Vector mean_over_contexts(const ObservationTensor& tensor, const ContextId& context, const ActionId& action) {
  require_pair(tensor, context, action);
  const auto others = without(tensor.contexts_of(action), context);
  if (others.empty()) {
    throw Error(ErrorKind::EmptyAveragingSet, "action '" + action + "' has no other observed contexts");
  }
  Vector sum = Vector::Zero(tensor.dim());
  for (const auto& i : others) sum += tensor.at(i, action);
  return sum / static_cast<double>(others.size());
}

Vector two_way_mean(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                    double lambda_c) {
  if (!(lambda_c >= 0.0 && lambda_c <= 1.0)) throw Error(ErrorKind::InvalidArgument, "lambda_c must lie in [0,1]");
  return lambda_c * mean_over_contexts(tensor, context, action) +
         (1.0 - lambda_c) * mean_over_actions(tensor, context, action);
}

Vector fixed_action_effect(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                           const ActionId& reference_action) {
  require_pair(tensor, context, action);
  if (!tensor.has_action(reference_action)) {
    throw Error(ErrorKind::UnknownAction, "unknown reference action '" + reference_action + "'");
  }
  if (!tensor.contains(context, reference_action)) {
    throw Error(ErrorKind::ReferenceUnobserved,
                "reference action '" + reference_action + "' not observed for '" + context + "'");
  }
  const Vector& base = tensor.at(context, reference_action);
  if (action == reference_action) return base;

  const ActionId both[] = {action, reference_action};
  const auto shared = without(tensor.contexts_of_all(both), context);
  if (shared.empty()) {
    throw Error(ErrorKind::EmptyAveragingSet,
                "no context observes both '" + action + "' and '" + reference_action + "'");
  }
  Vector shift = Vector::Zero(tensor.dim());
  for (const auto& i : shared) shift += tensor.at(i, action) - tensor.at(i, reference_action);
  return base + shift / static_cast<double>(shared.size());
}

ImputationReport run_baseline(const ObservationTensor& tensor, const ContextId& context,
                              const ActionId& action, Baseline baseline, const EstimatorConfig& config) {
  ImputationReport report;
  report.target = Pair{context, action};
  report.estimator_used = std::string(to_string(baseline));
  switch (baseline) {
    case Baseline::MeanOverActions:
      report.prediction = mean_over_actions(tensor, context, action);
      break;
    case Baseline::MeanOverContexts:
      report.prediction = mean_over_contexts(tensor, context, action);
      break;
    case Baseline::TwoWay:
      report.prediction = two_way_mean(tensor, context, action, config.lambda_c);
      break;
    case Baseline::FixedActionEffect:
      if (!config.reference_action) {
        throw Error(ErrorKind::InvalidArgument, "fixed_action_effect needs a reference action");
      }
      report.prediction = fixed_action_effect(tensor, context, action, *config.reference_action);
      break;
  }
  return report;
}

ImputationReport impute_with_fallback(const ObservationTensor& tensor, const ContextId& context,
                                      const ActionId& action, const EstimatorConfig& config) {
  config.validate();
  require_pair(tensor, context, action);

  std::optional<SubspaceTestReport> test;
  std::string reason;
  try {
    DonorSelection selection;
    switch (config.donor_strategy) {
      case DonorStrategy::Full:
        selection = evaluate_donor_set(tensor, context, action, without(tensor.actions_of(context), action),
                                       config.rho, config.energy);
        break;
      case DonorStrategy::Greedy:
        selection = greedy_donor_selection(tensor, context, action, config.rho, config.energy);
        break;
      case DonorStrategy::Exhaustive:
        selection = exhaustive_donor_selection(tensor, context, action, config.rho, config.energy,
                                               config.max_exhaustive_actions);
        break;
    }
    test = selection.test_report;
    if (!selection.test_report.rejected) {
      auto report = si_a(tensor, context, action, config, DesignOverride{selection.donors, std::nullopt});
      report.test_report = test;
      return report;
    }
    reason = "subspace test rejected";
  } catch (const Error& e) {
    reason = std::string(to_string(e.kind())) + ": " + e.what();
  }

  auto report = run_baseline(tensor, context, action, config.fallback, config);
  report.fell_back = true;
  report.fallback_reason = std::move(reason);
  report.test_report = test;
  return report;
}

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names = {
      "si_a", "si_c", "si_a_fallback", "mean_over_actions", "mean_over_contexts", "two_way",
      "fixed_action_effect"};
  return names;
}

ImputationReport impute(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                        std::string_view estimator, const EstimatorConfig& config) {
  if (estimator == "si_a") return si_a(tensor, context, action, config);
  if (estimator == "si_c") return si_c(tensor, context, action, config);
  if (estimator == "si_a_fallback") return impute_with_fallback(tensor, context, action, config);
  return run_baseline(tensor, context, action, parse_baseline(estimator), config);
}

TandemResult tandem_impute(const ObservationTensor& tensor, int max_rounds, double tolerance,
                           const EstimatorConfig& config) {
  if (max_rounds < 1) throw Error(ErrorKind::InvalidArgument, "max_rounds must be at least 1");
  if (!(tolerance >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be nonnegative");
  config.validate();

  std::vector<Pair> missing;
  for (const auto& c : tensor.contexts()) {
    for (const auto& a : tensor.actions()) {
      if (!tensor.contains(c, a)) missing.push_back(Pair{c, a});
    }
  }

  TandemResult result{tensor, {}, {}, {}, false};
  std::map<Pair, Vector> previous;

  for (int round = 1; round <= max_rounds; ++round) {
    TandemRound log;
    log.round = round;
    std::map<Pair, Vector> current;
    // All predictions of a round read the state left by the previous round.
    const ObservationTensor& state = result.completed;
    for (const auto& pair : missing) {
      try {
        current.emplace(pair, si_a(state, pair.context, pair.action, config).prediction);
        ++log.imputed_by_si_a;
        continue;
      } catch (const Error&) {
      }
      try {
        current.emplace(pair, si_c(state, pair.context, pair.action, config).prediction);
        ++log.imputed_by_si_c;
      } catch (const Error&) {
      }
    }

    for (const auto& [pair, value] : current) {
      const auto it = previous.find(pair);
      if (it == previous.end()) {
        ++log.newly_filled;
        continue;
      }
      const double scale = std::max(it->second.norm(), std::numeric_limits<double>::min());
      log.max_relative_change = std::max(log.max_relative_change, (value - it->second).norm() / scale);
    }
    // Pairs that lost their design this round keep their earlier value.
    for (auto& [pair, value] : current) previous[pair] = std::move(value);
    for (const auto& [pair, value] : previous) {
      result.completed.assign(pair.context, pair.action, value);
      result.synthetic.insert(pair);
    }
    result.rounds.push_back(log);

    const bool settled = log.newly_filled == 0 || previous.size() == missing.size();
    if (settled && log.max_relative_change < tolerance) {
      result.converged = true;
      break;
    }
  }

  for (const auto& pair : missing) {
    if (!previous.contains(pair)) result.unimputable.push_back(pair);
  }
  return result;
}

}  // namespace synint
