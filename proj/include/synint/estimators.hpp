#pragma once

#include "synint/diagnostics.hpp"
#include "synint/linalg.hpp"
#include "synint/tensor_store.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synint {

// Every single-pair estimator ignores the target entry x^{ca} when it is
// observed, so the same call serves both imputation and leave-one-out scoring.

enum class Baseline { MeanOverActions, MeanOverContexts, TwoWay, FixedActionEffect };

std::string_view to_string(Baseline baseline);
Baseline parse_baseline(std::string_view name);

struct EstimatorConfig {
  std::optional<double> denoise;  // HSVT energy applied to x_train and x_test
  double rcond = linalg::kDefaultRcond;
  double rho = kDefaultRho;
  double energy = kDefaultTestEnergy;  // basis energy for the subspace test
  Baseline fallback = Baseline::MeanOverActions;
  double lambda_c = 0.5;
  std::optional<ActionId> reference_action;
  DonorStrategy donor_strategy = DonorStrategy::Full;
  std::size_t max_exhaustive_actions = kDefaultMaxExhaustiveActions;

  /// Throws InvalidArgument when a fraction is out of range.
  void validate() const;
};

/// Which fiber the regression weights: SI-A weights actions, SI-C contexts.
enum class RegressionAxis { Actions, Contexts };

struct RegressionArtifacts {
  RegressionAxis axis = RegressionAxis::Actions;
  std::vector<std::string> donors;    // actions for SI-A, contexts for SI-C
  std::vector<std::string> training;  // contexts for SI-A, actions for SI-C
  Matrix x_train;
  Vector y_train;
  Matrix x_test;
  Vector beta;
  Index rank = 0;
  bool degenerate = false;
};

struct ImputationReport {
  Pair target;
  Vector prediction;
  std::string estimator_used;
  std::optional<RegressionArtifacts> artifacts;
  std::optional<SubspaceTestReport> test_report;
  bool fell_back = false;
  std::string fallback_reason;  // empty unless fell_back
};

/// Optional restriction of the regression design. Donors must be a subset of
/// the available donors; training entries must be a subset of the training
/// set they induce.
struct DesignOverride {
  std::optional<std::vector<std::string>> donors;
  std::optional<std::vector<std::string>> training;
};

/// Regression over actions: beta = x_train^+ y_train, prediction x_test beta.
/// Donors default to A(c) \ {a}; training contexts are C(donors + a) \ {c}.
ImputationReport si_a(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                      const EstimatorConfig& config = {}, const DesignOverride& design = {});

/// Regression over contexts: donors C(a) \ {c}, training actions
/// A(donors + c) \ {a}.
ImputationReport si_c(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                      const EstimatorConfig& config = {}, const DesignOverride& design = {});

Vector mean_over_actions(const ObservationTensor& tensor, const ContextId& context, const ActionId& action);
Vector mean_over_contexts(const ObservationTensor& tensor, const ContextId& context, const ActionId& action);
/// lambda_c * mean_over_contexts + (1 - lambda_c) * mean_over_actions.
Vector two_way_mean(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                    double lambda_c = 0.5);
/// x^{ca'} plus the mean shift x^{ia} - x^{ia'} over i in C(a) and C(a'),
/// excluding c. With a == a' the reference vector is returned unchanged.
Vector fixed_action_effect(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                           const ActionId& reference_action);

/// Dispatches a baseline by name, packaging the result as a report.
ImputationReport run_baseline(const ObservationTensor& tensor, const ContextId& context,
                              const ActionId& action, Baseline baseline, const EstimatorConfig& config);

/// Subspace test on the SI-A design chosen by config.donor_strategy; SI-A if
/// the test passes, otherwise (or if SI-A cannot run) the configured
/// fallback with fell_back set.
ImputationReport impute_with_fallback(const ObservationTensor& tensor, const ContextId& context,
                                      const ActionId& action, const EstimatorConfig& config = {});

/// Every estimator name accepted by `impute`.
const std::vector<std::string>& estimator_names();

/// Runs the named estimator: si_a, si_c, si_a_fallback or one of the baselines
/// (mean_over_actions, mean_over_contexts, two_way, fixed_action_effect).
ImputationReport impute(const ObservationTensor& tensor, const ContextId& context, const ActionId& action,
                        std::string_view estimator, const EstimatorConfig& config = {});

struct TandemRound {
  int round = 0;
  std::size_t imputed_by_si_a = 0;
  std::size_t imputed_by_si_c = 0;
  std::size_t newly_filled = 0;
  double max_relative_change = 0.0;  // over pairs filled in the previous round too
};

struct TandemResult {
  ObservationTensor completed;
  PairSet synthetic;  // entries produced by imputation, never ground truth
  std::vector<TandemRound> rounds;
  std::vector<Pair> unimputable;
  bool converged = false;
};

/// Alternating SI-A / SI-C completion. Each round re-imputes every missing
/// pair from the previous round's state, trying SI-A first and SI-C when SI-A
/// has no design. Stops when no new pair was filled (or none is left) and the
/// largest relative change of re-imputed pairs is below `tolerance`.
TandemResult tandem_impute(const ObservationTensor& tensor, int max_rounds, double tolerance,
                           const EstimatorConfig& config = {});

}  // namespace synint
