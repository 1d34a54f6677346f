#pragma once

#include "synint/estimators.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace synint {

/// 1 - sum (pred - truth)^2 / sum (truth - mean(truth))^2. A zero-variance
/// truth scores 1 on an exact match and -infinity otherwise.
double r2_score(const Vector& prediction, const Vector& truth);
double rmse(const Vector& prediction, const Vector& truth);

struct LooRecord {
  Pair pair;
  std::optional<double> r2;    // empty when skipped
  std::optional<double> rmse;  // empty when skipped
  std::string estimator_used;
  bool fell_back = false;
  bool zero_variance_truth = false;
  std::string skip_reason;  // nonempty when the estimator could not run
  double runtime_seconds = 0.0;
};

struct LooSummary {
  std::size_t count = 0;
  double median_r2 = 0.0;
  double mean_r2 = 0.0;
  double median_rmse = 0.0;
  double mean_rmse = 0.0;
};

struct LooResult {
  std::string estimator;
  std::vector<LooRecord> per_pair;
  LooSummary summary;                           // every scored pair
  std::map<std::string, LooSummary> by_estimator_used;
  std::size_t skipped = 0;
};

using Predictor =
    std::function<ImputationReport(const ObservationTensor&, const ContextId&, const ActionId&)>;

/// Leave-one-out over every observed pair. Each prediction sees the tensor
/// with the scored entry removed; the input is never modified.
LooResult loo_evaluate(const ObservationTensor& tensor, const Predictor& predictor,
                       const std::string& estimator_name = "custom");

/// Named-estimator form; throws UnknownEstimator for an unrecognised name.
LooResult loo_evaluate(const ObservationTensor& tensor, const std::string& estimator,
                       const EstimatorConfig& config = {});

LooSummary summarize(const std::vector<double>& r2, const std::vector<double>& rmse);

struct SweepGrid {
  std::vector<std::size_t> donor_counts;
  std::vector<std::size_t> training_counts;
  Matrix mean_r2;  // rows: donor counts, cols: training counts
  std::size_t pairs = 0;
};

/// For every observed pair with at least max(donor_counts) donors and
/// max(training_counts) training contexts, runs leave-one-out SI-A on random
/// donor / training subsets of each size, `repeats` times, and averages R^2.
SweepGrid donor_sweep(const ObservationTensor& tensor, const std::vector<std::size_t>& donor_counts,
                      const std::vector<std::size_t>& training_counts, std::size_t repeats, std::uint64_t seed,
                      const EstimatorConfig& config = {});

}  // namespace synint
