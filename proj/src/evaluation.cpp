#include "synint/evaluation.hpp"

#include "synint/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace synint {

double r2_score(const Vector& prediction, const Vector& truth) {
  if (prediction.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "prediction/truth length mismatch");
  const double residual = (prediction - truth).squaredNorm();
  const double total = (truth.array() - truth.mean()).matrix().squaredNorm();
  if (total == 0.0) return residual == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  return 1.0 - residual / total;
}

double rmse(const Vector& prediction, const Vector& truth) {
  if (prediction.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "prediction/truth length mismatch");
  return std::sqrt((prediction - truth).squaredNorm() / static_cast<double>(truth.size()));
}

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace

LooSummary summarize(const std::vector<double>& r2, const std::vector<double>& rmse_values) {
  return LooSummary{r2.size(), median(r2), mean(r2), median(rmse_values), mean(rmse_values)};
}

LooResult loo_evaluate(const ObservationTensor& tensor, const Predictor& predictor,
                       const std::string& estimator_name) {
  if (tensor.size() < 2) throw Error(ErrorKind::InvalidArgument, "leave-one-out needs at least two entries");

  LooResult result;
  result.estimator = estimator_name;
  std::vector<double> all_r2, all_rmse;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> grouped;

  ObservationTensor masked = tensor;
  for (const auto& [pair, truth] : tensor.entries()) {
    LooRecord record;
    record.pair = pair;
    masked.erase(pair.context, pair.action);
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto report = predictor(masked, pair.context, pair.action);
      record.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      record.estimator_used = report.estimator_used;
      record.fell_back = report.fell_back;
      record.r2 = r2_score(report.prediction, truth);
      record.rmse = rmse(report.prediction, truth);
      record.zero_variance_truth = (truth.array() - truth.mean()).matrix().squaredNorm() == 0.0;
      all_r2.push_back(*record.r2);
      all_rmse.push_back(*record.rmse);
      grouped[record.estimator_used].first.push_back(*record.r2);
      grouped[record.estimator_used].second.push_back(*record.rmse);
    } catch (const Error& e) {
      record.runtime_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      record.skip_reason = std::string(to_string(e.kind())) + ": " + e.what();
      ++result.skipped;
    }
    masked.insert(pair.context, pair.action, truth);
    result.per_pair.push_back(std::move(record));
  }

  result.summary = summarize(all_r2, all_rmse);
  for (const auto& [name, values] : grouped) result.by_estimator_used[name] = summarize(values.first, values.second);
  return result;
}

LooResult loo_evaluate(const ObservationTensor& tensor, const std::string& estimator,
                       const EstimatorConfig& config) {
  const auto& names = estimator_names();
  if (std::find(names.begin(), names.end(), estimator) == names.end()) {
    throw Error(ErrorKind::UnknownEstimator, "unknown estimator '" + estimator + "'");
  }
  config.validate();
  return loo_evaluate(
      tensor,
      [&](const ObservationTensor& t, const ContextId& c, const ActionId& a) {
        return impute(t, c, a, estimator, config);
      },
      estimator);
}

SweepGrid donor_sweep(const ObservationTensor& tensor, const std::vector<std::size_t>& donor_counts,
                      const std::vector<std::size_t>& training_counts, std::size_t repeats, std::uint64_t seed,
                      const EstimatorConfig& config) {
  if (donor_counts.empty() || training_counts.empty() || repeats == 0) {
    throw Error(ErrorKind::InvalidArgument, "donor sweep needs counts and at least one repeat");
  }
  if (std::find(donor_counts.begin(), donor_counts.end(), 0u) != donor_counts.end() ||
      std::find(training_counts.begin(), training_counts.end(), 0u) != training_counts.end()) {
    throw Error(ErrorKind::InvalidArgument, "donor and training counts must be positive");
  }
  const std::size_t need_donors = *std::max_element(donor_counts.begin(), donor_counts.end());
  const std::size_t need_training = *std::max_element(training_counts.begin(), training_counts.end());

  struct Eligible {
    Pair pair;
    std::vector<ActionId> donors;
  };
  std::vector<Eligible> eligible;
  for (const auto& [pair, _] : tensor.entries()) {
    auto donors = tensor.actions_of(pair.context);
    std::erase(donors, pair.action);
    if (donors.size() < need_donors) continue;
    auto with_target = donors;
    with_target.push_back(pair.action);
    auto training = tensor.contexts_of_all(with_target);
    std::erase(training, pair.context);
    if (training.size() < need_training) continue;
    eligible.push_back(Eligible{pair, std::move(donors)});
  }
  if (eligible.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no observed pair has " + std::to_string(need_donors) + " donors and " +
                                                std::to_string(need_training) + " training contexts");
  }

  SweepGrid grid{donor_counts, training_counts,
                 Matrix::Zero(static_cast<Index>(donor_counts.size()), static_cast<Index>(training_counts.size())),
                 eligible.size()};
  ObservationTensor masked = tensor;
  std::uint64_t stream = 0;
  for (const auto& item : eligible) {
    const Vector truth = tensor.at(item.pair.context, item.pair.action);
    masked.erase(item.pair.context, item.pair.action);
    for (std::size_t di = 0; di < donor_counts.size(); ++di) {
      for (std::size_t ti = 0; ti < training_counts.size(); ++ti) {
        double total = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
          auto engine = make_engine(seed, stream++);
          std::vector<ActionId> donors;
          std::sample(item.donors.begin(), item.donors.end(), std::back_inserter(donors), donor_counts[di], engine);
          auto with_target = donors;
          with_target.push_back(item.pair.action);
          auto pool = masked.contexts_of_all(with_target);
          std::erase(pool, item.pair.context);
          std::vector<ContextId> training;
          std::sample(pool.begin(), pool.end(), std::back_inserter(training), training_counts[ti], engine);
          const auto report =
              si_a(masked, item.pair.context, item.pair.action, config, DesignOverride{donors, training});
          total += r2_score(report.prediction, truth);
        }
        grid.mean_r2(static_cast<Index>(di), static_cast<Index>(ti)) += total / static_cast<double>(repeats);
      }
    }
    masked.insert(item.pair.context, item.pair.action, truth);
  }
  grid.mean_r2 /= static_cast<double>(eligible.size());
  return grid;
}

}  // namespace synint
