#include "synint/diagnostics.hpp"

#include "synint/linalg.hpp"

#include <algorithm>
#include <limits>

namespace synint {

SubspaceTestReport subspace_test(const Eigen::Ref<const Matrix>& x_train,
                                 const Eigen::Ref<const Matrix>& x_test, double rho, double energy) {
  if (x_train.cols() != x_test.cols()) {
    throw Error(ErrorKind::LengthMismatch, "x_train and x_test column counts differ");
  }
  if (x_train.size() == 0 || x_test.size() == 0) {
    throw Error(ErrorKind::InvalidArgument, "subspace test needs nonempty matrices");
  }
  if (!(rho >= 0.0 && rho <= 1.0) || !(energy > 0.0 && energy <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "rho must lie in [0,1] and energy in (0,1]");
  }

  const Matrix v_train = linalg::right_singular_basis(x_train, energy);
  const Matrix v_test = linalg::right_singular_basis(x_test, energy);

  SubspaceTestReport report;
  report.rho = rho;
  report.rank_train = v_train.cols();
  report.rank_test = v_test.cols();
  report.threshold = rho * static_cast<double>(report.rank_test);
  if (report.rank_test == 0) {
    report.degenerate = true;
    return report;
  }
  const Matrix residual = v_test - v_train * (v_train.transpose() * v_test);
  report.tau_hat = residual.squaredNorm();
  report.rejected = report.tau_hat >= report.threshold;
  return report;
}

std::string_view to_string(DonorStrategy strategy) {
  switch (strategy) {
    case DonorStrategy::Full: return "full";
    case DonorStrategy::Greedy: return "greedy";
    case DonorStrategy::Exhaustive: return "exhaustive";
  }
  return "full";
}

DonorStrategy parse_donor_strategy(std::string_view name) {
  if (name == "full") return DonorStrategy::Full;
  if (name == "greedy") return DonorStrategy::Greedy;
  if (name == "exhaustive") return DonorStrategy::Exhaustive;
  throw Error(ErrorKind::InvalidArgument, "unknown donor strategy '" + std::string(name) + "'");
}

namespace {

std::vector<ContextId> training_contexts_for(const ObservationTensor& tensor, const ContextId& context,
                                             const ActionId& action, std::vector<ActionId> donors) {
  donors.push_back(action);
  auto contexts = tensor.contexts_of_all(donors);
  std::erase(contexts, context);
  return contexts;
}

std::vector<ActionId> available_donors(const ObservationTensor& tensor, const ContextId& context,
                                       const ActionId& action) {
  auto donors = tensor.actions_of(context);
  std::erase(donors, action);
  if (!tensor.has_action(action)) throw Error(ErrorKind::UnknownAction, "unknown action '" + action + "'");
  if (donors.empty()) {
    throw Error(ErrorKind::EmptyDonors, "context '" + context + "' has no donor actions for '" + action + "'");
  }
  return donors;
}

// Ranking key for exhaustive search: more training contexts, then more
// donors, then lexicographically smaller donor list.
bool better_passing(const DonorSelection& lhs, const DonorSelection& rhs) {
  if (lhs.training_contexts.size() != rhs.training_contexts.size())
    return lhs.training_contexts.size() > rhs.training_contexts.size();
  if (lhs.donors.size() != rhs.donors.size()) return lhs.donors.size() > rhs.donors.size();
  return lhs.donors < rhs.donors;
}

bool better_rejected(const DonorSelection& lhs, const DonorSelection& rhs) {
  if (lhs.test_report.tau_hat != rhs.test_report.tau_hat)
    return lhs.test_report.tau_hat < rhs.test_report.tau_hat;
  return better_passing(lhs, rhs);
}

}  // namespace

DonorSelection evaluate_donor_set(const ObservationTensor& tensor, const ContextId& context,
                                  const ActionId& action, std::vector<ActionId> donors, double rho,
                                  double energy, DonorStrategy strategy) {
  donors = canonical(std::move(donors));
  if (donors.empty()) throw Error(ErrorKind::EmptyDonors, "empty donor set");
  auto training = training_contexts_for(tensor, context, action, donors);
  if (training.empty()) {
    throw Error(ErrorKind::EmptyTraining,
                "no training context observes all donors and '" + action + "'");
  }
  const Matrix x_train = tensor.stack_training(training, donors);
  const ContextId target[] = {context};
  const Matrix x_test = tensor.stack_training(target, donors);
  return DonorSelection{std::move(donors), std::move(training), subspace_test(x_train, x_test, rho, energy),
                        strategy, {}};
}

DonorSelection greedy_donor_selection(const ObservationTensor& tensor, const ContextId& context,
                                      const ActionId& action, double rho, double energy) {
  auto remaining = available_donors(tensor, context, action);
  std::vector<ActionId> chosen;
  std::optional<DonorSelection> last;
  std::vector<std::size_t> path;

  while (!remaining.empty()) {
    // Pick the addition that keeps the most training contexts.
    std::size_t best = 0;
    std::size_t best_count = 0;
    bool found = false;
    for (std::size_t k = 0; k < remaining.size(); ++k) {
      auto trial = chosen;
      trial.push_back(remaining[k]);
      const std::size_t count = training_contexts_for(tensor, context, action, trial).size();
      if (!found || count > best_count) {
        best = k;
        best_count = count;
        found = true;
      }
    }
    if (best_count == 0) {
      // No larger set has a training context either; keep the last design.
      if (!last) {
        throw Error(ErrorKind::EmptyTraining,
                    "no training context observes '" + action + "' together with any donor");
      }
      break;
    }
    chosen.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    last = evaluate_donor_set(tensor, context, action, chosen, rho, energy, DonorStrategy::Greedy);
    path.push_back(best_count);
    if (!last->test_report.rejected) break;
  }
  last->path_training_counts = std::move(path);
  return *last;
}

DonorSelection exhaustive_donor_selection(const ObservationTensor& tensor, const ContextId& context,
                                          const ActionId& action, double rho, double energy,
                                          std::size_t max_actions) {
  const auto pool = available_donors(tensor, context, action);
  if (pool.size() > max_actions || pool.size() >= 63) {
    throw Error(ErrorKind::TooManyDonors, std::to_string(pool.size()) +
                                              " donor actions exceed the exhaustive bound of " +
                                              std::to_string(max_actions));
  }

  std::optional<DonorSelection> best_pass;
  std::optional<DonorSelection> best_fail;
  const std::uint64_t subsets = (std::uint64_t{1} << pool.size());
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    std::vector<ActionId> donors;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (mask & (std::uint64_t{1} << k)) donors.push_back(pool[k]);
    }
    if (training_contexts_for(tensor, context, action, donors).empty()) continue;
    auto candidate = evaluate_donor_set(tensor, context, action, std::move(donors), rho, energy,
                                        DonorStrategy::Exhaustive);
    if (!candidate.test_report.rejected) {
      if (!best_pass || better_passing(candidate, *best_pass)) best_pass = std::move(candidate);
    } else if (!best_fail || better_rejected(candidate, *best_fail)) {
      best_fail = std::move(candidate);
    }
  }
  if (best_pass) return *best_pass;
  if (best_fail) return *best_fail;
  throw Error(ErrorKind::EmptyTraining, "no donor subset has a training context for '" + action + "'");
}

Index SpectrumReport::rank_at(double energy) const {
  return linalg::energy_rank<double>(singular_values, energy, rows, cols);
}

SpectrumReport spectrum_report(const ObservationTensor& tensor, std::vector<double> energies) {
  if (tensor.empty()) throw Error(ErrorKind::EmptySet, "spectrum of an empty tensor");
  Matrix stacked(static_cast<Index>(tensor.size()), tensor.dim());
  Index row = 0;
  for (const auto& [_, value] : tensor.entries()) stacked.row(row++) = value.transpose();

  SpectrumReport report;
  report.rows = stacked.rows();
  report.cols = stacked.cols();
  report.singular_values = linalg::thin_svd(stacked).s;
  report.energies = std::move(energies);
  for (double e : report.energies) report.effective_ranks.push_back(report.rank_at(e));
  return report;
}

}  // namespace synint
