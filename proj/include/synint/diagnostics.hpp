#pragma once

#include "synint/tensor_store.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace synint {

inline constexpr double kDefaultRho = 0.1;
inline constexpr double kDefaultTestEnergy = 0.95;
inline constexpr std::size_t kDefaultMaxExhaustiveActions = 12;

/// Outcome of the row-space inclusion test for one prediction.
struct SubspaceTestReport {
  double tau_hat = 0.0;  // squared Frobenius residual of v_test off span(v_train)
  Index rank_test = 0;
  Index rank_train = 0;
  double rho = kDefaultRho;
  double threshold = 0.0;  // rho * rank_test
  bool rejected = false;
  bool degenerate = false;  // x_test has rank zero
};

/// tau_hat = || v_test - v_train v_train^T v_test ||_F^2 with both bases taken
/// at the given spectral energy. Rejects when tau_hat >= rho * rank(v_test).
SubspaceTestReport subspace_test(const Eigen::Ref<const Matrix>& x_train,
                                 const Eigen::Ref<const Matrix>& x_test, double rho = kDefaultRho,
                                 double energy = kDefaultTestEnergy);

enum class DonorStrategy { Full, Greedy, Exhaustive };

std::string_view to_string(DonorStrategy strategy);
DonorStrategy parse_donor_strategy(std::string_view name);

struct DonorSelection {
  std::vector<ActionId> donors;
  std::vector<ContextId> training_contexts;
  SubspaceTestReport test_report;
  DonorStrategy strategy = DonorStrategy::Full;
  std::vector<std::size_t> path_training_counts;  // greedy: |C_train| after each addition
};

/// Runs the test on the design induced by `donors` for target (c, a). The
/// target entry itself never enters the design. Throws EmptyDonors or
/// EmptyTraining.
DonorSelection evaluate_donor_set(const ObservationTensor& tensor, const ContextId& context,
                                  const ActionId& action, std::vector<ActionId> donors, double rho,
                                  double energy, DonorStrategy strategy = DonorStrategy::Full);

/// Grows the donor set from empty, each step adding the action that keeps the
/// most training contexts (ties by canonical order), until the test passes or
/// every available action is in.
DonorSelection greedy_donor_selection(const ObservationTensor& tensor, const ContextId& context,
                                      const ActionId& action, double rho = kDefaultRho,
                                      double energy = kDefaultTestEnergy);

/// Evaluates every nonempty donor subset. Among passing subsets, maximizes the
/// number of training contexts, then donor count, then canonical order. With
/// no passing subset the smallest tau_hat wins and the result is rejected.
DonorSelection exhaustive_donor_selection(const ObservationTensor& tensor, const ContextId& context,
                                          const ActionId& action, double rho = kDefaultRho,
                                          double energy = kDefaultTestEnergy,
                                          std::size_t max_actions = kDefaultMaxExhaustiveActions);

struct SpectrumReport {
  Vector singular_values;
  std::vector<double> energies;
  std::vector<Index> effective_ranks;  // one per energy
  Index rows = 0;
  Index cols = 0;

  Index rank_at(double energy) const;
};

/// Spectrum of the |Omega| x p matrix of observed vectors in canonical
/// (context, action) order.
SpectrumReport spectrum_report(const ObservationTensor& tensor,
                               std::vector<double> energies = {0.9, 0.95, 0.99});

}  // namespace synint
