#pragma once

#include "synint/types.hpp"

#include <map>
#include <set>
#include <span>
#include <vector>

namespace synint {

using PairSet = std::set<Pair>;

/// Sparse order-three tensor: observed outcome vectors of length p indexed by
/// (context, action). Contexts and actions are kept in lexicographic order so
/// every stacked matrix is reproducible.
class ObservationTensor {
 public:
  explicit ObservationTensor(Index p);

  Index dim() const noexcept { return p_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  void add_context(const ContextId& context);
  void add_action(const ActionId& action);
  bool has_context(const ContextId& context) const { return contexts_.contains(context); }
  bool has_action(const ActionId& action) const { return actions_.contains(action); }

  /// Registers the identifiers if needed. Rejects length mismatch, non-finite
  /// values and duplicate keys.
  void insert(const ContextId& context, const ActionId& action, const Eigen::Ref<const Vector>& outcome);
  /// Insert-or-overwrite, same validation otherwise.
  void assign(const ContextId& context, const ActionId& action, const Eigen::Ref<const Vector>& outcome);
  void erase(const ContextId& context, const ActionId& action);

  bool contains(const ContextId& context, const ActionId& action) const;
  const Vector& at(const ContextId& context, const ActionId& action) const;

  const std::set<ContextId>& contexts() const noexcept { return contexts_; }
  const std::set<ActionId>& actions() const noexcept { return actions_; }
  const std::map<Pair, Vector>& entries() const noexcept { return entries_; }
  PairSet observed() const;

  /// A(c): actions observed for the context.
  std::vector<ActionId> actions_of(const ContextId& context) const;
  /// C(a): contexts observed under the action.
  std::vector<ContextId> contexts_of(const ActionId& action) const;
  /// C(S): contexts observed under every action in the set.
  std::vector<ContextId> contexts_of_all(std::span<const ActionId> actions) const;
  /// A(S): actions observed for every context in the set.
  std::vector<ActionId> actions_of_all(std::span<const ContextId> contexts) const;

  /// Column j is the concatenation of x^{ij} over the training contexts i,
  /// both lists taken in canonical order. Missing pairs are an error.
  Matrix stack_training(std::span<const ContextId> training_contexts,
                        std::span<const ActionId> donor_actions) const;
  /// Mirror used when regressing over contexts: column i is the
  /// concatenation of x^{ij} over the training actions j.
  Matrix stack_training_by_action(std::span<const ActionId> training_actions,
                                  std::span<const ContextId> donor_contexts) const;

  /// Swaps the roles of contexts and actions.
  ObservationTensor transposed() const;

  bool operator==(const ObservationTensor& other) const;

 private:
  void check_outcome(const Eigen::Ref<const Vector>& outcome) const;

  Index p_;
  std::set<ContextId> contexts_;
  std::set<ActionId> actions_;
  std::map<Pair, Vector> entries_;
  std::map<ContextId, std::set<ActionId>> actions_by_context_;
  std::map<ActionId, std::set<ContextId>> contexts_by_action_;
};

/// Sorted, de-duplicated copy of an identifier list.
std::vector<std::string> canonical(std::vector<std::string> ids);

}  // namespace synint
