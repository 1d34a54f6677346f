#include "synint/tensor_store.hpp"

#include <algorithm>
#include <iterator>

namespace synint {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::LengthMismatch: return "length_mismatch";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::DuplicateKey: return "duplicate_key";
    case ErrorKind::UnknownContext: return "unknown_context";
    case ErrorKind::UnknownAction: return "unknown_action";
    case ErrorKind::MissingEntry: return "missing_entry";
    case ErrorKind::EmptySet: return "empty_set";
    case ErrorKind::EmptyDonors: return "empty_donors";
    case ErrorKind::EmptyTraining: return "empty_training";
    case ErrorKind::ReferenceUnobserved: return "reference_unobserved";
    case ErrorKind::EmptyAveragingSet: return "empty_averaging_set";
    case ErrorKind::TooManyDonors: return "too_many_donors";
    case ErrorKind::RetryExhausted: return "retry_exhausted";
    case ErrorKind::UnknownEstimator: return "unknown_estimator";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

std::vector<std::string> canonical(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

namespace {

std::string key_text(const ContextId& c, const ActionId& a) { return "(" + c + ", " + a + ")"; }

template <typename Set>
std::vector<std::string> intersect_all(std::span<const std::string> keys,
                                       const std::map<std::string, Set>& index,
                                       const std::set<std::string>& registered, ErrorKind unknown,
                                       const char* what) {
  if (keys.empty()) throw Error(ErrorKind::EmptySet, std::string("empty ") + what + " set");
  for (const auto& k : keys) {
    if (!registered.contains(k)) throw Error(unknown, std::string("unknown ") + what + " '" + k + "'");
  }
  std::vector<std::string> acc;
  bool first = true;
  for (const auto& k : keys) {
    const auto it = index.find(k);
    if (it == index.end()) return {};
    if (first) {
      acc.assign(it->second.begin(), it->second.end());
      first = false;
      continue;
    }
    std::vector<std::string> next;
    std::set_intersection(acc.begin(), acc.end(), it->second.begin(), it->second.end(),
                          std::back_inserter(next));
    acc = std::move(next);
    if (acc.empty()) break;
  }
  return acc;
}

}  // namespace

ObservationTensor::ObservationTensor(Index p) : p_(p) {
  if (p <= 0) throw Error(ErrorKind::InvalidArgument, "outcome dimension p must be positive");
}

void ObservationTensor::add_context(const ContextId& context) { contexts_.insert(context); }
void ObservationTensor::add_action(const ActionId& action) { actions_.insert(action); }

void ObservationTensor::check_outcome(const Eigen::Ref<const Vector>& outcome) const {
  if (outcome.size() != p_) {
    throw Error(ErrorKind::LengthMismatch, "outcome has length " + std::to_string(outcome.size()) +
                                               ", expected " + std::to_string(p_));
  }
  if (!outcome.allFinite()) throw Error(ErrorKind::NonFinite, "outcome contains a non-finite value");
}

void ObservationTensor::insert(const ContextId& context, const ActionId& action,
                               const Eigen::Ref<const Vector>& outcome) {
  check_outcome(outcome);
  if (contains(context, action)) {
    throw Error(ErrorKind::DuplicateKey, "duplicate entry " + key_text(context, action));
  }
  assign(context, action, outcome);
}

void ObservationTensor::assign(const ContextId& context, const ActionId& action,
                               const Eigen::Ref<const Vector>& outcome) {
  check_outcome(outcome);
  contexts_.insert(context);
  actions_.insert(action);
  entries_[Pair{context, action}] = outcome;
  actions_by_context_[context].insert(action);
  contexts_by_action_[action].insert(context);
}

void ObservationTensor::erase(const ContextId& context, const ActionId& action) {
  if (entries_.erase(Pair{context, action}) == 0) return;
  actions_by_context_[context].erase(action);
  contexts_by_action_[action].erase(context);
}

bool ObservationTensor::contains(const ContextId& context, const ActionId& action) const {
  return entries_.contains(Pair{context, action});
}

const Vector& ObservationTensor::at(const ContextId& context, const ActionId& action) const {
  const auto it = entries_.find(Pair{context, action});
  if (it == entries_.end()) {
    throw Error(ErrorKind::MissingEntry, "no observation for " + key_text(context, action));
  }
  return it->second;
}

PairSet ObservationTensor::observed() const {
  PairSet out;
  for (const auto& [key, _] : entries_) out.insert(out.end(), key);
  return out;
}

std::vector<ActionId> ObservationTensor::actions_of(const ContextId& context) const {
  if (!contexts_.contains(context)) throw Error(ErrorKind::UnknownContext, "unknown context '" + context + "'");
  const auto it = actions_by_context_.find(context);
  if (it == actions_by_context_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<ContextId> ObservationTensor::contexts_of(const ActionId& action) const {
  if (!actions_.contains(action)) throw Error(ErrorKind::UnknownAction, "unknown action '" + action + "'");
  const auto it = contexts_by_action_.find(action);
  if (it == contexts_by_action_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<ContextId> ObservationTensor::contexts_of_all(std::span<const ActionId> actions) const {
  return intersect_all(actions, contexts_by_action_, actions_, ErrorKind::UnknownAction, "action");
}

std::vector<ActionId> ObservationTensor::actions_of_all(std::span<const ContextId> contexts) const {
  return intersect_all(contexts, actions_by_context_, contexts_, ErrorKind::UnknownContext, "context");
}

Matrix ObservationTensor::stack_training(std::span<const ContextId> training_contexts,
                                         std::span<const ActionId> donor_actions) const {
  const auto rows = canonical({training_contexts.begin(), training_contexts.end()});
  const auto cols = canonical({donor_actions.begin(), donor_actions.end()});
  Matrix out(p_ * static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.col(static_cast<Index>(j)).segment(static_cast<Index>(i) * p_, p_) = at(rows[i], cols[j]);
    }
  }
  return out;
}

Matrix ObservationTensor::stack_training_by_action(std::span<const ActionId> training_actions,
                                                   std::span<const ContextId> donor_contexts) const {
  const auto rows = canonical({training_actions.begin(), training_actions.end()});
  const auto cols = canonical({donor_contexts.begin(), donor_contexts.end()});
  Matrix out(p_ * static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out.col(static_cast<Index>(i)).segment(static_cast<Index>(j) * p_, p_) = at(cols[i], rows[j]);
    }
  }
  return out;
}

ObservationTensor ObservationTensor::transposed() const {
  ObservationTensor out(p_);
  for (const auto& c : contexts_) out.add_action(c);
  for (const auto& a : actions_) out.add_context(a);
  for (const auto& [key, value] : entries_) out.insert(key.action, key.context, value);
  return out;
}

bool ObservationTensor::operator==(const ObservationTensor& other) const {
  return p_ == other.p_ && contexts_ == other.contexts_ && actions_ == other.actions_ &&
         entries_ == other.entries_;
}

}  // namespace synint
