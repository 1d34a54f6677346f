#pragma once

#include <Eigen/Dense>

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace synint {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

using ContextId = std::string;
using ActionId = std::string;

/// A (context, action) key. Ordered lexicographically by context, then action.
struct Pair {
  ContextId context;
  ActionId action;

  auto operator<=>(const Pair&) const = default;
  bool operator==(const Pair&) const = default;
};

enum class ErrorKind {
  InvalidArgument,
  LengthMismatch,
  NonFinite,
  DuplicateKey,
  UnknownContext,
  UnknownAction,
  MissingEntry,
  EmptySet,
  EmptyDonors,
  EmptyTraining,
  ReferenceUnobserved,
  EmptyAveragingSet,
  TooManyDonors,
  RetryExhausted,
  UnknownEstimator,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so batch drivers can
/// report or recover per pair.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace synint
