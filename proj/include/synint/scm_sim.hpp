#pragma once

// Ground-truth generators: linear structural equation models
//   x^{ca} = A^c x^{ca} + B^c v^a,   A^c strictly lower triangular,
// their factor-model form x^{ca} = U^c v^a with U^c = (I - A^c)^{-1} B^c, and
// sparsity patterns that satisfy or deliberately break identifiability.

#include "synint/tensor_store.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace synint {

struct ScmSpec {
  Index p = 0;
  Index r = 0;
  std::vector<Index> dag_order;  // identity permutation; A^c is lower triangular in it
  std::map<ContextId, Matrix> a_matrices;
  std::map<ContextId, Matrix> b_matrices;
  std::map<ActionId, Vector> v_vectors;

  /// Throws InvalidArgument on shape errors, non-finite entries or a
  /// non-strictly-lower-triangular A^c.
  void validate() const;
};

struct FactorModelSpec {
  Index p = 0;
  Index r = 0;
  std::map<ContextId, Matrix> u_matrices;
  std::map<ActionId, Vector> v_vectors;

  Vector outcome(const ContextId& context, const ActionId& action) const;
};

enum class NoiseKind { Additive, Multiplicative };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Additive;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// U^c = (I - A^c)^{-1} B^c by forward substitution on the triangular system.
FactorModelSpec scm_to_factor(const ScmSpec& spec);

/// Solves x = A^c x + B^c v node by node in topological order.
Vector simulate_scm(const ScmSpec& spec, const ContextId& context, const Vector& latent);

struct GeneratedTensor {
  ObservationTensor observed;  // sparsity pairs only, with noise if any
  ObservationTensor truth;     // every (context, action), noiseless
};

GeneratedTensor generate_tensor(const FactorModelSpec& spec, const PairSet& sparsity,
                                const std::optional<NoiseModel>& noise = std::nullopt);

/// Draws a standard-Gaussian SCM over the given identifiers.
ScmSpec random_scm(const std::vector<ContextId>& contexts, const std::vector<ActionId>& actions, Index p,
                   Index r, std::uint64_t seed);

struct Instance {
  ScmSpec scm;
  PairSet sparsity;
  std::vector<Pair> targets;  // unobserved pairs with known ground truth
};

struct InstanceSizes {
  std::size_t num_contexts = 0;
  std::size_t num_actions = 0;
  Index p = 0;
  Index r = 0;
};

/// Zero-padded identifiers so lexicographic and numeric order agree.
std::vector<ContextId> context_ids(std::size_t n);
std::vector<ActionId> action_ids(std::size_t n);

/// Instance on which every target has at least r donors and r training
/// contexts, the target latent lies in the donor span, and the noiseless
/// subspace test passes. Resamples up to a fixed retry bound.
Instance random_identifiable_instance(std::size_t num_contexts, std::size_t num_actions, Index p, Index r,
                                      double sparsity_density, std::uint64_t seed);

enum class Violation { Assumption2, Assumption3 };

/// Assumption2 (donor span): the target latent is orthogonal to every donor latent.
/// Assumption3 (row space): training contexts never express the last latent direction,
/// so x_test has row-space mass outside rowspan(x_train).
Instance violating_instance(Violation kind, const InstanceSizes& sizes, std::uint64_t seed);

/// Noiseless design of an instance target with the full donor set.
struct TargetDesign {
  Matrix x_train;
  Matrix x_test;
};
TargetDesign target_design(const ObservationTensor& observed, const Pair& target);

}  // namespace synint
