#include "synint/scm_sim.hpp"

#include "synint/diagnostics.hpp"
#include "synint/linalg.hpp"
#include "synint/random.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace synint {

namespace {

constexpr int kMaxRetries = 16;
constexpr double kIdentifiedTol = 1e-8;

std::vector<std::string> make_ids(char prefix, std::size_t n) {
  const int width = n <= 10 ? 1 : static_cast<int>(std::to_string(n - 1).size());
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, k);
    ids.emplace_back(buf);
  }
  return ids;
}

Matrix gaussian(Index rows, Index cols, std::mt19937_64& engine) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(engine);
  return m;
}

// Relative residual of `target` after projection onto span(columns).
double span_residual(const Matrix& columns, const Vector& target) {
  const auto fit = linalg::pseudoinverse_solve(columns, target);
  const double scale = std::max(target.norm(), std::numeric_limits<double>::min());
  return (columns * fit.weights - target).norm() / scale;
}

Matrix donor_latents(const ScmSpec& scm, const std::vector<ActionId>& donors) {
  Matrix out(scm.r, static_cast<Index>(donors.size()));
  for (std::size_t j = 0; j < donors.size(); ++j) out.col(static_cast<Index>(j)) = scm.v_vectors.at(donors[j]);
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, message);
}

}  // namespace

std::vector<ContextId> context_ids(std::size_t n) { return make_ids('c', n); }
std::vector<ActionId> action_ids(std::size_t n) { return make_ids('a', n); }

void ScmSpec::validate() const {
  require(p > 0 && r > 0, "scm dimensions must be positive");
  require(b_matrices.size() == a_matrices.size(), "every context needs both A^c and B^c");
  for (const auto& [c, a] : a_matrices) {
    require(a.rows() == p && a.cols() == p, "A^" + c + " must be p x p");
    require(a.allFinite(), "A^" + c + " has non-finite entries");
    require(a.triangularView<Eigen::Upper>().toDenseMatrix().isZero(0.0),
            "A^" + c + " must be strictly lower triangular");
    const auto it = b_matrices.find(c);
    require(it != b_matrices.end(), "missing B^" + c);
    require(it->second.rows() == p && it->second.cols() == r, "B^" + c + " must be p x r");
    require(it->second.allFinite(), "B^" + c + " has non-finite entries");
  }
  for (const auto& [a, v] : v_vectors) {
    require(v.size() == r, "v^" + a + " must have length r");
    require(v.allFinite(), "v^" + a + " has non-finite entries");
  }
}

Vector FactorModelSpec::outcome(const ContextId& context, const ActionId& action) const {
  return u_matrices.at(context) * v_vectors.at(action);
}

FactorModelSpec scm_to_factor(const ScmSpec& spec) {
  spec.validate();
  FactorModelSpec out;
  out.p = spec.p;
  out.r = spec.r;
  out.v_vectors = spec.v_vectors;
  for (const auto& [c, a] : spec.a_matrices) {
    const Matrix system = Matrix::Identity(spec.p, spec.p) - a;
    out.u_matrices[c] = system.triangularView<Eigen::Lower>().solve(spec.b_matrices.at(c));
  }
  return out;
}

Vector simulate_scm(const ScmSpec& spec, const ContextId& context, const Vector& latent) {
  const Matrix& a = spec.a_matrices.at(context);
  const Vector exogenous = spec.b_matrices.at(context) * latent;
  Vector x = Vector::Zero(spec.p);
  for (Index node = 0; node < spec.p; ++node) {
    double value = exogenous(node);
    for (Index parent = 0; parent < node; ++parent) value += a(node, parent) * x(parent);
    x(node) = value;
  }
  return x;
}

GeneratedTensor generate_tensor(const FactorModelSpec& spec, const PairSet& sparsity,
                                const std::optional<NoiseModel>& noise) {
  if (noise && !(noise->sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be nonnegative");
  GeneratedTensor out{ObservationTensor(spec.p), ObservationTensor(spec.p)};
  for (const auto& [c, _] : spec.u_matrices) {
    out.observed.add_context(c);
    out.truth.add_context(c);
  }
  for (const auto& [a, _] : spec.v_vectors) {
    out.observed.add_action(a);
    out.truth.add_action(a);
  }
  for (const auto& [c, u] : spec.u_matrices) {
    for (const auto& [a, v] : spec.v_vectors) out.truth.insert(c, a, u * v);
  }

  std::mt19937_64 engine = make_engine(noise ? noise->seed : 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& pair : sparsity) {
    if (!spec.u_matrices.contains(pair.context))
      throw Error(ErrorKind::UnknownContext, "sparsity references unknown context '" + pair.context + "'");
    if (!spec.v_vectors.contains(pair.action))
      throw Error(ErrorKind::UnknownAction, "sparsity references unknown action '" + pair.action + "'");
    Vector x = out.truth.at(pair.context, pair.action);
    if (noise && noise->sigma > 0.0) {
      for (Index k = 0; k < x.size(); ++k) {
        const double e = noise->sigma * normal(engine);
        x(k) = noise->kind == NoiseKind::Additive ? x(k) + e : x(k) * (1.0 + e);
      }
    }
    out.observed.insert(pair.context, pair.action, x);
  }
  return out;
}

ScmSpec random_scm(const std::vector<ContextId>& contexts, const std::vector<ActionId>& actions, Index p,
                   Index r, std::uint64_t seed) {
  require(p > 0 && r > 0, "scm dimensions must be positive");
  auto engine = make_engine(seed);
  ScmSpec spec;
  spec.p = p;
  spec.r = r;
  spec.dag_order.resize(static_cast<std::size_t>(p));
  for (Index k = 0; k < p; ++k) spec.dag_order[static_cast<std::size_t>(k)] = k;
  for (const auto& c : canonical(contexts)) {
    Matrix a = gaussian(p, p, engine);
    a = a.triangularView<Eigen::StrictlyLower>();
    spec.a_matrices[c] = std::move(a);
    spec.b_matrices[c] = gaussian(p, r, engine);
  }
  for (const auto& a : canonical(actions)) spec.v_vectors[a] = gaussian(r, 1, engine).col(0);
  return spec;
}

TargetDesign target_design(const ObservationTensor& observed, const Pair& target) {
  auto donors = observed.actions_of(target.context);
  std::erase(donors, target.action);
  if (donors.empty()) throw Error(ErrorKind::EmptyDonors, "target has no donors");
  auto with_target = donors;
  with_target.push_back(target.action);
  auto training = observed.contexts_of_all(with_target);
  std::erase(training, target.context);
  if (training.empty()) throw Error(ErrorKind::EmptyTraining, "target has no training contexts");
  const ContextId test[] = {target.context};
  return TargetDesign{observed.stack_training(training, donors), observed.stack_training(test, donors)};
}

Instance random_identifiable_instance(std::size_t num_contexts, std::size_t num_actions, Index p, Index r,
                                      double sparsity_density, std::uint64_t seed) {
  require(r >= 1 && p >= 1, "p and r must be positive");
  require(num_actions >= 2 && static_cast<std::size_t>(r) <= num_actions - 1, "r must not exceed num_actions - 1");
  require(r <= p, "r must not exceed p");
  require(num_contexts >= static_cast<std::size_t>(r) + 1, "need at least r + 1 contexts");
  require(sparsity_density > 0.0 && sparsity_density <= 1.0, "sparsity density must lie in (0,1]");

  const auto contexts = context_ids(num_contexts);
  const auto actions = action_ids(num_actions);
  const std::size_t core_size = static_cast<std::size_t>(r);
  std::string failure;

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    auto engine = make_engine(seed, 2 * static_cast<std::uint64_t>(attempt));
    Instance inst;
    inst.scm = random_scm(contexts, actions, p, r, split_seed(seed, 2 * static_cast<std::uint64_t>(attempt) + 1));

    // r fully observed contexts guarantee |C_train| >= r for every target.
    auto order = contexts;
    std::shuffle(order.begin(), order.end(), engine);
    std::bernoulli_distribution keep(sparsity_density);
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& c = order[k];
      if (k < core_size) {
        for (const auto& a : actions) inst.sparsity.insert(Pair{c, a});
        continue;
      }
      std::vector<ActionId> seen, unseen;
      for (const auto& a : actions) (keep(engine) ? seen : unseen).push_back(a);
      if (unseen.empty()) {
        const auto drop = std::uniform_int_distribution<std::size_t>(0, seen.size() - 1)(engine);
        unseen.push_back(seen[drop]);
        seen.erase(seen.begin() + static_cast<std::ptrdiff_t>(drop));
      }
      const auto pick = std::uniform_int_distribution<std::size_t>(0, unseen.size() - 1)(engine);
      const ActionId target = unseen[pick];
      unseen.erase(unseen.begin() + static_cast<std::ptrdiff_t>(pick));
      while (seen.size() < core_size) {
        const auto add = std::uniform_int_distribution<std::size_t>(0, unseen.size() - 1)(engine);
        seen.push_back(unseen[add]);
        unseen.erase(unseen.begin() + static_cast<std::ptrdiff_t>(add));
      }
      for (const auto& a : seen) inst.sparsity.insert(Pair{c, a});
      inst.targets.push_back(Pair{c, target});
    }
    std::sort(inst.targets.begin(), inst.targets.end());

    const auto generated = generate_tensor(scm_to_factor(inst.scm), inst.sparsity);
    bool ok = true;
    for (const auto& t : inst.targets) {
      auto donors = generated.observed.actions_of(t.context);
      if (span_residual(donor_latents(inst.scm, donors), inst.scm.v_vectors.at(t.action)) >= kIdentifiedTol) {
        failure = "target latent outside the donor span";
        ok = false;
        break;
      }
      const auto design = target_design(generated.observed, t);
      if (subspace_test(design.x_train, design.x_test, kDefaultRho, 1.0).tau_hat >= kIdentifiedTol) {
        failure = "test rows outside the training row space";
        ok = false;
        break;
      }
    }
    if (ok) return inst;
  }
  throw Error(ErrorKind::RetryExhausted, "no identifiable instance after " + std::to_string(kMaxRetries) +
                                             " attempts; last failure: " + failure);
}

Instance violating_instance(Violation kind, const InstanceSizes& sizes, std::uint64_t seed) {
  const Index r = sizes.r;
  require(sizes.p >= 1 && r >= 1 && r <= sizes.p, "need 1 <= r <= p");
  require(sizes.num_contexts >= 2, "need at least two contexts");
  if (kind == Violation::Assumption3) {
    require(sizes.num_actions >= static_cast<std::size_t>(r) + 1, "need at least r + 1 actions");
    require(r <= 10, "rejection at rho = 0.1 needs r <= 10");
  } else {
    require(r >= 2, "an orthogonal target latent needs r >= 2");
    require(sizes.num_actions >= static_cast<std::size_t>(r), "need at least r actions");
  }

  const auto contexts = context_ids(sizes.num_contexts);
  const auto actions = action_ids(sizes.num_actions);
  auto engine = make_engine(seed, 0);

  Instance inst;
  inst.scm = random_scm(contexts, actions, sizes.p, r, split_seed(seed, 1));
  const ContextId target_context = contexts.front();
  const ActionId target_action =
      actions[std::uniform_int_distribution<std::size_t>(0, actions.size() - 1)(engine)];
  inst.targets.push_back(Pair{target_context, target_action});

  for (const auto& c : contexts) {
    if (c == target_context) continue;
    for (const auto& a : actions) inst.sparsity.insert(Pair{c, a});
  }

  std::vector<ActionId> donors;
  for (const auto& a : actions)
    if (a != target_action) donors.push_back(a);

  if (kind == Violation::Assumption3) {
    // Training contexts never load on the last latent direction.
    for (auto& [c, b] : inst.scm.b_matrices) {
      if (c != target_context) b.col(r - 1).setZero();
    }
    for (const auto& a : donors) inst.sparsity.insert(Pair{target_context, a});
    const auto generated = generate_tensor(scm_to_factor(inst.scm), inst.sparsity);
    const auto design = target_design(generated.observed, inst.targets.front());
    if (!subspace_test(design.x_train, design.x_test, kDefaultRho, 1.0).rejected) {
      throw Error(ErrorKind::RetryExhausted, "row-space violation did not reject the subspace test");
    }
  } else {
    std::shuffle(donors.begin(), donors.end(), engine);
    donors.resize(static_cast<std::size_t>(r - 1));
    std::sort(donors.begin(), donors.end());
    for (const auto& a : donors) inst.sparsity.insert(Pair{target_context, a});
    const Matrix span = donor_latents(inst.scm, donors);
    Vector& v = inst.scm.v_vectors.at(target_action);
    const auto fit = linalg::pseudoinverse_solve(span, v);
    v -= span * fit.weights;
    const double norm = v.norm();
    if (!(norm > 0.0)) throw Error(ErrorKind::RetryExhausted, "target latent collapsed onto the donor span");
    v /= norm;
    if ((span.transpose() * v).norm() > 1e-10 * span.norm()) {
      throw Error(ErrorKind::RetryExhausted, "target latent is not orthogonal to the donor span");
    }
  }
  return inst;
}

}  // namespace synint
