// One line per acceptance criterion; exits nonzero if any fails.

#include "synint/diagnostics.hpp"
#include "synint/estimators.hpp"
#include "synint/evaluation.hpp"
#include "synint/io.hpp"
#include "synint/linalg.hpp"
#include "synint/random.hpp"
#include "synint/scm_sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace synint;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double relative_error(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

Matrix gaussian(Index rows, Index cols, std::mt19937_64& engine) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(engine);
  return m;
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

GeneratedTensor realize(const Instance& inst, const std::optional<NoiseModel>& noise = std::nullopt) {
  return generate_tensor(scm_to_factor(inst.scm), inst.sparsity, noise);
}

Outcome identification() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t targets = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t contexts = 5 + seed % 6;   // 5..10
    const std::size_t actions = 6 + seed % 7;    // 6..12
    const Index r = 1 + static_cast<Index>(seed % 4);
    const Index p = std::max<Index>(r, 4 + static_cast<Index>((seed * 7) % 17));  // <= 20
    const auto inst = random_identifiable_instance(contexts, actions, p, r, 0.7, seed);
    const auto gen = realize(inst);
    for (const auto& t : inst.targets) {
      worst = std::max(worst, relative_error(si_a(gen.observed, t.context, t.action).prediction,
                                             gen.truth.at(t.context, t.action)));
      ++targets;
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst < 1e-8 && seconds < 10.0,
          fmt("%zu targets, worst relative error %.2e, %.2f s", targets, worst, seconds)};
}

Outcome factor_oracle() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index p = 2 + static_cast<Index>(seed % 19);
    const Index r = 1 + static_cast<Index>(seed % 5);
    const auto spec = random_scm(context_ids(2), action_ids(3), p, r, 1000 + seed);
    const auto factor = scm_to_factor(spec);
    for (const auto& [c, u] : factor.u_matrices)
      for (const auto& [a, v] : spec.v_vectors) {
        const Vector direct = simulate_scm(spec, c, v);
        worst = std::max(worst, (u * v - direct).norm() / std::max(1.0, direct.norm()));
      }
  }
  return {worst <= 1e-10, fmt("worst scaled error %.2e over 100 specs", worst)};
}

Outcome subspace_discrimination() {
  double worst_tau = 0.0;
  std::size_t accepted = 0, rejected = 0, satisfying = 0, violating = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto good = random_identifiable_instance(8, 10, 8, 3, 0.7, 200 + seed);
    const auto gen = realize(good);
    for (const auto& t : good.targets) {
      const auto d = target_design(gen.observed, t);
      const auto report = subspace_test(d.x_train, d.x_test, 0.1, 1.0);
      worst_tau = std::max(worst_tau, report.tau_hat);
      accepted += !report.rejected && report.tau_hat < 1e-8;
      ++satisfying;
    }
    const auto bad = violating_instance(Violation::Assumption3, InstanceSizes{8, 10, 8, 3}, 300 + seed);
    const auto bad_gen = realize(bad);
    for (const auto& t : bad.targets) {
      const auto d = target_design(bad_gen.observed, t);
      rejected += subspace_test(d.x_train, d.x_test, 0.1, 1.0).rejected;
      ++violating;
    }
  }
  return {accepted == satisfying && rejected == violating,
          fmt("accepted %zu/%zu (max tau %.2e), rejected %zu/%zu", accepted, satisfying, worst_tau, rejected,
              violating)};
}

Outcome fallback_pipeline() {
  std::vector<double> fallback_err, si_a_err, mean_err;
  std::vector<double> violator_fallback, violator_si_a;
  EstimatorConfig config;
  config.energy = 1.0;
  const auto score = [&](const GeneratedTensor& gen, const Pair& t, bool violator) {
    const Vector& truth = gen.truth.at(t.context, t.action);
    const double fb =
        relative_error(impute_with_fallback(gen.observed, t.context, t.action, config).prediction, truth);
    const double sa = relative_error(si_a(gen.observed, t.context, t.action).prediction, truth);
    fallback_err.push_back(fb);
    si_a_err.push_back(sa);
    mean_err.push_back(relative_error(mean_over_actions(gen.observed, t.context, t.action), truth));
    if (violator) {
      violator_fallback.push_back(fb);
      violator_si_a.push_back(sa);
    }
  };
  // 15 satisfying targets and 10 row-space violators.
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto good = random_identifiable_instance(8, 10, 8, 3, 0.7, 400 + seed);
    score(realize(good), good.targets.front(), false);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto bad = violating_instance(Violation::Assumption3, InstanceSizes{8, 10, 8, 3}, 500 + seed);
    score(realize(bad), bad.targets.front(), true);
  }
  const double fb = median(fallback_err), sa = median(si_a_err), mo = median(mean_err);
  return {fb <= std::min(sa, mo),
          fmt("median relative error: fallback %.3g, si_a %.3g, mean_over_actions %.3g "
              "(violators only: fallback %.3g, si_a %.3g)",
              fb, sa, mo, median(violator_fallback), median(violator_si_a))};
}

Outcome hsvt_benefit() {
  int wins = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = random_identifiable_instance(10, 12, 8, 2, 0.8, 100 + s);
    const auto clean = realize(inst);
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (const auto& [key, v] : clean.observed.entries()) {
      sum_sq += v.squaredNorm();
      count += static_cast<std::size_t>(v.size());
    }
    const double sigma = 0.5 * std::sqrt(sum_sq / static_cast<double>(count));
    const auto noisy = realize(inst, NoiseModel{NoiseKind::Additive, sigma, 7000 + s});

    EstimatorConfig plain, denoised;
    denoised.denoise = 0.95;
    double rmse_plain = 0.0, rmse_denoised = 0.0;
    for (const auto& t : inst.targets) {
      const Vector& truth = noisy.truth.at(t.context, t.action);
      rmse_plain += rmse(si_a(noisy.observed, t.context, t.action, plain).prediction, truth);
      rmse_denoised += rmse(si_a(noisy.observed, t.context, t.action, denoised).prediction, truth);
    }
    wins += rmse_denoised < rmse_plain;
  }
  return {wins >= 16, fmt("denoised mean RMSE lower in %d/20 seeds", wins)};
}

Outcome sweep_shape() {
  const auto ctx = context_ids(10);
  const auto act = action_ids(10);
  PairSet all;
  for (const auto& c : ctx)
    for (const auto& a : act) all.insert(Pair{c, a});
  const auto tensor = realize(Instance{random_scm(ctx, act, 12, 3, 61), all, {}}).observed;
  const std::vector<std::size_t> counts = {1, 2, 3, 4, 5};
  const auto grid = donor_sweep(tensor, counts, counts, 3, 17);
  double worst_high = 1.0;
  for (Index i = 2; i < grid.mean_r2.rows(); ++i)
    for (Index j = 2; j < grid.mean_r2.cols(); ++j) worst_high = std::min(worst_high, grid.mean_r2(i, j));
  const double low = grid.mean_r2(0, 0);
  return {worst_high > 1.0 - 1e-6 && low < 0.99,
          fmt("min r2 at (>=3, >=3) = %.12f, r2 at (1, 1) = %.4f", worst_high, low)};
}

Outcome baseline_oracles() {
  std::mt19937_64 engine(90);
  std::bernoulli_distribution keep(0.6);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    ObservationTensor t(5);
    for (const auto& c : context_ids(6))
      for (const auto& a : action_ids(6)) {
        t.add_context(c);
        t.add_action(a);
        if (keep(engine)) t.insert(c, a, gaussian(5, 1, engine).col(0));
      }
    const auto& entries = t.entries();
    for (const auto& c : t.contexts())
      for (const auto& a : t.actions()) {
        Vector by_action = Vector::Zero(5), by_context = Vector::Zero(5);
        int na = 0, nc = 0;
        for (const auto& [key, v] : entries) {
          if (key.context == c && key.action != a) by_action += v, ++na;
          if (key.action == a && key.context != c) by_context += v, ++nc;
        }
        if (na > 0) worst = std::max(worst, (mean_over_actions(t, c, a) - by_action / na).norm());
        if (nc > 0) worst = std::max(worst, (mean_over_contexts(t, c, a) - by_context / nc).norm());
        if (na > 0 && nc > 0)
          worst = std::max(worst, (two_way_mean(t, c, a, 0.5) - 0.5 * (by_action / na + by_context / nc)).norm());
        for (const auto& ref : t.actions()) {
          if (ref == a || !entries.contains(Pair{c, ref})) continue;
          Vector shift = Vector::Zero(5);
          int ns = 0;
          for (const auto& i : t.contexts()) {
            if (i == c || !entries.contains(Pair{i, a}) || !entries.contains(Pair{i, ref})) continue;
            shift += entries.at(Pair{i, a}) - entries.at(Pair{i, ref});
            ++ns;
          }
          if (ns == 0) continue;
          const Vector want = entries.at(Pair{c, ref}) + shift / ns;
          worst = std::max(worst, (fixed_action_effect(t, c, a, ref) - want).norm());
        }
      }
  }

  // Additive data x^{ca} = u_c + w_a is reproduced exactly.
  double additive = 0.0;
  ObservationTensor t(4);
  std::map<std::string, Vector> u, w;
  for (const auto& c : context_ids(5)) u[c] = gaussian(4, 1, engine).col(0);
  for (const auto& a : action_ids(5)) w[a] = gaussian(4, 1, engine).col(0);
  for (const auto& [c, uc] : u)
    for (const auto& [a, wa] : w)
      if (keep(engine) || c == "c0") t.insert(c, a, uc + wa);
  for (const auto& [c, uc] : u)
    for (const auto& [a, wa] : w)
      for (const auto& ref : t.actions_of(c)) {
        try {
          additive = std::max(additive, relative_error(fixed_action_effect(t, c, a, ref), uc + wa));
        } catch (const Error&) {
        }
      }
  return {worst <= 1e-12 && additive <= 1e-12,
          fmt("max deviation from direct summation %.2e, additive fixed-effect error %.2e", worst, additive)};
}

Outcome exhaustive_selection() {
  const auto actions = action_ids(12);  // a00..a10 donors, a11 target
  std::mt19937_64 engine(5);
  std::map<std::string, Matrix> u;
  std::map<std::string, Vector> v;
  for (const auto& a : actions) v[a] = gaussian(3, 1, engine).col(0);
  ObservationTensor t(6);
  const auto add = [&](const std::string& c, const std::string& a) {
    if (!u.contains(c)) u[c] = gaussian(6, 3, engine);
    t.insert(c, a, u[c] * v[a]);
  };
  for (int j = 0; j < 11; ++j) add("target", actions[j]);
  for (int j = 0; j < 12; ++j) add("t000", actions[j]);
  for (int i = 1; i < 100; ++i) {
    const auto name = fmt("t%03d", i);
    for (int j = 0; j < 10; ++j) add(name, actions[j]);
    add(name, "a11");
  }
  const std::vector<ActionId> full_set(actions.begin(), actions.begin() + 11);
  const auto full = evaluate_donor_set(t, "target", "a11", full_set, 0.1, 1.0);
  const auto best = exhaustive_donor_selection(t, "target", "a11", 0.1, 1.0);
  const bool ok = full.training_contexts.size() == 1 && !full.test_report.rejected &&
                  best.training_contexts.size() == 100 && !best.test_report.rejected && best.donors.size() == 10;
  return {ok, fmt("full set |C_train| = %zu, exhaustive |C_train| = %zu with %zu donors", full.training_contexts.size(),
                  best.training_contexts.size(), best.donors.size())};
}

std::string read_file(const fs::path& path) {
  try {
    return io::read_text(path);
  } catch (const Error&) {
    return {};
  }
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "synint_acceptance_determinism";
  fs::remove_all(dir);
  const std::string cli = SYNINT_CLI_PATH;
  const auto run = [&](const std::string& args) { return std::system((cli + " " + args + " 2>/dev/null").c_str()); };
  if (run("simulate --contexts 8 --actions 10 --p 8 --r 3 --noise-sigma 0.2 --seed 3 --output " + dir.string()) != 0)
    return {false, "simulate failed"};
  const std::string args = "evaluate --estimator si_a_fallback --sweep-donors 1,3 --sweep-training 1,3 --seed 11 --input " +
                           (dir / "observed.csv").string() + " --output ";
  if (run(args + (dir / "one").string()) != 0 || run(args + (dir / "two").string()) != 0)
    return {false, "evaluate failed"};
  bool same = true;
  std::size_t bytes = 0;
  for (const auto* name : {"loo.json", "summary.csv", "sweep.json"}) {
    const auto a = read_file(dir / "one" / name), b = read_file(dir / "two" / name);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  fs::remove_all(dir);
  return {same, fmt("loo.json, summary.csv, sweep.json identical across runs (%zu bytes)", bytes)};
}

Outcome pseudoinverse_oracle() {
  std::mt19937_64 engine(2718);
  std::uniform_int_distribution<int> dim(1, 10);
  double worst = 0.0;
  int used = 0;
  while (used < 100) {
    const Index n = dim(engine);
    const Index m = n + dim(engine);
    const Matrix a = gaussian(m, n, engine);
    const auto svd = linalg::thin_svd(a);
    if (svd.s(0) / svd.s(n - 1) > 1e3) continue;  // well-conditioned only
    const Vector b = gaussian(m, 1, engine).col(0);
    const Vector want = (a.transpose() * a).ldlt().solve(a.transpose() * b);
    worst = std::max(worst, relative_error(linalg::pseudoinverse_solve(a, b).weights, want));
    ++used;
  }
  return {worst <= 1e-8, fmt("worst relative deviation %.2e over 100 matrices", worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"identification", identification},
      {"factor form oracle", factor_oracle},
      {"subspace test discrimination", subspace_discrimination},
      {"fallback pipeline", fallback_pipeline},
      {"hsvt benefit", hsvt_benefit},
      {"donor sweep shape", sweep_shape},
      {"baseline oracles", baseline_oracles},
      {"exhaustive donor selection", exhaustive_selection},
      {"determinism", determinism},
      {"pseudoinverse oracle", pseudoinverse_oracle},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("[%s] %2d %s: %s\n", outcome.pass ? "PASS" : "FAIL", index, name, outcome.detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", index - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
