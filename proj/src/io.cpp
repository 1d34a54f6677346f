#include "synint/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace synint::io {

namespace {

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

Json matrix_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

Vector vector_from(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = j.at(k).get<double>();
  return v;
}

Matrix matrix_from(const Json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j.at(i);
    if (static_cast<Index>(row.size()) != cols) throw Error(ErrorKind::Parse, "ragged matrix in JSON");
    for (std::size_t k = 0; k < row.size(); ++k) m(static_cast<Index>(i), static_cast<Index>(k)) = row.at(k).get<double>();
  }
  return m;
}

Json pair_json(const Pair& p) { return Json::array({p.context, p.action}); }

// Non-finite reals become null; JSON has no encoding for them.
Json real(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string parse_error(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "long-csv" || name == "csv") return Format::LongCsv;
  if (name == "json") return Format::Json;
  throw Error(ErrorKind::InvalidArgument, "unknown format '" + std::string(name) + "'");
}

Format format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".json" ? Format::Json : Format::LongCsv;
}

ObservationTensor read_long_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (line_no == 0 || trim(line).empty()) throw Error(ErrorKind::Parse, "empty CSV input");
  {
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "context" || header[1] != "action") {
      throw Error(ErrorKind::Parse, parse_error(line_no, "header must be context,action,f1,...,fp"));
    }
    columns = header.size();
  }
  const Index p = static_cast<Index>(columns - 2);

  std::map<Pair, std::pair<Vector, std::size_t>> sums;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != columns) {
      throw Error(ErrorKind::Parse, parse_error(line_no, "expected " + std::to_string(columns) + " fields, got " +
                                                             std::to_string(fields.size())));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorKind::Parse, parse_error(line_no, "empty context or action identifier"));
    }
    Vector values(p);
    for (Index k = 0; k < p; ++k) {
      const auto field = fields[static_cast<std::size_t>(k) + 2];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw Error(ErrorKind::Parse, parse_error(line_no, "non-numeric feature '" + std::string(field) + "'"));
      }
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, parse_error(line_no, "non-finite feature"));
      values(k) = v;
    }
    auto& slot = sums[Pair{std::string(fields[0]), std::string(fields[1])}];
    if (slot.second == 0) slot.first = Vector::Zero(p);
    slot.first += values;
    ++slot.second;
  }

  ObservationTensor tensor(p);
  for (const auto& [pair, acc] : sums) {
    tensor.insert(pair.context, pair.action, acc.first / static_cast<double>(acc.second));
  }
  return tensor;
}

void write_long_csv(std::ostream& out, Index p, const std::map<Pair, Vector>& rows) {
  out << "context,action";
  for (Index k = 1; k <= p; ++k) out << ",f" << k;
  out << '\n';
  for (const auto& [pair, v] : rows) {
    out << pair.context << ',' << pair.action;
    for (Index k = 0; k < v.size(); ++k) out << ',' << format_real(v(k));
    out << '\n';
  }
}

void write_long_csv(std::ostream& out, const ObservationTensor& tensor) {
  write_long_csv(out, tensor.dim(), tensor.entries());
}

Json tensor_to_json(const ObservationTensor& tensor) {
  Json entries = Json::array();
  for (const auto& [pair, v] : tensor.entries()) {
    entries.push_back(Json{{"context", pair.context}, {"action", pair.action}, {"values", vector_json(v)}});
  }
  return Json{{"p", tensor.dim()},
              {"contexts", Json(std::vector<std::string>(tensor.contexts().begin(), tensor.contexts().end()))},
              {"actions", Json(std::vector<std::string>(tensor.actions().begin(), tensor.actions().end()))},
              {"entries", std::move(entries)}};
}

ObservationTensor tensor_from_json(const Json& json) {
  try {
    ObservationTensor tensor(json.at("p").get<Index>());
    if (json.contains("contexts"))
      for (const auto& c : json.at("contexts")) tensor.add_context(c.get<std::string>());
    if (json.contains("actions"))
      for (const auto& a : json.at("actions")) tensor.add_action(a.get<std::string>());
    for (const auto& e : json.at("entries")) {
      const auto& values = e.at("values");
      if (static_cast<Index>(values.size()) != tensor.dim()) {
        throw Error(ErrorKind::Parse, "entry (" + e.at("context").get<std::string>() + ", " +
                                          e.at("action").get<std::string>() + ") does not have p values");
      }
      tensor.insert(e.at("context").get<std::string>(), e.at("action").get<std::string>(), vector_from(values));
    }
    return tensor;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed tensor JSON: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << text;
}

ObservationTensor ingest(const std::filesystem::path& path, Format format) {
  if (format == Format::Json) {
    const auto text = read_text(path);
    Json json;
    try {
      json = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
    }
    // A ground-truth document carries the observed tensor under "observed".
    return tensor_from_json(json.contains("observed") ? json.at("observed") : json);
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return read_long_csv(in);
}

ObservationTensor ingest(const std::filesystem::path& path) { return ingest(path, format_for_path(path)); }

void export_tensor(const std::filesystem::path& path, const ObservationTensor& tensor, Format format) {
  if (format == Format::Json) {
    write_text(path, tensor_to_json(tensor).dump(2) + "\n");
    return;
  }
  std::ostringstream out;
  write_long_csv(out, tensor);
  write_text(path, out.str());
}

Json to_json(const SubspaceTestReport& r) {
  return Json{{"tau_hat", real(r.tau_hat)}, {"rank_test", r.rank_test}, {"rank_train", r.rank_train},
              {"rho", r.rho},             {"threshold", r.threshold}, {"rejected", r.rejected},
              {"degenerate", r.degenerate}};
}

Json to_json(const DonorSelection& s) {
  return Json{{"strategy", std::string(to_string(s.strategy))},
              {"donors", s.donors},
              {"training_contexts", s.training_contexts},
              {"test", to_json(s.test_report)}};
}

Json to_json(const RegressionArtifacts& a, bool include_matrices) {
  Json out{{"axis", a.axis == RegressionAxis::Actions ? "actions" : "contexts"},
           {"donors", a.donors},
           {"training", a.training},
           {"beta", vector_json(a.beta)},
           {"rank", a.rank},
           {"degenerate", a.degenerate}};
  if (include_matrices) {
    out["x_train"] = matrix_json(a.x_train);
    out["y_train"] = vector_json(a.y_train);
    out["x_test"] = matrix_json(a.x_test);
  }
  return out;
}

Json to_json(const ImputationReport& r, bool include_matrices) {
  Json out{{"context", r.target.context},
           {"action", r.target.action},
           {"estimator_used", r.estimator_used},
           {"fell_back", r.fell_back},
           {"prediction", vector_json(r.prediction)}};
  if (r.fell_back) out["fallback_reason"] = r.fallback_reason;
  if (r.test_report) out["test"] = to_json(*r.test_report);
  if (r.artifacts) out["artifacts"] = to_json(*r.artifacts, include_matrices);
  return out;
}

Json to_json(const SpectrumReport& r) {
  Json ranks = Json::array();
  for (std::size_t k = 0; k < r.energies.size(); ++k) {
    ranks.push_back(Json{{"energy", r.energies[k]}, {"effective_rank", r.effective_ranks[k]}});
  }
  return Json{{"rows", r.rows}, {"cols", r.cols}, {"singular_values", vector_json(r.singular_values)},
              {"effective_ranks", std::move(ranks)}};
}

namespace {

Json summary_json(const LooSummary& s) {
  return Json{{"count", s.count},
              {"median_r2", real(s.median_r2)},
              {"mean_r2", real(s.mean_r2)},
              {"median_rmse", real(s.median_rmse)},
              {"mean_rmse", real(s.mean_rmse)}};
}

}  // namespace

Json to_json(const LooResult& result, bool include_timing) {
  Json records = Json::array();
  for (const auto& rec : result.per_pair) {
    Json j{{"context", rec.pair.context}, {"action", rec.pair.action}};
    if (rec.skip_reason.empty()) {
      j["r2"] = real(*rec.r2);
      j["rmse"] = real(*rec.rmse);
      j["estimator_used"] = rec.estimator_used;
      j["fell_back"] = rec.fell_back;
      if (rec.zero_variance_truth) j["zero_variance_truth"] = true;
    } else {
      j["skip_reason"] = rec.skip_reason;
    }
    if (include_timing) j["runtime_seconds"] = rec.runtime_seconds;
    records.push_back(std::move(j));
  }
  Json by_used = Json::object();
  for (const auto& [name, s] : result.by_estimator_used) by_used[name] = summary_json(s);
  return Json{{"estimator", result.estimator},
              {"summary", summary_json(result.summary)},
              {"by_estimator_used", std::move(by_used)},
              {"skipped", result.skipped},
              {"per_pair", std::move(records)}};
}

Json to_json(const SweepGrid& grid) {
  return Json{{"donor_counts", grid.donor_counts},
              {"training_counts", grid.training_counts},
              {"pairs", grid.pairs},
              {"mean_r2", matrix_json(grid.mean_r2)}};
}

Json to_json(const TandemResult& result) {
  Json rounds = Json::array();
  for (const auto& r : result.rounds) {
    rounds.push_back(Json{{"round", r.round},
                          {"imputed_by_si_a", r.imputed_by_si_a},
                          {"imputed_by_si_c", r.imputed_by_si_c},
                          {"newly_filled", r.newly_filled},
                          {"max_relative_change", real(r.max_relative_change)}});
  }
  Json synthetic = Json::array();
  for (const auto& p : result.synthetic) synthetic.push_back(pair_json(p));
  Json unimputable = Json::array();
  for (const auto& p : result.unimputable) unimputable.push_back(pair_json(p));
  return Json{{"converged", result.converged},
              {"rounds", std::move(rounds)},
              {"synthetic", std::move(synthetic)},
              {"unimputable", std::move(unimputable)}};
}

Json to_json(const NoiseModel& noise) {
  return Json{{"kind", noise.kind == NoiseKind::Additive ? "additive" : "multiplicative"},
              {"sigma", noise.sigma},
              {"seed", noise.seed}};
}

Json instance_to_json(const Instance& instance, const GeneratedTensor& generated,
                      const std::optional<NoiseModel>& noise) {
  const auto& scm = instance.scm;
  Json a = Json::object(), b = Json::object(), v = Json::object(), u = Json::object();
  for (const auto& [c, m] : scm.a_matrices) a[c] = matrix_json(m);
  for (const auto& [c, m] : scm.b_matrices) b[c] = matrix_json(m);
  for (const auto& [k, vec] : scm.v_vectors) v[k] = vector_json(vec);
  for (const auto& [c, m] : scm_to_factor(scm).u_matrices) u[c] = matrix_json(m);
  Json observed_pairs = Json::array();
  for (const auto& p : instance.sparsity) observed_pairs.push_back(pair_json(p));
  Json targets = Json::array();
  for (const auto& p : instance.targets) targets.push_back(pair_json(p));
  return Json{{"p", scm.p},
              {"r", scm.r},
              {"dag_order", scm.dag_order},
              {"scm", Json{{"a_matrices", std::move(a)}, {"b_matrices", std::move(b)}, {"v_vectors", std::move(v)}}},
              {"u_matrices", std::move(u)},
              {"noise", noise ? to_json(*noise) : Json(nullptr)},
              {"observed_pairs", std::move(observed_pairs)},
              {"targets", std::move(targets)},
              {"truth", tensor_to_json(generated.truth)},
              {"observed", tensor_to_json(generated.observed)}};
}

Instance instance_from_json(const Json& json) {
  try {
    Instance inst;
    inst.scm.p = json.at("p").get<Index>();
    inst.scm.r = json.at("r").get<Index>();
    inst.scm.dag_order = json.at("dag_order").get<std::vector<Index>>();
    const auto& scm = json.at("scm");
    for (const auto& [c, m] : scm.at("a_matrices").items()) inst.scm.a_matrices[c] = matrix_from(m, inst.scm.p);
    for (const auto& [c, m] : scm.at("b_matrices").items()) inst.scm.b_matrices[c] = matrix_from(m, inst.scm.r);
    for (const auto& [k, vec] : scm.at("v_vectors").items()) inst.scm.v_vectors[k] = vector_from(vec);
    for (const auto& p : json.at("observed_pairs")) inst.sparsity.insert(Pair{p.at(0).get<std::string>(), p.at(1).get<std::string>()});
    for (const auto& p : json.at("targets")) inst.targets.push_back(Pair{p.at(0).get<std::string>(), p.at(1).get<std::string>()});
    inst.scm.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed instance JSON: ") + e.what());
  }
}

}  // namespace synint::io
