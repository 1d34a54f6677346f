#pragma once

// File formats shared by the command-line tool:
//   long CSV   header `context,action,f1,...,fp`, one row per measurement;
//              replicate rows of a pair are averaged on ingestion.
//   tensor JSON {"p": p, "entries": [{"context", "action", "values"}]}
// plus JSON encoders for every report type.

#include "synint/diagnostics.hpp"
#include "synint/estimators.hpp"
#include "synint/evaluation.hpp"
#include "synint/scm_sim.hpp"
#include "synint/tensor_store.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace synint::io {

using Json = nlohmann::ordered_json;

enum class Format { LongCsv, Json };

Format parse_format(std::string_view name);
/// `.json` means JSON, anything else long CSV.
Format format_for_path(const std::filesystem::path& path);

ObservationTensor read_long_csv(std::istream& in);
void write_long_csv(std::ostream& out, const ObservationTensor& tensor);
/// Writes only the listed pairs (used for prediction files).
void write_long_csv(std::ostream& out, Index p, const std::map<Pair, Vector>& rows);

Json tensor_to_json(const ObservationTensor& tensor);
ObservationTensor tensor_from_json(const Json& json);

ObservationTensor ingest(const std::filesystem::path& path, Format format);
ObservationTensor ingest(const std::filesystem::path& path);
void export_tensor(const std::filesystem::path& path, const ObservationTensor& tensor, Format format);

Json to_json(const SubspaceTestReport& report);
Json to_json(const DonorSelection& selection);
Json to_json(const RegressionArtifacts& artifacts, bool include_matrices = false);
Json to_json(const ImputationReport& report, bool include_matrices = false);
Json to_json(const SpectrumReport& report);
Json to_json(const LooResult& result, bool include_timing = false);
Json to_json(const SweepGrid& grid);
Json to_json(const TandemResult& result);
Json to_json(const NoiseModel& noise);

/// Ground-truth document: SCM, factor loadings, full truth tensor, observed
/// pairs and targets.
Json instance_to_json(const Instance& instance, const GeneratedTensor& generated,
                      const std::optional<NoiseModel>& noise);
Instance instance_from_json(const Json& json);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace synint::io
