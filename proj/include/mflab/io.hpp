#pragma once

// Artifact writers and readers: study JSON/CSV/SVG, empirical laws as CSV,
// laws of laws as a JSON manifest over law CSVs. All numbers are written in
// shortest round-trip form so reruns are byte-identical.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "mflab/analysis.hpp"
#include "mflab/pathspace.hpp"

namespace mflab {

using Json = nlohmann::ordered_json;

/// Shortest decimal that parses back to x; "nan", "inf", "-inf" otherwise.
std::string format_number(double x);

/// Finite numbers as JSON numbers, non-finite ones as null.
Json json_number(double x);

Json study_to_json(const ConvergenceStudy& study);
std::string study_csv(const ConvergenceStudy& study);
/// Log-log line chart of stat (with +-2 SE bars) against n. The SVG embeds
/// the plotted rows in a <metadata> data block.
std::string study_svg(const ConvergenceStudy& study);

/// Writes study.json, study.csv and (optionally) study.svg into `dir`.
void write_study(const ConvergenceStudy& study, const std::filesystem::path& dir, bool svg = true);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Layout: optional "# key=value" comment lines, then the header
/// atom,mode,weight,t_0,...,t_N and one row per (atom, mode).
std::string law_csv(const EmpiricalLaw& law, const std::string& config_hash = "");
void write_law_csv(const EmpiricalLaw& law, const std::filesystem::path& path,
                   const std::string& config_hash = "");
EmpiricalLaw parse_law_csv(const std::string& text);
EmpiricalLaw read_law_csv(const std::filesystem::path& path);

/// Writes <stem>.json listing weights and atom files <stem>_<i>.csv.
void write_metalaw(const MetaLaw& meta, const std::filesystem::path& dir, const std::string& stem,
                   const std::string& config_hash = "");
MetaLaw read_metalaw(const std::filesystem::path& manifest);

}  // namespace mflab
