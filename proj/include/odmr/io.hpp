#pragma once

#include <string>

#include <json.hpp>

#include "odmr/fitting.hpp"
#include "odmr/geometry.hpp"
#include "odmr/hamiltonian.hpp"
#include "odmr/inversion.hpp"
#include "odmr/spectrum.hpp"

namespace odmr {

using json = nlohmann::json;

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

// All writers go through a temp file in the target directory plus rename, so
// readers never observe a partial file. They throw io_error on failure.
void write_text_atomic(const std::string& path, const std::string& content);

// Columns: frequency_mhz,signal. LF line endings.
void write_spectrum_csv(const std::string& path, const SyntheticSpectrum& s);

// Parses a two-column spectrum CSV; validates the header, the column count
// and numeric fields per row (csv_format_error names the offending line),
// and requires a uniformly spaced, increasing frequency column.
SyntheticSpectrum read_spectrum_csv(const std::string& path);

// First row: blank corner cell then the phi grid; each following row starts
// with its theta value. Cells are integer dip counts.
void write_heatmap_csv(const std::string& path, const DipCountMap& map);

// Standalone SVG rendering of the dip-count map with a discrete palette.
std::string heatmap_svg(const DipCountMap& map);

// JSON document with schema_version, a config echo block, and a result block.
json make_document(const json& config, const json& result);
void write_json_atomic(const std::string& path, const json& doc);

void to_json(json& j, const FieldVector& v);
void to_json(json& j, const ProjectionSet& p);
void to_json(json& j, const TransitionPair& t);
void to_json(json& j, const TransitionTable& t);
void to_json(json& j, const CaseClassification& c);
void to_json(json& j, const PeakGuess& p);
void to_json(json& j, const FitResult& r);
void to_json(json& j, const FieldCandidate& c);
void to_json(json& j, const InversionResult& r);

}  // namespace odmr
