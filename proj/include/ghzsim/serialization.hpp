// JSON and CSV encodings for records, configurations and results. Every
// floating-point value is written with 17 significant digits.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzsim/estimation.hpp"
#include "ghzsim/measurement.hpp"
#include "ghzsim/sources.hpp"

namespace ghz {

using Json = nlohmann::ordered_json;

/// "%.17g"; non-finite values become "nan" / "inf" / "-inf".
std::string format_double(double v);

/// Serializes with `indent` spaces, doubles via format_double (non-finite
/// doubles become null). Keys keep insertion order.
std::string dump_json(const Json& j, int indent = 2);

Json to_json(const Estimate& e);
Json to_json(const CountRecord& r);
Json to_json(const WitnessResult& w);
Json to_json(const SinusoidFit& f);
Json to_json(const SourceConfig& c);
/// {"real": [[...]], "imag": [[...]]}
Json matrix_to_json(const CMatrix& m);

/// Schema: {"setting": "XXX", "counts": {"+++": n, ...}, "duration": s,
/// "metadata": {...}}. Outcomes missing from "counts" are zero; unknown
/// outcome labels throw.
CountRecord count_record_from_json(const nlohmann::json& j);
std::vector<CountRecord> count_records_from_json(const nlohmann::json& j);

/// Minimal CSV table with one header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> cells);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ghz
