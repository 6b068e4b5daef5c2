#pragma once

#include <string>

#include <json.hpp>

namespace seqtune {

using Json = nlohmann::ordered_json;

/// Double formatted with 17 significant digits: enough for a lossless
/// round-trip of any value.
std::string format_double(double v);

/// Serialize with format_double applied to every floating-point value and
/// key order preserved, so identical documents produce identical bytes.
/// Non-finite values become null (JSON has no literal for them).
std::string dump_json(const Json& j, int indent = 2);

void write_text_file(const std::string& path, const std::string& content);
Json read_json_file(const std::string& path);

}  // namespace seqtune
