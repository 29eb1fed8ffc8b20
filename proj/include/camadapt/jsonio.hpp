#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "camadapt/types.hpp"

namespace camadapt {

/// Insertion-ordered JSON so emitted documents are byte-stable.
using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m);       // row-major nested arrays
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

/// Write text atomically-ish (single ofstream, LF line endings as given).
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

}  // namespace camadapt
