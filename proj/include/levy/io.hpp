#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace levy {

/// Shortest round-trip decimal form of v.
std::string format_double(double v);

/// Joins already formatted fields with commas and a trailing newline.
std::string csv_row(const std::vector<std::string>& fields);

/// Reads a numeric CSV with a header line; returns the rows.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::vector<std::string>* header = nullptr);

void write_text_file(const std::string& path, std::string_view text);

}  // namespace levy
