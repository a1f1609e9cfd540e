#pragma once

#include <string>
#include <vector>

namespace qkde::app {

struct DataPoint {
    double x = 0.0;
    double f = 0.0;
};

/// CSV with header `x,f`, ascending x. Throws IoError for a missing file or malformed row
/// (message names the line) and DataError for non-ascending x.
[[nodiscard]] std::vector<DataPoint> load_table(const std::string& path);
[[nodiscard]] std::vector<DataPoint> parse_table(const std::string& text, const std::string& origin = "<text>");

/// Writes `content` to `path`, creating parent directories. Throws IoError on failure.
void write_text_file(const std::string& path, const std::string& content);

/// Joins numbers with commas using the round-trip number format.
[[nodiscard]] std::string csv_row(const std::vector<double>& values);

}  // namespace qkde::app
