#include "qkde/table_io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qkde/config.hpp"
#include "qkde/error.hpp"

namespace qkde::app {

namespace {

std::string strip(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool to_double(const std::string& cell, double& out) {
    const std::string s = strip(cell);
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<DataPoint> parse_table(const std::string& text, const std::string& origin) {
    std::stringstream in(text);
    std::string line;
    int number = 0;
    bool header_seen = false;
    std::vector<DataPoint> rows;
    while (std::getline(in, line)) {
        ++number;
        if (strip(line).empty()) continue;
        if (!header_seen) {
            std::string h;
            for (char ch : line) {
                if (ch != ' ' && ch != '\t' && ch != '\r') h += ch;
            }
            if (h != "x,f") throw IoError(origin + ":" + std::to_string(number) + ": expected header 'x,f'");
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        DataPoint p;
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos ||
            !to_double(line.substr(0, comma), p.x) || !to_double(line.substr(comma + 1), p.f)) {
            throw IoError(origin + ":" + std::to_string(number) + ": malformed row '" + strip(line) + "'");
        }
        if (!rows.empty() && !(p.x > rows.back().x)) {
            throw DataError(origin + ":" + std::to_string(number) + ": x values must be strictly ascending");
        }
        rows.push_back(p);
    }
    if (!header_seen) throw IoError(origin + ": empty table");
    if (rows.empty()) throw DataError(origin + ": table has no data rows");
    return rows;
}

std::vector<DataPoint> load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read data file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_table(buf.str(), path);
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << content;
    out.close();
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string csv_row(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_number(values[i]);
    }
    return out;
}

}  // namespace qkde::app
