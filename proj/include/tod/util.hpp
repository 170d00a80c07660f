#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tod {

using json = nlohmann::ordered_json;

namespace util {

std::string lower(std::string s);
std::string trim(const std::string& s);
std::string collapse_ws(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
std::string join(const std::vector<std::string>& parts, const std::string& sep);
std::string replace_all(std::string s, const std::string& from, const std::string& to);
bool starts_with(const std::string& s, const std::string& prefix);

// "9:16" / "09:16" / "24:35" -> minutes since midnight; nullopt when not a time.
std::optional<int> time_minutes(const std::string& s);
// Zero-pads the hour of a time-shaped string; returns the input untouched otherwise.
std::string pad_time(const std::string& s);

// Round half up to one decimal place (metrics are non-negative).
double round1(double x);
std::string format1(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
bool file_exists(const std::string& path);

uint64_t fnv1a(const std::string& s);

// Root of the bundled data assets: $TOD_DATA_DIR when set, else the build-time default.
std::string data_dir();

}  // namespace util
}  // namespace tod
