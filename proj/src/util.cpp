#include "tod/util.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tod/error.hpp"

namespace tod {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::UnknownAction: return "UnknownAction";
    case ErrorKind::UnknownLastTool: return "UnknownLastTool";
    case ErrorKind::UnknownSlot: return "UnknownSlot";
    case ErrorKind::ValueNotInClosedSet: return "ValueNotInClosedSet";
    case ErrorKind::ParametersNotJson: return "ParametersNotJson";
    case ErrorKind::InformationNotList: return "InformationNotList";
    case ErrorKind::SchemaDomainMismatch: return "SchemaDomainMismatch";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::MissingRouteEndpoints: return "MissingRouteEndpoints";
    case ErrorKind::FileMissing: return "FileMissing";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::BackendError: return "BackendError";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::HttpStatus: return "HttpStatus";
    case ErrorKind::NoScriptMatch: return "NoScriptMatch";
    case ErrorKind::OracleMissingAnnotation: return "OracleMissingAnnotation";
    case ErrorKind::EmptyCompletion: return "EmptyCompletion";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorKind::MissingPrediction: return "MissingPrediction";
    case ErrorKind::StageError: return "StageError";
    case ErrorKind::NoCorruptionPossible: return "NoCorruptionPossible";
    case ErrorKind::InsufficientPool: return "InsufficientPool";
    case ErrorKind::ThresholdOutOfRange: return "ThresholdOutOfRange";
    case ErrorKind::MissingGoldState: return "MissingGoldState";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

namespace util {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool in_ws = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_ws = true;
      continue;
    }
    if (in_ws && !out.empty()) out.push_back(' ');
    in_ws = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  if (from.empty()) return s;
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

std::optional<int> time_minutes(const std::string& s) {
  const std::string t = trim(s);
  size_t colon = t.find(':');
  if (colon == std::string::npos || colon == 0 || colon > 2) return std::nullopt;
  if (t.size() != colon + 3) return std::nullopt;
  for (size_t i = 0; i < t.size(); ++i) {
    if (i == colon) continue;
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
  }
  int h = std::stoi(t.substr(0, colon));
  int m = std::stoi(t.substr(colon + 1));
  if (m > 59) return std::nullopt;
  return h * 60 + m;
}

std::string pad_time(const std::string& s) {
  const std::string t = trim(s);
  if (!time_minutes(t)) return s;
  if (t.find(':') == 1) return "0" + t;
  return t;
}

double round1(double x) {
  // The +1e-9 absorbs binary representation error in sums like 82.85 + 14.8,
  // which would otherwise land a hair below the .5 tie and round down.
  return std::floor(x * 10.0 + 0.5 + 1e-9) / 10.0;
}

std::string format1(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", round1(x));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TodError(ErrorKind::FileMissing, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TodError(ErrorKind::Io, "cannot open for writing: " + path);
  out << content;
  if (!out) throw TodError(ErrorKind::Io, "write failed: " + path);
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string data_dir() {
  if (const char* env = std::getenv("TOD_DATA_DIR"); env && *env) return env;
#ifdef TOD_DATA_DIR
  return TOD_DATA_DIR;
#else
  return "data";
#endif
}

}  // namespace util
}  // namespace tod
