#include "mlpf/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace mlpf::csv {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

double to_double(const std::string& field, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("unparseable number '" + field + "' in " + context);
  }
}

Writer::Writer(const std::string& path, const std::string& preamble)
    : out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  if (!preamble.empty()) {
    std::istringstream lines(preamble);
    std::string line;
    while (std::getline(lines, line)) out_ << "# " << line << "\n";
  }
}

void Writer::header(const std::vector<std::string>& names) { row(names); }

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

std::vector<std::vector<std::string>> read(
    const std::string& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (!header_seen) {
      header_seen = true;
      if (!expected_header.empty() && fields != expected_header)
        throw std::runtime_error("unexpected header in '" + path + "'");
      if (!expected_header.empty()) continue;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<std::string> read_preamble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) lines.push_back(line.substr(2));
    else if (line.rfind("#", 0) == 0) lines.push_back(line.substr(1));
    else break;
  }
  return lines;
}

}  // namespace mlpf::csv
