#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace mlpf::csv {

/// Deterministic double formatting (shortest round-trip via %.17g).
std::string fmt(double v);
std::string fmt(std::uint64_t v);
std::string fmt(int v);

double to_double(const std::string& field, const std::string& context);

/// Line-oriented CSV writer: optional '#'-prefixed preamble block, one
/// header row, LF endings, no quoting.
class Writer {
 public:
  Writer(const std::string& path, const std::string& preamble = {});
  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

/// Read a CSV written by Writer (or any comma-separated file without
/// quoting). Comment lines starting with '#' are skipped. When
/// expected_header is non-empty the header must match it exactly.
std::vector<std::vector<std::string>> read(
    const std::string& path,
    const std::vector<std::string>& expected_header = {});

/// The '#'-prefixed preamble lines of a file, with the prefix stripped.
std::vector<std::string> read_preamble(const std::string& path);

}  // namespace mlpf::csv
