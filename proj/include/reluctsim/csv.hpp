#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace reluctsim::csv {

/// Numeric columns keyed by header name.
struct Table {
  std::vector<std::string> header;
  std::map<std::string, std::vector<double>> columns;
  std::size_t rows = 0;

  bool has(const std::string& name) const { return columns.count(name) != 0; }
  const std::vector<double>& at(const std::string& name) const;
};

/// Reads a comma-separated numeric table with a header line. Every column in
/// `required` must be present; columns outside required/optional are
/// rejected. Errors carry the file name and 1-based line number.
Table read(const std::filesystem::path& path, const std::vector<std::string>& required,
           const std::vector<std::string>& optional = {});
Table parse(const std::string& text, const std::string& source,
            const std::vector<std::string>& required, const std::vector<std::string>& optional = {});

/// Shortest round-trip decimal representation.
std::string format(double v);

}  // namespace reluctsim::csv
