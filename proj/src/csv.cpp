#include "reluctsim/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "reluctsim/errors.hpp"

namespace reluctsim::csv {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << source << ":" << line << ": " << what;
  throw InvalidArgument(msg.str());
}

}  // namespace

const std::vector<double>& Table::at(const std::string& name) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw InvalidArgument("missing CSV column '" + name + "'");
  return it->second;
}

Table parse(const std::string& text, const std::string& source,
            const std::vector<std::string>& required, const std::vector<std::string>& optional) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Table t;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) fail(source, lineno, "empty file, expected a header line");
  t.header = split(line);
  for (const auto& name : t.header) {
    const bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                       std::find(optional.begin(), optional.end(), name) != optional.end();
    if (!known) fail(source, lineno, "unexpected column '" + name + "'");
    if (t.columns.count(name)) fail(source, lineno, "duplicate column '" + name + "'");
    t.columns[name];
  }
  for (const auto& name : required) {
    if (!t.columns.count(name)) fail(source, lineno, "missing required column '" + name + "'");
  }

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      fail(source, lineno, "expected " + std::to_string(t.header.size()) + " fields, found " +
                               std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      const char* first = cells[c].data();
      const char* last = first + cells[c].size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || cells[c].empty()) {
        fail(source, lineno, "field '" + t.header[c] + "' is not a number: '" + cells[c] + "'");
      }
      if (!std::isfinite(v)) fail(source, lineno, "field '" + t.header[c] + "' is not finite");
      t.columns[t.header[c]].push_back(v);
    }
    ++t.rows;
  }
  return t;
}

Table read(const std::filesystem::path& path, const std::vector<std::string>& required,
           const std::vector<std::string>& optional) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string(), required, optional);
}

std::string format(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace reluctsim::csv
