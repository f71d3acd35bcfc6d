#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lrgame/harness/config.hpp"

namespace lrgame::harness {

/// monostate marks a column that a failed cell could not fill. Counts and
/// seeds share the unsigned alternative so JSON round-trips are exact.
using Value = std::variant<std::monostate, bool, std::uint64_t, double, std::string>;

/// Ordered key/value row.
class ExperimentRecord {
 public:
  ExperimentRecord() = default;
  explicit ExperimentRecord(const std::vector<std::string>& columns);

  void set(const std::string& key, Value value);
  void append(const std::string& key, Value value);
  const Value& at(const std::string& key) const;
  bool contains(const std::string& key) const;

  const std::vector<std::pair<std::string, Value>>& fields() const { return fields_; }
  std::vector<std::string> columns() const;

  friend bool operator==(const ExperimentRecord& a, const ExperimentRecord& b);

 private:
  std::vector<std::pair<std::string, Value>> fields_;
};

std::string format_double(double v);
std::string format_vector(const VectorX<double>& v);

void emit(const std::vector<ExperimentRecord>& records, Format format, std::ostream& out);
void emit(const std::vector<ExperimentRecord>& records, Format format, const std::string& path);
std::vector<ExperimentRecord> parse_jsonl(std::istream& in);

}  // namespace lrgame::harness
