#include "lrgame/harness/record.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace lrgame::harness {

using ordered_json = nlohmann::ordered_json;

ExperimentRecord::ExperimentRecord(const std::vector<std::string>& columns) {
  fields_.reserve(columns.size());
  for (const auto& c : columns) fields_.emplace_back(c, std::monostate{});
}

void ExperimentRecord::set(const std::string& key, Value value) {
  for (auto& [k, v] : fields_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  throw std::logic_error("record has no column '" + key + "'");
}

void ExperimentRecord::append(const std::string& key, Value value) { fields_.emplace_back(key, std::move(value)); }

const Value& ExperimentRecord::at(const std::string& key) const {
  for (const auto& [k, v] : fields_) {
    if (k == key) return v;
  }
  throw std::out_of_range("record has no column '" + key + "'");
}

bool ExperimentRecord::contains(const std::string& key) const {
  for (const auto& f : fields_) {
    if (f.first == key) return true;
  }
  return false;
}

std::vector<std::string> ExperimentRecord::columns() const {
  std::vector<std::string> out;
  for (const auto& f : fields_) out.push_back(f.first);
  return out;
}

namespace {

bool same_value(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return (std::isnan(*x) && std::isnan(y)) || *x == y;
  }
  return a == b;
}

std::string csv_cell(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
      std::string quoted = "\"";
      for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      return quoted + "\"";
    }
  };
  return std::visit(Visitor{}, v);
}

ordered_json to_json(const Value& v) {
  struct Visitor {
    ordered_json operator()(std::monostate) const { return nullptr; }
    ordered_json operator()(bool b) const { return b; }
    ordered_json operator()(std::uint64_t u) const { return u; }
    ordered_json operator()(double d) const {
      if (std::isfinite(d)) return d;
      return format_double(d);  // JSON has no literal for inf or nan
    }
    ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

Value from_json(const ordered_json& j) {
  if (j.is_null()) return std::monostate{};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) return double(j.get<std::int64_t>());
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  throw std::runtime_error("unsupported JSON value in record");
}

}  // namespace

bool operator==(const ExperimentRecord& a, const ExperimentRecord& b) {
  if (a.fields_.size() != b.fields_.size()) return false;
  for (std::size_t i = 0; i < a.fields_.size(); ++i) {
    if (a.fields_[i].first != b.fields_[i].first || !same_value(a.fields_[i].second, b.fields_[i].second)) return false;
  }
  return true;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vector(const VectorX<double>& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ';';
    out += format_double(v(i));
  }
  return out;
}

void emit(const std::vector<ExperimentRecord>& records, Format format, std::ostream& out) {
  if (records.empty()) throw std::invalid_argument("no records to emit");
  const auto header = records.front().columns();
  for (const auto& r : records) {
    if (r.columns() != header) throw std::invalid_argument("records do not share one column set");
  }
  if (format == Format::Csv) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << csv_cell(header[i]);
    out << '\n';
    for (const auto& r : records) {
      const auto& f = r.fields();
      for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << csv_cell(f[i].second);
      out << '\n';
    }
  } else {
    for (const auto& r : records) {
      ordered_json row = ordered_json::object();
      for (const auto& [k, v] : r.fields()) row[k] = to_json(v);
      out << row.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed");
}

void emit(const std::vector<ExperimentRecord>& records, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  emit(records, format, out);
}

std::vector<ExperimentRecord> parse_jsonl(std::istream& in) {
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto row = ordered_json::parse(line);
    ExperimentRecord record;
    for (const auto& item : row.items()) record.append(item.key(), from_json(item.value()));
    out.push_back(std::move(record));
  }
  return out;
}

}  // namespace lrgame::harness
