#include <sstream>

#include "doctest.h"
#include "lrgame/harness/config.hpp"
#include "lrgame/harness/record.hpp"
#include "lrgame/harness/runner.hpp"

using namespace lrgame::harness;

namespace {

const char* kInstanceB = R"({
  "schema_version": 1,
  "experiment": "pos",
  "instance": {"features": [[1], [1]], "inherent_variance": 1.0},
  "costs": {"c": 1.0, "k": 2.0}
})";

const char* kRandomEquilibrium = R"({
  "schema_version": 1,
  "experiment": "equilibrium",
  "seed": 99,
  "cells": 6,
  "instance": {"generator": {"n": 5, "d": 2}},
  "costs": {"c_range": [0.2, 3.0], "k": 3.0}
})";

std::string config_error_path(const std::string& text, std::optional<Experiment> expected = std::nullopt) {
  try {
    parse_config(text, expected);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<accepted>";
}

std::string emitted(const std::vector<ExperimentRecord>& records, Format format) {
  std::ostringstream out;
  emit(records, format, out);
  return out.str();
}

double number(const ExperimentRecord& r, const std::string& key) { return std::get<double>(r.at(key)); }

}  // namespace

TEST_CASE("config validation reports field paths") {
  CHECK(config_error_path("{") == "$");
  CHECK(config_error_path(R"({"experiment": "pos"})") == "schema_version");
  CHECK(config_error_path(R"({"schema_version": 3, "experiment": "pos"})") == "schema_version");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "nash"})") == "experiment");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1],[1]]},
      "costs": {"c": 1, "k": 2}, "sovler": {}})") == "sovler");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos",
      "instance": {"generator": {"n": 3, "d": 1, "dist": "gaussian"}}, "costs": {"c": 1, "k": 2}})") ==
        "instance.generator.dist");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1],[1, 2]]},
      "costs": {"c": 1, "k": 2}})") == "instance.features[1]");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1],[1]]},
      "costs": {"per_player": [{"c": 1, "k": 2}, {"c": -1, "k": 2}]}})") == "costs.per_player[1].c");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1],[1]]},
      "costs": {"c": 1, "k": 0.5}})") == "costs.k");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1],[1]]}})") ==
        "costs");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "aitken", "instance": {"features": [[1],[1]]},
      "costs": {"c": 1, "k": 2}})") == "estimator");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "aitken", "instance": {"features": [[1],[1]]},
      "costs": {"c": 1, "k": 2}, "scalarization": "frobenius2", "estimator": {"d_norm": 1}})") == "scalarization");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "aitken", "instance": {"features": [[1],[1]]},
      "costs": {"c": 1, "k": 2}, "estimator": {"null_matrix": [[1],[0]]}})") == "estimator.null_matrix");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "pos", "instance": {"features": [[1,2],[2,4]]},
      "costs": {"c": 1, "k": 2}})") == "instance.features");
  CHECK(config_error_path(R"({"schema_version": 1, "seed": -4, "experiment": "pos", "instance": {"features": [[1]]},
      "costs": {"c": 1, "k": 2}})") == "seed");
  CHECK(config_error_path(R"({"schema_version": 1, "experiment": "montecarlo", "instance": {"features": [[1]]}})") ==
        "instance.true_model");
  CHECK(config_error_path(kInstanceB, Experiment::Sweep) == "experiment");
  CHECK(config_error_path(kInstanceB, Experiment::Pos) == "<accepted>");
}

TEST_CASE("pos on Instance B gives one row") {
  const auto result = run(parse_config(kInstanceB));
  REQUIRE(result.records.size() == 1);
  CHECK(result.failed_cells == 0);
  const auto& row = result.records.front();
  CHECK(number(row, "pos") == doctest::Approx(1.049934208246).epsilon(1e-9));
  CHECK(number(row, "bound") == doctest::Approx(1.259921049895).epsilon(1e-11));
  CHECK(std::get<std::string>(row.at("bound_source")) == "monomial_f1");
  CHECK(std::get<bool>(row.at("bound_satisfied")));
  CHECK(row.columns() == columns_for(Experiment::Pos, false));
}

TEST_CASE("gradcheck on ten random instances") {
  const auto cfg = parse_config(R"({"schema_version": 1, "experiment": "gradcheck", "seed": 3, "cells": 10,
      "instance": {"generator": {"n": 7, "d": 3}}, "scalarization": "frobenius2"})");
  const auto result = run(cfg);
  REQUIRE(result.records.size() == 10);
  for (const auto& r : result.records) CHECK(number(r, "max_rel_error") <= 1e-5);
}

TEST_CASE("runs are deterministic regardless of worker count") {
  auto cfg = parse_config(kRandomEquilibrium);
  cfg.workers = 1;
  const auto serial = emitted(run(cfg).records, Format::Csv);
  cfg.workers = 4;
  const auto parallel = emitted(run(cfg).records, Format::Csv);
  CHECK(serial == parallel);
  CHECK(serial == emitted(run(cfg).records, Format::Csv));

  cfg.override_seed(100);
  CHECK(serial != emitted(run(cfg).records, Format::Csv));
}

TEST_CASE("sweep emits one row per grid point") {
  const auto cfg = parse_config(R"({"schema_version": 1, "experiment": "sweep",
      "instance": {"features": [[1], [1]]}, "costs": {"c": 1, "k": 2},
      "estimator": {"null_matrix": [[0.25], [-0.25]], "a_grid": 5}})");
  const auto rows = run(cfg).records;
  REQUIRE(rows.size() == 5);
  CHECK(number(rows[2], "f") == doctest::Approx(1.041244273188).epsilon(1e-8));
  CHECK(number(rows[4], "f") == doctest::Approx(1.160397208403).epsilon(1e-8));
  CHECK(std::get<bool>(rows[0].at("cost_monotone")));
}

TEST_CASE("failing cells become error rows without stopping the run") {
  auto cfg = parse_config(kRandomEquilibrium);
  cfg.solver.max_iter = 1;
  const auto result = run(cfg);
  CHECK(result.failed_cells == 6);
  REQUIRE(result.records.size() == 6);
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    CHECK(std::get<std::uint64_t>(r.at("cell")) == i);
    CHECK(std::get<std::string>(r.at("error")).rfind("NotConverged", 0) == 0);
    CHECK(std::holds_alternative<std::monostate>(r.at("lambda")));
  }
}

TEST_CASE("emission formats") {
  const auto records = run(parse_config(kInstanceB)).records;
  const auto csv = emitted(records, Format::Csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("1.0499342082457") != std::string::npos);

  CHECK_THROWS(emitted({}, Format::Csv));

  auto rows = run(parse_config(kRandomEquilibrium)).records;
  rows.front().set("potential", std::numeric_limits<double>::infinity());
  rows.back().set("f", std::numeric_limits<double>::quiet_NaN());
  std::istringstream in(emitted(rows, Format::JsonLines));
  const auto back = parse_jsonl(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);

  ExperimentRecord quoted(std::vector<std::string>{"note"});
  quoted.set("note", std::string("a,\"b\""));
  CHECK(emitted({quoted}, Format::Csv) == "note\n\"a,\"\"b\"\"\"\n");
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("timing column is opt-in") {
  const auto cfg = parse_config(kInstanceB);
  CHECK_FALSE(run(cfg).records.front().contains("wall_time_s"));
  CHECK(run(cfg, RunOptions{true}).records.front().contains("wall_time_s"));
}
