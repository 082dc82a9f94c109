#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stefan/csv.hpp"
#include "stefan/error.hpp"
#include "stefan/runner.hpp"

using namespace stefan;
using namespace stefan::runner;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stefan_runner_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string field_of(Command c, const std::string& text) {
  try {
    parse_config(c, text);
  } catch (const ConfigInvalid& e) {
    return e.field();
  }
  return "";
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const char* kTable = R"({"alpha": [0.5, 1.5], "horizon": 0.02,
  "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333},
  "init_mode": "density_sample", "levels": [10, 20]})";

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("command names round trip") {
    for (Command c : {Command::SolveDonsker, Command::SolveParticle, Command::Convergence, Command::JumpStudy,
                      Command::IterationTable})
      CHECK(parse_command(command_name(c)) == c);
    CHECK_FALSE(parse_command("solve"));
  }

  TEST_CASE("invalid configurations name the field") {
    const std::string law = R"("law": {"type": "uniform", "lo": 0, "hi": 1})";
    CHECK(field_of(Command::SolveDonsker, "{") == "config");
    CHECK(field_of(Command::SolveDonsker, R"({"horizon": 1, "steps": 4, )" + law + "}") == "alpha");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": -1, "horizon": 1, "steps": 4, )" + law + "}") == "alpha");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": [1, 2], "horizon": 1, "steps": 4, )" + law + "}") == "alpha");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 0, "steps": 4, )" + law + "}") == "horizon");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 1, )" + law + "}") == "steps");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 1, "steps": 4, "colour": 1, )" + law + "}") ==
          "colour");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 1, "steps": 4, "law": {"type": "cauchy"}})") ==
          "law.type");
    CHECK(field_of(Command::SolveDonsker,
                   R"({"alpha": 1, "horizon": 1, "steps": 4, "law": {"type": "gamma", "shape": 2}})") == "law.scale");
    CHECK(field_of(Command::SolveParticle,
                   R"({"alpha": 1, "horizon": 1, "steps": 4, "driver": {"type": "fbm", "hurst": 1.2}, )" + law + "}") ==
          "driver.hurst");
    CHECK(field_of(Command::Convergence, R"({"alpha": 1, "horizon": 1, "levels": [10, 15], )" + law + "}") ==
          "levels");
    CHECK(field_of(Command::Convergence, R"({"alpha": 1, "horizon": 1, "levels": [10], )" + law + "}") == "levels");
    CHECK(field_of(Command::SolveParticle,
                   R"({"alpha": 1, "horizon": 1, "steps": 4, "nested": true, "driver": {"type": "fbm", "hurst": 0.3}, )" +
                       law + "}") == "nested");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 1, "steps": 4, "init_mode": "density_sample",
                   "law": {"type": "atoms", "atoms": [[0.5, 1]]}})") == "init_mode");
    CHECK(field_of(Command::SolveDonsker, R"({"alpha": 1, "horizon": 1, "steps": 4, "solver": "particle", )" + law +
                                              "}") == "solver");
  }

  TEST_CASE("defaults") {
    const auto c = parse_config(Command::Convergence, R"({"alpha": 1.5, "horizon": 0.02,
        "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333}})");
    CHECK(c.levels == std::vector<std::size_t>(std::begin(kDefaultLevels), std::end(kDefaultLevels)));
    CHECK(c.solver == SolverKind::Donsker);
    CHECK(c.implicit);
    CHECK(c.nested);
    CHECK(c.particle_count(100) == 100 * kDefaultParticlesPerStep);
    const auto p = parse_config(Command::SolveParticle, R"({"alpha": 1, "horizon": 1, "steps": 4,
        "driver": {"type": "fbm", "hurst": 0.3}, "law": {"type": "uniform", "lo": 0, "hi": 1}})");
    CHECK_FALSE(p.nested);
    CHECK(p.solver == SolverKind::Particle);
  }

  TEST_CASE("fnv1a") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }

  TEST_CASE("iteration table files are reproducible") {
    const auto dir_a = scratch("table_a"), dir_b = scratch("table_b");
    auto c = parse_config(Command::IterationTable, kTable);
    c.out_dir = dir_a;
    run(c, kTable);
    c.out_dir = dir_b;
    run(c, kTable);
    for (const char* f : {"level_10.csv", "level_20.csv", "summary.csv"}) {
      CAPTURE(f);
      REQUIRE(fs::exists(dir_a / f));
      CHECK(slurp(dir_a / f) == slurp(dir_b / f));
    }
    const auto summary = read_csv(dir_a / "summary.csv");
    REQUIRE(summary.size() == 5);
    CHECK(summary[0] == std::vector<std::string>{"alpha", "statistic", "10", "20"});
    CHECK(summary[1][0] == "0.5");

    const auto meta = nlohmann::json::parse(slurp(dir_a / "meta.json"));
    CHECK(meta["command"] == "iteration-table");
    CHECK(meta["config_hash"] == fnv1a_hex(kTable));
    CHECK(meta["levels"] == nlohmann::json::array({10, 20}));
    CHECK(meta["files"].size() >= 3);
    CHECK(meta.contains("wall_clock_seconds"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
  }

  TEST_CASE("convergence with two levels gives one estimator") {
    const auto dir = scratch("conv");
    const char* text = R"({"alpha": 1.5, "horizon": 0.02, "levels": [100, 200],
      "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333}})";
    auto c = parse_config(Command::Convergence, text);
    c.out_dir = dir;
    run(c, text);
    const auto rows = read_csv(dir / "summary.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"level", "N", "h", "L_T", "estimator", "t_star", "J", "slope_so_far"});
    CHECK(rows[1][4].empty());
    REQUIRE_FALSE(rows[2][4].empty());
    const double est = std::stod(rows[2][4]);
    CHECK(est == 2.0 * (std::stod(rows[2][3]) - std::stod(rows[1][3])));
    CHECK(fs::exists(dir / "level_100.csv"));
    CHECK(fs::exists(dir / "level_200.csv"));
    CHECK(fs::exists(dir / "plot_error.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("far initial law with a single step loses nothing") {
    const auto dir = scratch("far");
    const char* text = R"({"alpha": 1, "horizon": 0.01, "steps": 1, "law": {"type": "uniform", "lo": 5, "hi": 6}})";
    auto c = parse_config(Command::SolveDonsker, text);
    c.out_dir = dir;
    run(c, text);
    const auto rows = read_csv(dir / "level_1.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"k", "t_k", "Lambda", "L", "i_k", "iterations", "mass_remaining"});
    CHECK(rows[1][2] == "0");
    CHECK(rows[2][2] == "0");
    CHECK(rows[2][3] == "0");
    fs::remove_all(dir);
  }

  TEST_CASE("particle solve writes one file per level") {
    const auto dir = scratch("particle");
    const char* text = R"({"alpha": 1.5, "horizon": 0.02, "levels": [4, 8], "particles": 300,
      "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333}, "seed": 3})";
    auto c = parse_config(Command::SolveParticle, text);
    c.out_dir = dir;
    run(c, text);
    const auto rows = read_csv(dir / "level_8.csv");
    REQUIRE(rows.size() == 10);
    CHECK(rows[0] == std::vector<std::string>{"k", "t_k", "Lambda", "L", "fixed_point_iters"});
    // Loss values are multiples of alpha / n.
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const double count = std::stod(rows[k][2]) * 300.0 / 1.5;
      CHECK(std::abs(count - std::round(count)) < 1e-9);
    }
    CHECK(fs::exists(dir / "level_4.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("numbers are written with 17 significant digits and LF") {
    CHECK(csv::format(0.1) == "0.10000000000000001");
    CHECK(csv::format(1.0) == "1");
    CHECK(std::stod(csv::format(1.0 / 3.0)) == 1.0 / 3.0);
    const auto dir = scratch("digits");
    const char* text = R"({"alpha": 1.5, "horizon": 0.02, "steps": 50,
      "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333}})";
    auto c = parse_config(Command::SolveDonsker, text);
    c.out_dir = dir;
    run(c, text);
    const std::string body = slurp(dir / "level_50.csv");
    CHECK(body.find('\r') == std::string::npos);
    CHECK(body.back() == '\n');
    fs::remove_all(dir);
  }

  TEST_CASE("unwritable output") {
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "file";
    const char* text = R"({"alpha": 1, "horizon": 0.01, "steps": 1, "law": {"type": "uniform", "lo": 5, "hi": 6}})";
    auto c = parse_config(Command::SolveDonsker, text);
    c.out_dir = blocker / "sub";
    CHECK_THROWS_AS(run(c, text), OutputUnwritable);
    fs::remove(blocker);
  }

  TEST_CASE("command-line seed override changes the hash") {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const fs::path cfg = dir / "run.json";
    std::ofstream(cfg) << R"({"alpha": 1.5, "horizon": 0.02, "steps": 4, "particles": 50,
      "law": {"type": "gamma", "shape": 2, "scale": 0.3333333333333333}})";
    std::string hashes[2];
    for (int s = 0; s < 2; ++s) {
      const fs::path out = dir / ("out" + std::to_string(s));
      const std::string cmd = std::string(STEFAN_CLI_PATH) + " solve-particle --config " + cfg.string() + " --seed " +
                              std::to_string(s) + " --out " + out.string() + " > /dev/null";
      REQUIRE(std::system(cmd.c_str()) == 0);
      const auto meta = nlohmann::json::parse(slurp(out / "meta.json"));
      CHECK(meta["seed"] == s);
      hashes[s] = meta["config_hash"];
    }
    CHECK(hashes[0] != hashes[1]);
    fs::remove_all(dir);
  }
}
