#include "stefan/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stefan/analysis.hpp"
#include "stefan/csv.hpp"
#include "stefan/error.hpp"
#include "stefan/version.hpp"

namespace stefan::runner {

using json = nlohmann::json;

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::SolveDonsker, "solve-donsker"}, {Command::SolveParticle, "solve-particle"},
    {Command::Convergence, "convergence"},    {Command::JumpStudy, "jump-study"},
    {Command::IterationTable, "iteration-table"},
};

// ---------------------------------------------------------------------------
// JSON field access

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigInvalid(path, "missing");
  if (!v->is_number()) throw ConfigInvalid(path, "must be a number");
  return v->get<double>();
}

double positive(const json& obj, const std::string& key, const std::string& path) {
  const double v = number(obj, key, path);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigInvalid(path, "must be a finite number > 0");
  return v;
}

std::uint64_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigInvalid(path, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool boolean(const json& obj, const std::string& key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigInvalid(key, "must be true or false");
  return v->get<bool>();
}

std::string text(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigInvalid(path, "missing");
  if (!v->is_string()) throw ConfigInvalid(path, "must be a string");
  return v->get<std::string>();
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known, const std::string& prefix) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigInvalid(prefix + key, "unknown field");
  }
}

InitialLaw parse_law(const json& j, double run_alpha) {
  if (!j.is_object()) throw ConfigInvalid("law", "must be an object");
  const std::string type = text(j, "type", "law.type");
  try {
    if (type == "gamma") {
      reject_unknown(j, {"type", "shape", "scale"}, "law.");
      return InitialLaw::gamma(positive(j, "shape", "law.shape"), positive(j, "scale", "law.scale"));
    }
    if (type == "poly_cutoff") {
      reject_unknown(j, {"type", "alpha", "exponent", "coefficient"}, "law.");
      const double a = find(j, "alpha") ? positive(j, "alpha", "law.alpha") : run_alpha;
      return InitialLaw::poly_cutoff(a, positive(j, "exponent", "law.exponent"),
                                     positive(j, "coefficient", "law.coefficient"));
    }
    if (type == "uniform") {
      reject_unknown(j, {"type", "lo", "hi"}, "law.");
      return InitialLaw::uniform(number(j, "lo", "law.lo"), number(j, "hi", "law.hi"));
    }
    if (type == "atoms") {
      reject_unknown(j, {"type", "atoms"}, "law.");
      const json* list = find(j, "atoms");
      if (!list || !list->is_array() || list->empty()) throw ConfigInvalid("law.atoms", "must be a nonempty array");
      std::vector<Atom> atoms;
      for (const json& a : *list) {
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
          throw ConfigInvalid("law.atoms", "entries must be [location, mass] pairs");
        atoms.push_back({a[0].get<double>(), a[1].get<double>()});
      }
      return InitialLaw::atoms(std::move(atoms));
    }
  } catch (const NoValidCutoff& e) {
    throw ConfigInvalid("law", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigInvalid("law", e.what());
  }
  throw ConfigInvalid("law.type", "unknown law '" + type + "'");
}

drivers::DriverSpec parse_driver(const json* j) {
  if (!j) return drivers::DriverSpec::brownian(0);
  if (!j->is_object()) throw ConfigInvalid("driver", "must be an object");
  const std::string type = text(*j, "type", "driver.type");
  if (type == "brownian") {
    reject_unknown(*j, {"type"}, "driver.");
    return drivers::DriverSpec::brownian(0);
  }
  if (type == "fbm") {
    reject_unknown(*j, {"type", "hurst"}, "driver.");
    const double h = number(*j, "hurst", "driver.hurst");
    if (!(h > 0.0 && h < 1.0)) throw ConfigInvalid("driver.hurst", "must lie strictly inside (0, 1)");
    return drivers::DriverSpec::fractional(h, 0);
  }
  if (type == "walk") {
    reject_unknown(*j, {"type", "increments"}, "driver.");
    const std::string inc = text(*j, "increments", "driver.increments");
    if (inc == "rademacher") return drivers::DriverSpec::walk(drivers::IncrementLaw::Rademacher, 0);
    if (inc == "normal") return drivers::DriverSpec::walk(drivers::IncrementLaw::StandardNormal, 0);
    throw ConfigInvalid("driver.increments", "must be 'rademacher' or 'normal'");
  }
  throw ConfigInvalid("driver.type", "unknown driver '" + type + "'");
}

// ---------------------------------------------------------------------------
// Solving

struct LevelRun {
  std::size_t steps;
  double alpha;
  GridSpec grid;
  LossCurve loss;
  std::vector<std::size_t> iterations;
  std::string csv;  // level file body
};

LevelRun solve_level(const RunConfig& c, std::size_t steps, double alpha) {
  std::ostringstream out;
  if (c.solver == SolverKind::Donsker) {
    const std::size_t shift = c.perturb_initial ? donsker::perturbation_shift(c.horizon / double(steps)) : 0;
    const GridSpec grid = GridSpec::for_law(c.horizon, steps, c.law, shift);
    const donsker::DonskerConfig dc{alpha, grid, c.law, c.implicit ? donsker::Mode::Implicit : donsker::Mode::Explicit,
                                    c.perturb_initial, c.init_mode};
    donsker::DonskerSolution sol = donsker::solve(dc);
    donsker::write_csv(sol, grid, out);
    return {steps, alpha, grid, std::move(sol.loss), std::move(sol.iterations_per_step), out.str()};
  }
  const GridSpec grid(c.horizon, steps, 1);
  drivers::DriverSpec driver = c.driver;
  driver.seed = c.seed;
  const particle::ParticleConfig pc{alpha, grid, c.law, driver, c.particle_count(steps),
                                    c.implicit ? particle::Scheme::Implicit : particle::Scheme::Explicit};
  const std::size_t substeps = c.nested ? c.levels.back() / steps : 1;
  particle::ParticleSolution sol = particle::solve(pc, substeps);
  particle::write_csv(sol, grid, out);
  return {steps, alpha, grid, std::move(sol.loss), std::move(sol.fixed_point_iters), out.str()};
}

std::vector<LevelRun> solve_all(const RunConfig& c, double alpha) {
  std::vector<LevelRun> runs;
  if (c.threads <= 1) {
    for (std::size_t n : c.levels) runs.push_back(solve_level(c, n, alpha));
    return runs;
  }
  // Levels are independent; results are collected in level order.
  for (std::size_t first = 0; first < c.levels.size(); first += c.threads) {
    std::vector<std::future<LevelRun>> batch;
    for (std::size_t i = first; i < std::min(first + c.threads, c.levels.size()); ++i)
      batch.push_back(std::async(std::launch::async, solve_level, std::cref(c), c.levels[i], alpha));
    for (auto& f : batch) runs.push_back(f.get());
  }
  return runs;
}

struct IterationStats {
  double average;
  std::size_t max;
};

// Steps k = 1..N; the k = 0 count is reported separately in the level file.
IterationStats iteration_stats(const std::vector<std::size_t>& iters) {
  double sum = 0.0;
  std::size_t mx = 0;
  for (std::size_t k = 1; k < iters.size(); ++k) {
    sum += static_cast<double>(iters[k]);
    mx = std::max(mx, iters[k]);
  }
  return {sum / static_cast<double>(iters.size() - 1), mx};
}

// ---------------------------------------------------------------------------
// Output

class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_))
      throw OutputUnwritable("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& body) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << body;
    out.close();
    if (!out) throw OutputUnwritable("cannot write " + path.string());
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const noexcept { return files_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

std::string level_name(std::size_t n) { return "level_" + std::to_string(n) + ".csv"; }

// Slope over the points seen so far, or empty when it is not yet defined.
std::string slope_so_far(std::span<const analysis::Point> pts, std::size_t drop) {
  std::size_t nonzero = 0;
  for (const auto& p : pts) nonzero += p.value != 0.0;
  const std::size_t needed = (drop > 0 && nonzero >= drop) ? 3 : 2;
  if (nonzero < needed) return "";
  return csv::format(analysis::fit_study_order(pts, drop).slope);
}

std::string plot_file(std::span<const analysis::Point> pts, const char* column) {
  std::ostringstream out;
  csv::Writer w(out);
  w.row("log2_h", column);
  for (const auto& p : pts) {
    if (p.value != 0.0) w.row(std::log2(p.h), std::log2(std::abs(p.value)));
  }
  return out.str();
}

void run_solve(const RunConfig& c, Artifacts& art) {
  const auto runs = solve_all(c, c.alpha());
  std::ostringstream sum;
  csv::Writer w(sum);
  w.row("level", "N", "h", "alpha", "L_T", "t_star", "J", "average_iterations", "max_iterations");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    art.write(level_name(r.steps), r.csv);
    const auto jump = analysis::detect_jump(r.loss, r.grid);
    const auto stats = iteration_stats(r.iterations);
    w.row(i, r.steps, r.grid.step(), r.alpha, r.loss.fraction(r.steps), jump.time, jump.size, stats.average,
          stats.max);
  }
  art.write("summary.csv", sum.str());
}

analysis::RefinementStudy study_of(const RunConfig& c, const std::vector<LevelRun>& runs) {
  analysis::RefinementStudy study(c.horizon, c.solver == SolverKind::Donsker ? "donsker" : "particle");
  for (const auto& r : runs) study.add(r.steps, r.loss);
  return study;
}

void run_convergence(const RunConfig& c, Artifacts& art) {
  const auto runs = solve_all(c, c.alpha());
  const auto study = study_of(c, runs);
  const auto est = analysis::error_estimator(study);
  std::ostringstream sum;
  csv::Writer w(sum);
  w.row("level", "N", "h", "L_T", "estimator", "t_star", "J", "slope_so_far");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    art.write(level_name(r.steps), r.csv);
    const auto jump = analysis::detect_jump(r.loss, r.grid);
    const std::string e = i == 0 ? "" : csv::format(est[i - 1].value);
    const std::string s = i == 0 ? "" : slope_so_far(std::span(est).first(i), c.fit_drop_threshold);
    w.row(i, r.steps, r.grid.step(), r.loss.fraction(r.steps), e, jump.time, jump.size, s);
  }
  art.write("summary.csv", sum.str());
  art.write("plot_error.csv", plot_file(est, "log2_abs_estimator"));
}

void run_jump_study(const RunConfig& c, Artifacts& art) {
  const auto runs = solve_all(c, c.alpha());
  const auto study = study_of(c, runs);
  const auto est = analysis::jump_refinement_estimators(study);
  std::vector<analysis::Point> times, sizes;
  for (const auto& e : est) {
    times.push_back({e.h, e.time_estimator});
    sizes.push_back({e.h, e.size_estimator});
  }
  std::ostringstream sum;
  csv::Writer w(sum);
  w.row("level", "N", "h", "L_T", "t_star", "J", "time_estimator", "size_estimator", "time_slope_so_far",
        "size_slope_so_far");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    art.write(level_name(r.steps), r.csv);
    const auto jump = analysis::detect_jump(r.loss, r.grid);
    if (i == 0) {
      w.row(i, r.steps, r.grid.step(), r.loss.fraction(r.steps), jump.time, jump.size, "", "", "", "");
      continue;
    }
    w.row(i, r.steps, r.grid.step(), r.loss.fraction(r.steps), jump.time, jump.size, est[i - 1].time_estimator,
          est[i - 1].size_estimator, slope_so_far(std::span(times).first(i), c.fit_drop_threshold),
          slope_so_far(std::span(sizes).first(i), c.fit_drop_threshold));
  }
  art.write("summary.csv", sum.str());
  art.write("plot_jump_time.csv", plot_file(times, "log2_time_estimator"));
  art.write("plot_jump_size.csv", plot_file(sizes, "log2_size_estimator"));
}

void run_iteration_table(const RunConfig& c, Artifacts& art) {
  std::vector<std::vector<IterationStats>> table;  // [alpha][level]
  std::vector<std::ostringstream> level_files(c.levels.size());
  for (std::size_t i = 0; i < c.levels.size(); ++i)
    csv::Writer(level_files[i]).row("alpha", "N", "average_iterations", "max_iterations", "initial_iterations");
  for (double alpha : c.alphas) {
    auto& row = table.emplace_back();
    for (const auto& r : solve_all(c, alpha)) {
      const std::size_t i = row.size();
      row.push_back(iteration_stats(r.iterations));
      csv::Writer(level_files[i]).row(alpha, r.steps, row.back().average, row.back().max, r.iterations.front());
    }
  }
  for (std::size_t i = 0; i < c.levels.size(); ++i) art.write(level_name(c.levels[i]), level_files[i].str());

  // Table layout: one column per N, an average and a max row per alpha.
  std::ostringstream sum;
  sum << "alpha,statistic";
  for (std::size_t n : c.levels) sum << ',' << n;
  sum << '\n';
  for (std::size_t a = 0; a < c.alphas.size(); ++a) {
    sum << csv::format(c.alphas[a]) << ",average_iterations";
    for (const auto& s : table[a]) sum << ',' << csv::format(s.average);
    sum << '\n' << csv::format(c.alphas[a]) << ",max_iterations";
    for (const auto& s : table[a]) sum << ',' << s.max;
    sum << '\n';
  }
  art.write("summary.csv", sum.str());
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  for (const auto& [c, n] : kCommands) {
    if (n == name) return c;
  }
  return std::nullopt;
}

std::string_view command_name(Command c) {
  for (const auto& [cmd, n] : kCommands) {
    if (cmd == c) return n;
  }
  return "";
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(Command command, std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("config", std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigInvalid("config", "top level must be an object");
  reject_unknown(j, {"command", "alpha", "horizon", "law", "steps", "levels", "solver", "scheme", "init_mode",
                     "perturb_initial", "driver", "particles", "particles_per_step", "nested",
                     "fit_drop_coarsest_from", "threads", "seed", "out"},
                 "");

  RunConfig c;
  c.command = command;
  if (const json* v = find(j, "command")) {
    if (!v->is_string() || parse_command(v->get<std::string>()) != command)
      throw ConfigInvalid("command", "does not match the command given on the command line");
  }

  // alpha: a number, or a list for the iteration table.
  const json* a = find(j, "alpha");
  if (!a) throw ConfigInvalid("alpha", "missing");
  if (a->is_number()) {
    c.alphas = {a->get<double>()};
  } else if (a->is_array() && !a->empty()) {
    for (const json& v : *a) {
      if (!v.is_number()) throw ConfigInvalid("alpha", "list entries must be numbers");
      c.alphas.push_back(v.get<double>());
    }
  } else {
    throw ConfigInvalid("alpha", "must be a number or a nonempty list of numbers");
  }
  for (double v : c.alphas) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigInvalid("alpha", "must be > 0");
  }
  if (c.alphas.size() > 1 && command != Command::IterationTable)
    throw ConfigInvalid("alpha", "a list of values is only accepted by iteration-table");

  c.horizon = positive(j, "horizon", "horizon");
  const json* law = find(j, "law");
  if (!law) throw ConfigInvalid("law", "missing");
  c.law = parse_law(*law, c.alpha());

  switch (command) {
    case Command::SolveParticle: c.solver = SolverKind::Particle; break;
    case Command::SolveDonsker:
    case Command::IterationTable: c.solver = SolverKind::Donsker; break;
    default:
      if (const json* s = find(j, "solver")) {
        const std::string name = s->is_string() ? s->get<std::string>() : "";
        if (name == "donsker") c.solver = SolverKind::Donsker;
        else if (name == "particle") c.solver = SolverKind::Particle;
        else throw ConfigInvalid("solver", "must be 'donsker' or 'particle'");
      }
  }
  if (find(j, "solver") && (command == Command::SolveDonsker || command == Command::SolveParticle ||
                            command == Command::IterationTable)) {
    const json& s = j["solver"];
    const bool particle = s.is_string() && s.get<std::string>() == "particle";
    if (particle != (c.solver == SolverKind::Particle)) throw ConfigInvalid("solver", "conflicts with the command");
  }

  if (const json* s = find(j, "scheme")) {
    const std::string name = s->is_string() ? s->get<std::string>() : "";
    if (name == "implicit") c.implicit = true;
    else if (name == "explicit") c.implicit = false;
    else throw ConfigInvalid("scheme", "must be 'implicit' or 'explicit'");
  }
  if (const json* m = find(j, "init_mode")) {
    const std::string name = m->is_string() ? m->get<std::string>() : "";
    if (name == "cell_mass") c.init_mode = InitMode::CellMass;
    else if (name == "density_sample") c.init_mode = InitMode::DensitySample;
    else throw ConfigInvalid("init_mode", "must be 'cell_mass' or 'density_sample'");
  }
  if (c.init_mode == InitMode::DensitySample && !c.law.has_density())
    throw ConfigInvalid("init_mode", "density_sample needs a law with a density");
  c.perturb_initial = boolean(j, "perturb_initial", false);
  c.driver = parse_driver(find(j, "driver"));

  // Levels: "steps" is shorthand for a single level.
  const bool study = command == Command::Convergence || command == Command::JumpStudy;
  if (const json* s = find(j, "steps")) {
    if (find(j, "levels")) throw ConfigInvalid("steps", "give either steps or levels, not both");
    const auto n = count(*s, "steps");
    if (n == 0) throw ConfigInvalid("steps", "must be >= 1");
    c.levels = {n};
  } else if (const json* l = find(j, "levels")) {
    if (!l->is_array() || l->empty()) throw ConfigInvalid("levels", "must be a nonempty list");
    for (const json& v : *l) c.levels.push_back(count(v, "levels"));
  } else if (command == Command::SolveDonsker || command == Command::SolveParticle) {
    throw ConfigInvalid("steps", "missing");
  } else {
    c.levels.assign(std::begin(kDefaultLevels), std::end(kDefaultLevels));
  }
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    if (c.levels[i] == 0) throw ConfigInvalid("levels", "entries must be >= 1");
    if (i > 0 && c.levels[i] <= c.levels[i - 1]) throw ConfigInvalid("levels", "must be strictly increasing");
    if (study && i > 0 && c.levels[i] % c.levels[i - 1] != 0)
      throw ConfigInvalid("levels", "each level must divide the next (nested meshes)");
  }
  if (study && c.levels.size() < 2) throw ConfigInvalid("levels", "a refinement study needs at least two levels");

  if (const json* p = find(j, "particles")) {
    const auto n = count(*p, "particles");
    if (n == 0) throw ConfigInvalid("particles", "must be >= 1");
    c.particles = n;
  }
  if (const json* p = find(j, "particles_per_step")) {
    c.particles_per_step = count(*p, "particles_per_step");
    if (c.particles_per_step == 0) throw ConfigInvalid("particles_per_step", "must be >= 1");
  }
  const bool markov = c.driver.is_markov();
  c.nested = boolean(j, "nested", markov);
  if (c.nested && !markov) throw ConfigInvalid("nested", "fractional Brownian drivers cannot be nested");
  if (c.nested && c.solver == SolverKind::Particle) {
    for (std::size_t n : c.levels) {
      if (c.levels.back() % n != 0) throw ConfigInvalid("nested", "every level must divide the finest one");
    }
  }
  if (const json* f = find(j, "fit_drop_coarsest_from")) c.fit_drop_threshold = count(*f, "fit_drop_coarsest_from");
  if (const json* t = find(j, "threads")) {
    c.threads = count(*t, "threads");
    if (c.threads == 0) throw ConfigInvalid("threads", "must be >= 1");
  }
  if (const json* s = find(j, "seed")) c.seed = count(*s, "seed");
  if (const json* o = find(j, "out")) {
    if (!o->is_string()) throw ConfigInvalid("out", "must be a string");
    c.out_dir = o->get<std::string>();
  }
  return c;
}

void run(const RunConfig& config, std::string_view config_text) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_utc = utc_now();
  Artifacts art(config.out_dir);
  switch (config.command) {
    case Command::SolveDonsker:
    case Command::SolveParticle: run_solve(config, art); break;
    case Command::Convergence: run_convergence(config, art); break;
    case Command::JumpStudy: run_jump_study(config, art); break;
    case Command::IterationTable: run_iteration_table(config, art); break;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json meta = {
      {"command", command_name(config.command)},
      {"config_hash", fnv1a_hex(config_text)},
      {"seed", config.seed},
      {"levels", config.levels},
      {"versions", {{"stefan", std::string(kVersion)}, {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}}},
      {"started_utc", started_utc},
      {"wall_clock_seconds", seconds},
      {"files", art.files()},
  };
  art.write("meta.json", meta.dump(2) + "\n");
}

}  // namespace stefan::runner
