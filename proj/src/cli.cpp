#include "lbc/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lbc/csv.hpp"
#include "lbc/errors.hpp"
#include "lbc/log.hpp"
#include "lbc/metrics.hpp"

namespace lbc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Observation files

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && issp(static_cast<unsigned char>(s[k]))) ++k;
  return s.substr(k);
}

double parse_cell(const std::string& cell, int line, const char* name) {
  const std::string s = trim(cell);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DataError(line, std::string("column ") + name + ": not a number ('" + s + "')");
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw DataError(line, std::string("column ") + name + ": not a finite number ('" + s + "')");
  }
  return v;
}

}  // namespace

std::vector<Observation> read_observations(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw DataError(1, "empty data file");
  ++lineno;
  const auto header = split_csv_line(trim(line));
  const std::vector<std::string> want{"z", "t", "ua", "uw"};
  std::vector<std::string> got;
  for (const auto& h : header) got.push_back(trim(h));
  if (got != want) throw DataError(lineno, "header must be z,t,ua,uw");
  std::vector<Observation> obs;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(trim(line));
    if (cells.size() != 4) throw DataError(lineno, "expected 4 columns, found " + std::to_string(cells.size()));
    Observation o;
    o.z = parse_cell(cells[0], lineno, "z");
    o.t = parse_cell(cells[1], lineno, "t");
    o.ua = parse_cell(cells[2], lineno, "ua");
    o.uw = parse_cell(cells[3], lineno, "uw");
    if (o.t < 0.0) throw DataError(lineno, "negative time");
    obs.push_back(o);
  }
  if (obs.empty()) throw DataError(lineno, "no observations");
  return obs;
}

std::vector<Observation> read_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--data", "cannot open " + path);
  return read_observations(in);
}

void write_observations(const std::vector<Observation>& obs, std::ostream& os) {
  os << "z,t,ua,uw\n";
  for (const auto& o : obs) {
    os << csv::fmt(o.z) << ',' << csv::fmt(o.t) << ',' << csv::fmt(o.ua) << ',' << csv::fmt(o.uw) << '\n';
  }
}

std::vector<Observation> add_noise(std::vector<Observation> obs, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("noise level must be nonnegative");
  if (sigma == 0.0 || obs.empty()) return obs;
  auto stdev = [&](auto get) {
    double mean = 0.0;
    for (const auto& o : obs) mean += get(o);
    mean /= static_cast<double>(obs.size());
    double var = 0.0;
    for (const auto& o : obs) var += (get(o) - mean) * (get(o) - mean);
    return std::sqrt(var / static_cast<double>(obs.size()));
  };
  const double sa = sigma * stdev([](const Observation& o) { return o.ua; });
  const double sw = sigma * stdev([](const Observation& o) { return o.uw; });
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& o : obs) {
    o.ua += sa * normal(rng);
    o.uw += sw * normal(rng);
  }
  return obs;
}

std::vector<Observation> sample_observations(const SolutionGrid& grid, int count, double t_lo, double t_hi,
                                             std::uint64_t seed) {
  if (count < 1) throw ParameterError("observation count must be positive");
  if (!(t_lo > 0.0 && t_lo < t_hi)) throw ParameterError("observation window needs 0 < t_lo < t_hi");
  const double H = grid.z[grid.z.size() - 1];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double a = std::log10(t_lo), b = std::log10(t_hi);
  std::vector<Observation> obs;
  obs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Observation o;
    o.z = H * (1.0 - unit(rng));
    o.t = std::clamp(std::pow(10.0, a + (b - a) * unit(rng)), t_lo, t_hi);
    const auto [ua, uw] = sample_solution(grid, o.z, o.t);
    o.ua = ua;
    o.uw = uw;
    obs.push_back(o);
  }
  return obs;
}

SolutionGrid tabulate(const FieldModel& model, const SolutionGrid& like) {
  SolutionGrid g;
  g.z = like.z;
  g.t = like.t;
  g.log_time = like.log_time;
  g.ua.resize(like.z.size(), like.t.size());
  g.uw.resize(like.z.size(), like.t.size());
  for (Eigen::Index j = 0; j < like.t.size(); ++j) {
    const auto [a, w] = model.profile(like.z, like.t[j]);
    g.ua.col(j) = a;
    g.uw.col(j) = w;
  }
  return g;
}

std::optional<double> air_dissipation_time(const SolutionGrid& g, double ua0, double fraction) {
  for (Eigen::Index j = 0; j < g.t.size(); ++j) {
    if (g.ua.col(j).cwiseAbs().maxCoeff() <= fraction * ua0) return g.t[j];
  }
  return std::nullopt;
}

SoilModel with_permeability_ratio(const SoilModel& sm, double reference_ratio, double ratio) {
  if (!(reference_ratio > 0.0 && ratio > 0.0)) throw ParameterError("permeability ratios must be positive");
  SoilModel out = sm;
  out.cva = sm.cva * ratio / reference_ratio;
  return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw NumericalError("cannot write " + path.string());
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string optional_csv(const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json soil_json(const SoilModel& sm) {
  return {{"H", sm.H}, {"Ca", sm.Ca}, {"Cw", sm.Cw}, {"cva", sm.cva}, {"cvw", sm.cvw}, {"ua0", sm.ua0}, {"uw0", sm.uw0}};
}

fs::path prepare_output(const std::string& dir) {
  const fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// Per-run artifacts shared by train and sweep.
void write_manifest(const fs::path& dir, const RunConfig& config, const SegmentationPlan& plan, Mode mode) {
  json m;
  m["mode"] = mode == Mode::lbc ? "lbc" : "std";
  m["scheme"] = to_string(plan.scheme);
  m["boundaries"] = plan.boundaries;
  json seeds = json::array();
  for (int n = 1; n <= plan.segment_count(); ++n) seeds.push_back(segment_seed(config.seed, n));
  m["run_seed"] = config.seed;
  m["segment_seeds"] = seeds;
  m["weights"] = {{"w_ic", config.weights.ic}, {"w_bc", config.weights.bc}, {"w_r", config.weights.r},
                  {"w_s", config.weights.s}};
  const auto& o = config.optimizer;
  m["optimizer"] = {{"max_iterations", o.max_iterations}, {"memory", o.memory},
                    {"wolfe_c1", o.wolfe_c1},             {"wolfe_c2", o.wolfe_c2},
                    {"grad_tol", o.grad_tol},             {"loss_change_tol", o.loss_change_tol},
                    {"max_line_search", o.max_line_search}};
  m["soil"] = soil_json(config.soil_model());
  json ckpt = json::array();
  for (int n = 1; n <= plan.segment_count(); ++n) {
    char name[32];
    std::snprintf(name, sizeof name, "segment_%02d.json", n);
    ckpt.push_back(name);
  }
  m["checkpoints"] = ckpt;
  write_text(dir / "plan.json", dump(m));
}

void write_checkpoints(const fs::path& dir, const std::vector<NetworkParameters>& models) {
  for (std::size_t k = 0; k < models.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "segment_%02zu.json", k + 1);
    save_checkpoint(models[k], (dir / name).string());
  }
}

void write_trace(const fs::path& dir, const TrainReport& report) {
  std::ostringstream os;
  write_trace_csv(report, os);
  write_text(dir / "trace.csv", os.str());
  std::ostringstream seg;
  seg << "segment,t_start,t_end,iterations,evaluations,reason,final_total,interface_jump\n";
  for (std::size_t k = 0; k < report.segments.size(); ++k) {
    const auto& s = report.segments[k];
    seg << s.segment << ',' << csv::fmt(s.t_start) << ',' << csv::fmt(s.t_end) << ','
        << (s.rows.empty() ? 0 : s.rows.size() - 1) << ',' << s.evaluations << ',' << to_string(s.reason) << ','
        << csv::fmt(s.final_loss.total) << ','
        << (k < report.interface_jumps.size() ? csv::fmt(report.interface_jumps[k]) : std::string()) << '\n';
  }
  write_text(dir / "segments.csv", seg.str());
}

}  // namespace

TrainOutcome train_and_report(const RunConfig& config, Mode mode) {
  const fs::path dir = prepare_output(config.output_dir);
  const SoilModel sm = config.soil_model();
  TrainConfig tc = config.train_config();
  const SegmentationPlan plan = mode == Mode::lbc ? config.plan() : plan_segments(config.horizon, 1);
  write_manifest(dir, config, plan, mode);
  write_text(dir / "config.json", dump(config_to_json(config)));

  std::pair<StitchedModel, TrainReport> trained;
  try {
    trained = mode == Mode::lbc ? train_lbc(sm, plan, tc) : train_std(sm, config.horizon, tc);
  } catch (const TrainingError& e) {
    write_trace(dir, e.partial());
    throw;
  }
  const auto& [model, report] = trained;
  write_checkpoints(dir, model.models());
  write_trace(dir, report);

  const SolutionGrid oracle = solve_coupled_fd(sm, config.oracle_grid());
  const SolutionGrid field = tabulate(model, oracle);
  write_solution_csv(field, (dir / "field.csv").string());
  write_solution_csv(oracle, (dir / "oracle.csv").string());

  TrainOutcome out;
  out.metrics = compare_to_oracle(model, oracle, sm.ua0, sm.uw0);
  write_metrics_csv(out.metrics, (dir / "metrics.csv").string());
  out.air_time_model = air_dissipation_time(field, sm.ua0);
  out.air_time_oracle = air_dissipation_time(oracle, sm.ua0);
  return out;
}

namespace {

struct Common {
  std::string config_path;
  std::string output_dir;
  bool quiet = false;
};

RunConfig load(const Common& c) {
  RunConfig cfg = load_config(c.config_path);
  apply_environment(cfg);
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  cfg.validate();
  return cfg;
}

void open_log(const RunConfig& cfg) {
  prepare_output(cfg.output_dir);
  log::open_file((fs::path(cfg.output_dir) / "run.log").string());
}

int cmd_solve_fem(const Common& c, std::ostream& out) {
  const RunConfig cfg = load(c);
  open_log(cfg);
  const SoilModel sm = cfg.soil_model();
  const fs::path dir = prepare_output(cfg.output_dir);
  const SolutionGrid g = solve_coupled_fd(sm, cfg.oracle_grid());
  write_solution_csv(g, (dir / "solution.csv").string());
  const Eigen::Index last_z = g.z.size() - 1, last_t = g.t.size() - 1;
  json s;
  s["t_final"] = g.t[last_t];
  s["z"] = g.z[last_z];
  s["ua_final"] = g.ua(last_z, last_t);
  s["uw_final"] = g.uw(last_z, last_t);
  s["ua_final_normalized"] = sm.ua0 != 0.0 ? json(g.ua(last_z, last_t) / sm.ua0) : json(nullptr);
  s["uw_final_normalized"] = sm.uw0 != 0.0 ? json(g.uw(last_z, last_t) / sm.uw0) : json(nullptr);
  s["air_dissipation_time"] = optional_json(air_dissipation_time(g, sm.ua0));
  write_text(dir / "summary.json", dump(s));
  out << dump(s);
  log::info("solve-fem: wrote " + (dir / "solution.csv").string());
  return kExitOk;
}

int cmd_train(const Common& c, const std::string& mode_name, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = load(c);
  open_log(cfg);
  const Mode mode = mode_name == "std" ? Mode::std : Mode::lbc;
  if (mode == Mode::std) {
    err << "warning: mode std trains one segment over [0, horizon]; segmentation settings are ignored\n";
  }
  const auto outcome = train_and_report(cfg, mode);
  write_metrics_csv(outcome.metrics, out);
  return kExitOk;
}

const std::vector<std::string> kSweepParams{"ka_over_kw", "N_segments", "hidden_layers", "hidden_width", "N_R", "N_BC"};

RunConfig sweep_variant(const RunConfig& base, const std::string& param, const std::string& token) {
  RunConfig c = base;
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw ConfigError("--values", "not a number: '" + token + "'");
  }
  if (used != token.size() || !std::isfinite(v)) throw ConfigError("--values", "not a number: '" + token + "'");
  auto as_int = [&]() {
    if (v != std::floor(v) || v < 1 || v > 1e7) throw ConfigError("--values", param + " needs positive integers");
    return static_cast<int>(v);
  };
  if (param == "ka_over_kw") {
    if (!(v > 0.0)) throw ConfigError("--values", "ka_over_kw must be positive");
    const SoilModel sm = with_permeability_ratio(base.soil_model(), base.soil.ka_over_kw, v);
    c.soil.direct = sm;
    c.soil.constitutive.reset();
    c.soil.H = sm.H;
    c.soil.ka_over_kw = v;
  } else if (param == "N_segments") {
    c.segmentation.scheme = SegmentationScheme::log_uniform;
    c.segmentation.n = as_int();
  } else if (param == "hidden_layers") {
    c.network.hidden_layers = as_int();
  } else if (param == "hidden_width") {
    c.network.hidden_width = as_int();
  } else if (param == "N_R") {
    c.sampling.n_r = as_int();
  } else if (param == "N_BC") {
    c.sampling.n_bc = as_int();
  }
  c.output_dir = (fs::path(base.output_dir) / (param + "_" + token)).string();
  c.validate();
  return c;
}

int cmd_sweep(const Common& c, const std::string& mode_name, const std::string& param,
              const std::vector<std::string>& values, std::ostream& out, std::ostream& err) {
  if (std::find(kSweepParams.begin(), kSweepParams.end(), param) == kSweepParams.end()) {
    throw ConfigError("--param", "unknown sweep parameter '" + param + "'");
  }
  if (values.empty()) throw ConfigError("--values", "empty value list");
  const RunConfig base = load(c);
  open_log(base);
  const Mode mode = mode_name == "std" ? Mode::std : Mode::lbc;

  std::vector<RunConfig> runs;
  for (const auto& v : values) runs.push_back(sweep_variant(base, param, v));

  std::vector<std::optional<TrainOutcome>> outcomes(runs.size());
  std::vector<std::string> failures(runs.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(runs.size(), base.workers > 0 ? static_cast<std::size_t>(base.workers) : hw);
  auto worker = [&]() {
    for (std::size_t k = next++; k < runs.size(); k = next++) {
      try {
        log::info("sweep: " + param + " = " + values[k] + " -> " + runs[k].output_dir);
        outcomes[k] = train_and_report(runs[k], mode);
      } catch (const std::exception& e) {
        failures[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream os;
  os << "param,value,ua_mae,uw_mae,mae,mre,max_abs,r2,air_time_model,air_time_oracle,status\n";
  bool failed = false;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    os << param << ',' << values[k] << ',';
    if (outcomes[k]) {
      const auto& m = outcomes[k]->metrics;
      os << csv::fmt(m.ua.mae) << ',' << csv::fmt(m.uw.mae) << ',' << csv::fmt(m.combined.mae) << ','
         << optional_csv(m.combined.mre) << ',' << csv::fmt(m.combined.max_abs) << ','
         << optional_csv(m.combined.r2) << ',' << optional_csv(outcomes[k]->air_time_model) << ','
         << optional_csv(outcomes[k]->air_time_oracle) << ",ok\n";
    } else {
      failed = true;
      os << ",,,,,,,,failed\n";
      err << "sweep run " << param << " = " << values[k] << " failed: " << failures[k] << '\n';
    }
  }
  write_text(fs::path(base.output_dir) / "sweep.csv", os.str());
  out << os.str();
  return failed ? kExitNumerical : kExitOk;
}

int cmd_sample_data(const Common& c, int count, double t_lo, double t_hi, const std::string& path, std::ostream& out) {
  const RunConfig cfg = load(c);
  const SoilModel sm = cfg.soil_model();
  GridSpec gs = cfg.oracle_grid();
  gs.tmax = std::max(gs.tmax, t_hi);
  gs.tmin = std::min(gs.tmin, t_lo);
  const SolutionGrid g = solve_coupled_fd(sm, gs);
  const auto obs = sample_observations(g, count, t_lo, t_hi, cfg.seed);
  if (path.empty() || path == "-") {
    write_observations(obs, out);
  } else {
    std::ostringstream os;
    write_observations(obs, os);
    write_text(path, os.str());
  }
  return kExitOk;
}

int cmd_invert(const Common& c, const std::string& data_path, double noise, const std::vector<std::string>& free_list,
               std::ostream& out) {
  RunConfig cfg = load(c);
  if (!free_list.empty()) {
    cfg.inversion.free.clear();
    for (const auto& name : free_list) {
      try {
        cfg.inversion.free.push_back(coefficient_from_string(name));
      } catch (const ParameterError& e) {
        throw ConfigError("--free", e.what());
      }
    }
  }
  if (!(noise >= 0.0)) throw ConfigError("--noise", "must be nonnegative");
  auto obs = read_observations(data_path);
  obs = add_noise(std::move(obs), noise, cfg.seed);
  open_log(cfg);
  const fs::path dir = prepare_output(cfg.output_dir);

  InversionConfig ic;
  ic.initial_guess = cfg.soil_model();
  if (cfg.inversion.cva) ic.initial_guess.cva = *cfg.inversion.cva;
  if (cfg.inversion.cvw) ic.initial_guess.cvw = *cfg.inversion.cvw;
  if (cfg.inversion.Ca) ic.initial_guess.Ca = *cfg.inversion.Ca;
  if (cfg.inversion.Cw) ic.initial_guess.Cw = *cfg.inversion.Cw;
  ic.t_max = cfg.inversion.t_max;
  ic.segments = cfg.inversion.segments;
  ic.data_weight = cfg.inversion.data_weight;
  ic.train = cfg.train_config();

  const auto result = invert_coefficients(obs, cfg.inversion.free, ic);
  json fitted = soil_json(result.fitted);
  json free = json::array();
  for (auto f : cfg.inversion.free) free.push_back(to_string(f));
  json doc{{"fitted", fitted}, {"initial_guess", soil_json(ic.initial_guess)}, {"free", free},
           {"observations", obs.size()}, {"noise", noise}};
  write_text(dir / "fitted.json", dump(doc));
  std::ostringstream mis;
  write_misfit_csv(result.trace, mis);
  write_text(dir / "misfit.csv", mis.str());
  write_checkpoints(dir, result.model.models());
  out << dump(doc);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coupled air-water consolidation: finite-difference oracle and segmented PINN training"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "JSON run configuration")->required();
    sub->add_option("-o,--out", common.output_dir, "Output directory (overrides output_dir)");
    sub->add_flag("-q,--quiet", common.quiet, "No progress lines on stderr");
  };

  auto* solve = app.add_subcommand("solve-fem", "Crank-Nicolson reference solution");
  add_common(solve);

  std::string mode = "lbc";
  auto* train = app.add_subcommand("train", "Train a PINN and compare it with the oracle");
  add_common(train);
  train->add_option("--mode", mode, "std or lbc")->check(CLI::IsMember({"std", "lbc"}));

  std::string param;
  std::vector<std::string> values;
  std::string sweep_mode = "lbc";
  auto* sweep = app.add_subcommand("sweep", "One training run per parameter value");
  add_common(sweep);
  sweep->add_option("--param", param, "ka_over_kw, N_segments, hidden_layers, hidden_width, N_R or N_BC")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep->add_option("--mode", sweep_mode, "std or lbc")->check(CLI::IsMember({"std", "lbc"}));

  std::string data_path;
  double noise = 0.0;
  std::vector<std::string> free_list;
  auto* invert = app.add_subcommand("invert", "Fit soil coefficients to observations");
  add_common(invert);
  invert->add_option("--data", data_path, "CSV with columns z,t,ua,uw")->required();
  invert->add_option("--noise", noise, "Relative Gaussian noise level added to the data");
  invert->add_option("--free", free_list, "Free coefficients (cva,cvw,Ca,Cw)")->delimiter(',');

  int count = 200;
  double t_lo = 1e4, t_hi = 1e8;
  std::string data_out;
  auto* sample = app.add_subcommand("sample-data", "Oracle observations for inversion studies");
  add_common(sample);
  sample->add_option("--count", count, "Number of observations");
  sample->add_option("--t-min", t_lo, "Earliest observation time");
  sample->add_option("--t-max", t_hi, "Latest observation time");
  sample->add_option("--data-out", data_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  log::set_quiet(common.quiet);
  int code = kExitOk;
  try {
    if (solve->parsed()) code = cmd_solve_fem(common, out);
    if (train->parsed()) code = cmd_train(common, mode, out, err);
    if (sweep->parsed()) code = cmd_sweep(common, sweep_mode, param, values, out, err);
    if (invert->parsed()) code = cmd_invert(common, data_path, noise, free_list, out);
    if (sample->parsed()) code = cmd_sample_data(common, count, t_lo, t_hi, data_out, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const PlanError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    code = kExitNumerical;
  }
  log::close_file();
  return code;
}

}  // namespace lbc::cli
