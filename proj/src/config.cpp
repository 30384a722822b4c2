#include "lbc/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lbc/errors.hpp"

namespace lbc {

using nlohmann::json;

namespace {

// Reader over one JSON object that reports errors with the dotted field path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void only(std::initializer_list<const char*> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const char* k : keys) known = known || it.key() == k;
      if (!known) throw ConfigError(field(it.key()), "unknown field");
    }
  }

  Reader object(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required block");
    return Reader(j_.at(key), field(key));
  }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }

  double number(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    return number(key, 0.0);
  }

  std::optional<double> maybe_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  long long integer(const std::string& key, long long fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    return v.get<long long>();
  }

  int small_int(const std::string& key, int fallback) const {
    const long long v = integer(key, fallback);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ConfigError(field(key), "integer out of range");
    }
    return static_cast<int>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  const json& raw(const std::string& key) const { return j_.at(key); }

 private:
  const json& j_;
  std::string path_;
};

SoilModel read_direct_soil(const Reader& r) {
  SoilModel sm;
  sm.H = r.number("H");
  sm.Ca = r.number("Ca");
  sm.Cw = r.number("Cw");
  sm.cva = r.number("cva");
  sm.cvw = r.number("cvw");
  sm.ua0 = r.number("ua0");
  sm.uw0 = r.number("uw0");
  return sm;
}

ConstitutiveParameters read_constitutive(const Reader& r) {
  r.only({"m1a", "m2a", "m1w", "m2w", "n", "Sr", "ka", "kw", "ua0", "uw0", "uatm", "R", "T", "M", "gammaw"});
  ConstitutiveParameters cp;
  cp.m1a = r.number("m1a");
  cp.m2a = r.number("m2a");
  cp.m1w = r.number("m1w");
  cp.m2w = r.number("m2w");
  cp.n = r.number("n", cp.n);
  cp.Sr = r.number("Sr", cp.Sr);
  cp.ka = r.number("ka", cp.ka);
  cp.kw = r.number("kw", cp.kw);
  cp.ua0 = r.number("ua0", cp.ua0);
  cp.uw0 = r.number("uw0", cp.uw0);
  cp.uatm = r.number("uatm", cp.uatm);
  cp.R = r.number("R", cp.R);
  cp.T = r.number("T", cp.T);
  cp.M = r.number("M", cp.M);
  cp.gammaw = r.number("gammaw", cp.gammaw);
  return cp;
}

template <class F>
void check(const std::string& path, F&& body) {
  try {
    body();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

SoilModel SoilBlock::resolve() const {
  if (direct) return *direct;
  if (constitutive) return derive_coefficients(*constitutive, H);
  throw ConfigError("soil", "missing required block");
}

SegmentationPlan RunConfig::plan() const {
  if (segmentation.scheme == SegmentationScheme::simplified) {
    return plan_segments_simplified(soil_model(), horizon, segmentation.n_rest);
  }
  return plan_segments(horizon, segmentation.n);
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.arch = network;
  t.counts = sampling;
  t.weights = weights;
  t.optimizer = optimizer;
  t.seed = seed;
  t.burn_in = burn_in;
  t.burn_in_iterations = burn_in_iterations;
  t.t_floor = t_floor;
  return t;
}

GridSpec RunConfig::oracle_grid() const {
  GridSpec g = oracle;
  g.tmax = horizon;
  return g;
}

void RunConfig::validate() const {
  if (!soil.direct && !soil.constitutive) throw ConfigError("soil", "missing required block");
  SoilModel sm;
  check("soil", [&] { sm = soil_model(); });
  check("soil", [&] { sm.validate(); });
  check("soil", [&] {
    if (!validate_coupling(sm).dissipative) throw ConfigError("soil", "coupled system is not dissipative");
  });
  if (!(soil.ka_over_kw > 0.0)) throw ConfigError("soil.ka_over_kw", "must be positive");
  if (!(horizon > 1.0)) throw ConfigError("horizon", "must exceed 1 s");
  if (segmentation.scheme == SegmentationScheme::log_uniform && segmentation.n < 1) {
    throw ConfigError("segmentation.N", "must be at least 1");
  }
  if (segmentation.scheme == SegmentationScheme::simplified && segmentation.n_rest < 1) {
    throw ConfigError("segmentation.N_rest", "must be at least 1");
  }
  check("segmentation", [&] { plan().validate(); });
  check("network", [&] { network.validate(); });
  check("sampling", [&] { sampling.validate(); });
  check("weights", [&] { weights.validate(); });
  check("optimizer", [&] { optimizer.validate(); });
  if (burn_in_iterations < 0) throw ConfigError("training.burn_in_iterations", "must be nonnegative");
  if (!(t_floor > 0.0)) throw ConfigError("training.t_floor", "must be positive");
  if (!(t_floor < horizon)) throw ConfigError("training.t_floor", "must be below the horizon");
  check("oracle", [&] { oracle_grid().validate(); });
  if (!(inversion.t_max > t_floor)) throw ConfigError("inversion.t_max", "must exceed the time floor");
  if (inversion.segments < 1) throw ConfigError("inversion.segments", "must be at least 1");
  if (!(inversion.data_weight >= 0.0)) throw ConfigError("inversion.data_weight", "must be nonnegative");
  if (inversion.free.empty()) throw ConfigError("inversion.free", "needs at least one coefficient");
  for (const auto* v : {&inversion.cva, &inversion.cvw}) {
    if (*v && !(**v > 0.0)) throw ConfigError("inversion", "start values of cva and cvw must be positive");
  }
  if (workers < 0) throw ConfigError("workers", "must be nonnegative");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

RunConfig config_from_json(const json& j) {
  const Reader root(j, "");
  root.only({"soil", "horizon", "segmentation", "network", "sampling", "weights", "optimizer", "training", "oracle",
             "inversion", "seed", "output_dir", "workers"});
  RunConfig c;

  const Reader soil = root.object("soil");
  soil.only({"H", "Ca", "Cw", "cva", "cvw", "ua0", "uw0", "ka_over_kw", "constitutive"});
  c.soil.ka_over_kw = soil.number("ka_over_kw", 1.0);
  if (soil.has("constitutive")) {
    for (const char* k : {"Ca", "Cw", "cva", "cvw", "ua0", "uw0"}) {
      if (soil.has(k)) throw ConfigError(soil.field(k), "not allowed together with soil.constitutive");
    }
    c.soil.H = soil.number("H");
    c.soil.constitutive = read_constitutive(soil.object("constitutive"));
  } else {
    c.soil.direct = read_direct_soil(soil);
    c.soil.H = c.soil.direct->H;
  }

  c.horizon = root.number("horizon", c.horizon);

  if (root.has("segmentation")) {
    const Reader s = root.object("segmentation");
    s.only({"scheme", "N", "N_rest"});
    const std::string scheme = s.string("scheme", "log_uniform");
    if (scheme == "log_uniform") {
      c.segmentation.scheme = SegmentationScheme::log_uniform;
    } else if (scheme == "simplified") {
      c.segmentation.scheme = SegmentationScheme::simplified;
    } else {
      throw ConfigError(s.field("scheme"), "expected log_uniform or simplified");
    }
    c.segmentation.n = s.small_int("N", c.segmentation.n);
    c.segmentation.n_rest = s.small_int("N_rest", c.segmentation.n_rest);
  }

  if (root.has("network")) {
    const Reader s = root.object("network");
    s.only({"hidden_layers", "hidden_width"});
    c.network.hidden_layers = s.small_int("hidden_layers", c.network.hidden_layers);
    c.network.hidden_width = s.small_int("hidden_width", c.network.hidden_width);
  }

  if (root.has("sampling")) {
    const Reader s = root.object("sampling");
    s.only({"N_IC", "N_BC", "N_R", "N_S"});
    c.sampling.n_ic = s.small_int("N_IC", c.sampling.n_ic);
    c.sampling.n_bc = s.small_int("N_BC", c.sampling.n_bc);
    c.sampling.n_r = s.small_int("N_R", c.sampling.n_r);
    c.sampling.n_s = s.small_int("N_S", c.sampling.n_s);
  }

  if (root.has("weights")) {
    const Reader s = root.object("weights");
    s.only({"w_ic", "w_bc", "w_r", "w_s"});
    c.weights.ic = s.number("w_ic", c.weights.ic);
    c.weights.bc = s.number("w_bc", c.weights.bc);
    c.weights.r = s.number("w_r", c.weights.r);
    c.weights.s = s.number("w_s", c.weights.s);
  }

  if (root.has("optimizer")) {
    const Reader s = root.object("optimizer");
    s.only({"max_iterations", "memory", "wolfe_c1", "wolfe_c2", "grad_tol", "loss_change_tol", "max_line_search"});
    auto& o = c.optimizer;
    o.max_iterations = s.small_int("max_iterations", o.max_iterations);
    o.memory = s.small_int("memory", o.memory);
    o.wolfe_c1 = s.number("wolfe_c1", o.wolfe_c1);
    o.wolfe_c2 = s.number("wolfe_c2", o.wolfe_c2);
    o.grad_tol = s.number("grad_tol", o.grad_tol);
    o.loss_change_tol = s.number("loss_change_tol", o.loss_change_tol);
    o.max_line_search = s.small_int("max_line_search", o.max_line_search);
  }

  if (root.has("training")) {
    const Reader s = root.object("training");
    s.only({"burn_in", "burn_in_iterations", "t_floor"});
    c.burn_in = s.boolean("burn_in", c.burn_in);
    c.burn_in_iterations = s.small_int("burn_in_iterations", c.burn_in_iterations);
    c.t_floor = s.number("t_floor", c.t_floor);
  }

  if (root.has("oracle")) {
    const Reader s = root.object("oracle");
    s.only({"nz", "nt", "tmin", "log_time", "steps_per_decade"});
    c.oracle.nz = s.small_int("nz", c.oracle.nz);
    c.oracle.nt = s.small_int("nt", c.oracle.nt);
    c.oracle.tmin = s.number("tmin", c.oracle.tmin);
    c.oracle.log_time = s.boolean("log_time", c.oracle.log_time);
    c.oracle.steps_per_decade = s.small_int("steps_per_decade", c.oracle.steps_per_decade);
  }
  c.oracle.tmax = c.horizon;

  if (root.has("inversion")) {
    const Reader s = root.object("inversion");
    s.only({"free", "t_max", "segments", "data_weight", "cva", "cvw", "Ca", "Cw"});
    if (s.has("free")) {
      const auto& arr = s.raw("free");
      if (!arr.is_array()) throw ConfigError(s.field("free"), "expected an array of coefficient names");
      c.inversion.free.clear();
      for (std::size_t k = 0; k < arr.size(); ++k) {
        const std::string path = s.field("free") + "[" + std::to_string(k) + "]";
        if (!arr[k].is_string()) throw ConfigError(path, "expected a string");
        try {
          c.inversion.free.push_back(coefficient_from_string(arr[k].get<std::string>()));
        } catch (const ParameterError& e) {
          throw ConfigError(path, e.what());
        }
      }
    }
    c.inversion.t_max = s.number("t_max", c.inversion.t_max);
    c.inversion.segments = s.small_int("segments", c.inversion.segments);
    c.inversion.data_weight = s.number("data_weight", c.inversion.data_weight);
    c.inversion.cva = s.maybe_number("cva");
    c.inversion.cvw = s.maybe_number("cvw");
    c.inversion.Ca = s.maybe_number("Ca");
    c.inversion.Cw = s.maybe_number("Cw");
  }

  if (root.has("seed")) {
    const auto& v = j.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a nonnegative integer");
    }
    c.seed = v.get<std::uint64_t>();
  }
  c.output_dir = root.string("output_dir", c.output_dir);
  c.workers = root.small_int("workers", c.workers);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  json soil;
  if (c.soil.constitutive) {
    const auto& cp = *c.soil.constitutive;
    soil["H"] = c.soil.H;
    soil["constitutive"] = {{"m1a", cp.m1a}, {"m2a", cp.m2a}, {"m1w", cp.m1w}, {"m2w", cp.m2w},
                            {"n", cp.n},     {"Sr", cp.Sr},   {"ka", cp.ka},   {"kw", cp.kw},
                            {"ua0", cp.ua0}, {"uw0", cp.uw0}, {"uatm", cp.uatm}, {"R", cp.R},
                            {"T", cp.T},     {"M", cp.M},     {"gammaw", cp.gammaw}};
  } else if (c.soil.direct) {
    const auto& sm = *c.soil.direct;
    soil = {{"H", sm.H},     {"Ca", sm.Ca},   {"Cw", sm.Cw},  {"cva", sm.cva},
            {"cvw", sm.cvw}, {"ua0", sm.ua0}, {"uw0", sm.uw0}};
  }
  soil["ka_over_kw"] = c.soil.ka_over_kw;
  j["soil"] = soil;
  j["horizon"] = c.horizon;
  j["segmentation"] = {{"scheme", to_string(c.segmentation.scheme)},
                       {"N", c.segmentation.n},
                       {"N_rest", c.segmentation.n_rest}};
  j["network"] = {{"hidden_layers", c.network.hidden_layers}, {"hidden_width", c.network.hidden_width}};
  j["sampling"] = {{"N_IC", c.sampling.n_ic}, {"N_BC", c.sampling.n_bc}, {"N_R", c.sampling.n_r},
                   {"N_S", c.sampling.n_s}};
  j["weights"] = {{"w_ic", c.weights.ic}, {"w_bc", c.weights.bc}, {"w_r", c.weights.r}, {"w_s", c.weights.s}};
  const auto& o = c.optimizer;
  j["optimizer"] = {{"max_iterations", o.max_iterations}, {"memory", o.memory},
                    {"wolfe_c1", o.wolfe_c1},             {"wolfe_c2", o.wolfe_c2},
                    {"grad_tol", o.grad_tol},             {"loss_change_tol", o.loss_change_tol},
                    {"max_line_search", o.max_line_search}};
  j["training"] = {{"burn_in", c.burn_in}, {"burn_in_iterations", c.burn_in_iterations}, {"t_floor", c.t_floor}};
  j["oracle"] = {{"nz", c.oracle.nz},
                 {"nt", c.oracle.nt},
                 {"tmin", c.oracle.tmin},
                 {"log_time", c.oracle.log_time},
                 {"steps_per_decade", c.oracle.steps_per_decade}};
  json inv;
  inv["free"] = json::array();
  for (auto f : c.inversion.free) inv["free"].push_back(to_string(f));
  inv["t_max"] = c.inversion.t_max;
  inv["segments"] = c.inversion.segments;
  inv["data_weight"] = c.inversion.data_weight;
  if (c.inversion.cva) inv["cva"] = *c.inversion.cva;
  if (c.inversion.cvw) inv["cvw"] = *c.inversion.cvw;
  if (c.inversion.Ca) inv["Ca"] = *c.inversion.Ca;
  if (c.inversion.Cw) inv["Cw"] = *c.inversion.Cw;
  j["inversion"] = inv;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  return j;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_environment(RunConfig& c) {
  const char* s = std::getenv("PORO_SEED");
  if (s == nullptr || *s == '\0') return;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || end == s || *end != '\0' || *s == '-') {
    throw ConfigError("PORO_SEED", std::string("expected an unsigned integer, got '") + s + "'");
  }
  c.seed = v;
}

}  // namespace lbc
