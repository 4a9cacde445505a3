#include "app.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "vcat/error.hpp"
#include "vcat/experiments.hpp"
#include "vcat/fidelity.hpp"
#include "vcat/impute.hpp"
#include "vcat/parallel.hpp"
#include "vcat/preprocess.hpp"
#include "vcat/seed.hpp"
#include "vcat/version.hpp"

namespace vcat::app {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

namespace {

const std::set<std::string> kCommands{"n-first", "sensitivity", "simulate", "score", "tune", "impute"};

const std::set<std::string> kConfigKeys{"scenario", "data",     "schema", "synthetic",   "derive_outcome",
                                        "recode",   "impute",   "generator", "n",         "k",
                                        "l",        "folds",    "tuning_sets", "seed",    "jobs",
                                        "out",      "simulation"};

const std::set<std::string> kGeneratorKeys{"kind", "params", "grid", "executable"};

std::string scenario_name(const std::string& command) {
  std::string name = command;
  for (char& c : name) {
    if (c == '-') c = '_';
  }
  return name;
}

std::string absolute_text(const fs::path& base, const std::string& text) {
  const fs::path p(text);
  return (p.is_absolute() ? p : fs::absolute(base / p)).lexically_normal().string();
}

void resolve_path(ordered& doc, const char* key, const fs::path& base) {
  if (!doc.contains(key)) return;
  if (!doc[key].is_string()) throw ValidationError(std::string("config: '") + key + "' must be a path string");
  doc[key] = absolute_text(base, doc[key].get<std::string>());
}

ordered load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  ordered doc;
  try {
    doc = ordered::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config file " + path.string() + ": top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigKeys.count(key)) throw ValidationError("config: unknown key '" + key + "'");
  }
  const fs::path base = fs::absolute(path).parent_path();
  for (const char* key : {"data", "schema", "synthetic", "out"}) resolve_path(doc, key, base);
  if (doc.contains("generator")) {
    if (!doc["generator"].is_object()) throw ValidationError("config: 'generator' must be an object");
    for (const auto& [key, value] : doc["generator"].items()) {
      if (!kGeneratorKeys.count(key)) throw ValidationError("config: unknown generator key '" + key + "'");
    }
    resolve_path(doc["generator"], "executable", base);
  }
  return doc;
}

std::uint64_t parse_seed_text(const std::string& text, const char* origin) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw ValidationError(std::string(origin) + ": '" + text + "' is not an unsigned 64-bit seed");
  }
  return value;
}

std::size_t get_count(const ordered& cfg, const char* key, std::size_t fallback) {
  if (!cfg.contains(key)) return fallback;
  if (!cfg[key].is_number_unsigned()) throw ValidationError(std::string("config: '") + key + "' must be a non-negative integer");
  return cfg[key].get<std::size_t>();
}

std::size_t require_count(const ordered& cfg, const char* key, const std::string& command) {
  if (!cfg.contains(key)) throw ValidationError(command + ": '" + key + "' is required");
  return get_count(cfg, key, 0);
}

fs::path require_file(const ordered& cfg, const char* key, const std::string& command) {
  if (!cfg.contains(key)) throw ValidationError(command + ": '" + key + "' is required");
  const fs::path p = cfg[key].get<std::string>();
  if (!fs::is_regular_file(p)) throw ValidationError(command + ": " + key + " file not found: " + p.string());
  return p;
}

nlohmann::json plain(const ordered& doc) { return nlohmann::json::parse(doc.dump()); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Output directory plus the names of the files written so far.
class RunOutput {
 public:
  explicit RunOutput(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  void text(const std::string& name, const std::string& content) {
    write_text(dir_ / name, content);
    names_.push_back(name);
  }
  template <class Json>
  void json(const std::string& name, const Json& doc) {
    text(name, doc.dump(2) + "\n");
  }
  template <class Writer>
  void stream(const std::string& name, Writer&& writer) {
    std::ostringstream out;
    writer(out);
    text(name, out.str());
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

/// Removes the external generator's scratch directory when the run ends.
class ScratchDir {
 public:
  explicit ScratchDir(fs::path dir) : dir_(std::move(dir)) {}
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    if (!dir_.empty()) fs::remove_all(dir_, ec);
  }

 private:
  fs::path dir_;
};

struct Context {
  std::string command;
  ordered cfg;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  fs::path out;
  std::ostream* err = nullptr;
};

TrialDataset load_trial(const Context& ctx, const char* data_key = "data") {
  const fs::path schema_path = require_file(ctx.cfg, "schema", ctx.command);
  const fs::path data_path = require_file(ctx.cfg, data_key, ctx.command);
  const Schema schema = load_schema(schema_path);
  TrialDataset ds = load_csv(data_path, schema);

  if (ctx.cfg.contains("recode")) {
    for (const auto& [column, mapping] : ctx.cfg["recode"].items()) {
      ds = recode_categories(ds, column, mapping.get<std::map<std::string, std::string>>());
    }
  }
  if (ctx.cfg.contains("derive_outcome")) {
    const ordered& d = ctx.cfg["derive_outcome"];
    const auto from = d.at("from").get<std::vector<std::string>>();
    if (from.size() != 2) throw ValidationError("derive_outcome: 'from' must name two columns");
    ds = derive_binary_outcome(ds, from[0], from[1], OutcomeRule::from_json(plain(d.at("rule"))),
                               d.value("name", std::string("outcome")));
  }
  return ds;
}

ImputeOptions impute_options(const Context& ctx) {
  ImputeOptions options;
  options.seed = task_seed(ctx.seed, scenario_id::imputation, 0, 0);
  if (ctx.cfg.contains("impute") && ctx.cfg["impute"].is_object()) {
    options.iterations = ctx.cfg["impute"].value("iterations", options.iterations);
  }
  return options;
}

/// Imputes when the config asks for it and the data has gaps.
TrialDataset analysable(const Context& ctx, TrialDataset ds) {
  if (ctx.cfg.contains("impute") && !ds.complete()) {
    ImputeResult r = impute_chained(ds, impute_options(ctx));
    for (const auto& w : r.warnings) *ctx.err << "vcat-sim: warning: " << w << '\n';
    ds = std::move(r.dataset);
  }
  ds.require_analysable();
  return ds;
}

GeneratorConfig generator_config(const Context& ctx, std::optional<HyperGrid>& grid) {
  GeneratorConfig config;
  const ordered g = ctx.cfg.value("generator", ordered::object());
  config.kind = generator_kind_from_string(g.value("kind", std::string("bootstrap")));
  if (g.contains("params")) {
    if (!g["params"].is_object()) throw ValidationError("config: generator.params must be an object");
    config.params = plain(g["params"]);
  }
  if (g.contains("grid")) grid = HyperGrid::from_json(g["grid"]);
  if (config.kind == GeneratorKind::external) {
    if (!g.contains("executable")) throw ValidationError("config: external generator needs 'executable'");
    config.executable = g["executable"].get<std::string>();
    if (!fs::exists(config.executable)) {
      throw ValidationError("generator executable not found: " + config.executable.string());
    }
    config.work_dir = ctx.out / ".work";
  }
  return config;
}

ScenarioOptions scenario_options(const Context& ctx) {
  ScenarioOptions options;
  options.generator = generator_config(ctx, options.grid);
  options.replicates = get_count(ctx.cfg, "l", options.replicates);
  if (options.replicates < 1) throw ValidationError(ctx.command + ": l must be >= 1");
  options.seed = ctx.seed;
  options.jobs = ctx.jobs;
  options.folds = get_count(ctx.cfg, "folds", options.folds);
  options.tuning_sets = get_count(ctx.cfg, "tuning_sets", options.tuning_sets);
  return options;
}

void run_command(Context& ctx, RunOutput& out) {
  const std::string& cmd = ctx.command;
  if (cmd == "simulate") {
    SimSpec spec = SimSpec::from_json(plain(ctx.cfg.value("simulation", ordered::object())));
    spec.seed = ctx.seed;
    const TrialDataset ds = simulate_trial(spec);
    out.stream("data.csv", [&](std::ostream& o) { write_csv(o, ds.view()); });
    out.json("schema.json", ds.schema().to_json());
    return;
  }
  if (cmd == "score") {
    const TrialDataset real = load_trial(ctx);
    const TrialDataset syn = load_trial(ctx, "synthetic");
    out.json("quality.json", general_score(real.view(), syn.view()).to_json());
    return;
  }
  if (cmd == "impute") {
    const TrialDataset ds = load_trial(ctx);
    const ImputeResult r = impute_chained(ds, impute_options(ctx));
    for (const auto& w : r.warnings) *ctx.err << "vcat-sim: warning: " << w << '\n';
    out.stream("imputed.csv", [&](std::ostream& o) { write_csv(o, r.dataset.view()); });
    out.json("imputation.json", nlohmann::json{{"warnings", r.warnings}});
    return;
  }

  const TrialDataset ds = analysable(ctx, load_trial(ctx));
  ScenarioOptions options = scenario_options(ctx);
  const ScratchDir scratch(options.generator.kind == GeneratorKind::external ? options.generator.work_dir : fs::path());

  if (cmd == "tune") {
    if (!options.grid) throw ValidationError("tune: generator.grid is required");
    const std::size_t n = get_count(ctx.cfg, "n", ds.m0());
    const TrialDataset train = select_n_first(ds, n).resolve(ds);
    const CvOptions cv{options.folds, task_seed(ctx.seed, scenario_id::tuning, 0, 0), options.jobs};
    out.json("tuning.json", grid_search_cv(options.generator, train, *options.grid, cv).to_json());
  } else if (cmd == "n-first") {
    const NFirstReport report = run_n_first(ds, require_count(ctx.cfg, "n", cmd), options);
    out.json("report.json", report.to_json());
    out.stream("estimates.csv", [&](std::ostream& o) { report.write_estimates_csv(o); });
    out.stream("replicates.csv", [&](std::ostream& o) { report.write_replicates_csv(o); });
  } else {
    const SensitivityReport report =
        run_sensitivity(ds, require_count(ctx.cfg, "n", cmd), get_count(ctx.cfg, "k", 1000), options);
    out.json("report.json", report.to_json());
    out.stream("sets.csv", [&](std::ostream& o) { report.write_sets_csv(o); });
    out.stream("panel.csv", [&](std::ostream& o) { report.write_panel_csv(o); });
  }
}

}  // namespace

bool is_command(const std::string& name) { return kCommands.count(name) > 0; }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

namespace {

ordered merged_config(const std::string& command, const Overrides& o) {
  if (!is_command(command)) throw ValidationError("unknown command '" + command + "'");
  ordered cfg = o.config ? load_config_file(*o.config) : ordered::object();
  const std::string scenario = scenario_name(command);
  if (cfg.contains("scenario") && cfg["scenario"] != scenario) {
    throw ValidationError("config scenario '" + cfg["scenario"].get<std::string>() + "' does not match command '" +
                          command + "'");
  }
  cfg["scenario"] = scenario;

  const fs::path cwd = fs::current_path();
  if (o.data) cfg["data"] = absolute_text(cwd, o.data->string());
  if (o.schema) cfg["schema"] = absolute_text(cwd, o.schema->string());
  if (o.out) cfg["out"] = absolute_text(cwd, o.out->string());
  if (o.n) cfg["n"] = *o.n;
  if (o.k) cfg["k"] = *o.k;
  if (o.l) cfg["l"] = *o.l;
  if (o.jobs) cfg["jobs"] = *o.jobs;
  if (o.generator) {
    if (!cfg.contains("generator")) cfg["generator"] = ordered::object();
    cfg["generator"]["kind"] = *o.generator;
  }

  if (o.seed) {
    cfg["seed"] = *o.seed;
  } else if (cfg.contains("seed")) {
    if (cfg["seed"].is_string()) cfg["seed"] = parse_seed_text(cfg["seed"].get<std::string>(), "config seed");
    if (!cfg["seed"].is_number_unsigned()) throw ValidationError("config: 'seed' must be an unsigned integer");
  } else if (const char* env = std::getenv("VCAT_SEED"); env && *env) {
    cfg["seed"] = parse_seed_text(env, "VCAT_SEED");
  } else {
    cfg["seed"] = 0;
  }
  return cfg;
}

}  // namespace

nlohmann::json effective_config(const std::string& command, const Overrides& overrides) {
  return plain(merged_config(command, overrides));
}

int run(const std::string& command, const Overrides& overrides, std::ostream& err) {
  try {
    const ordered cfg = merged_config(command, overrides);
    Context ctx;
    ctx.command = command;
    ctx.err = &err;
    ctx.cfg = cfg;
    ctx.seed = cfg["seed"].get<std::uint64_t>();
    ctx.jobs = static_cast<unsigned>(get_count(cfg, "jobs", default_jobs()));
    if (ctx.jobs == 0) ctx.jobs = default_jobs();
    if (!cfg.contains("out")) throw ValidationError(command + ": output directory is required (--out or 'out')");
    ctx.out = cfg["out"].get<std::string>();

    RunOutput out(ctx.out);
    run_command(ctx, out);

    ordered recorded = cfg;
    recorded.erase("jobs");
    recorded.erase("out");
    ordered manifest;
    manifest["tool"] = "vcat-sim";
    manifest["version"] = version();
    manifest["build"] = build_info();
    manifest["scenario"] = cfg["scenario"];
    manifest["seed"] = ctx.seed;
    manifest["config"] = recorded;
    manifest["config_hash"] = fnv1a_hex(recorded.dump());
    manifest["outputs"] = out.names();
    write_text(out.dir() / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
  } catch (const ProtocolError& e) {
    err << "vcat-sim: external generator protocol error: " << e.what() << '\n';
    if (!e.child_stderr().empty()) err << "--- generator stderr ---\n" << e.child_stderr() << '\n';
    return kExitProtocol;
  } catch (const ValidationError& e) {
    err << "vcat-sim: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "vcat-sim: config: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "vcat-sim: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace vcat::app
