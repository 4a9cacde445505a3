#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "app.hpp"
#include "vcat/version.hpp"

namespace {

struct FlagValues {
  std::string config, out, data, schema, generator;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  std::size_t n = 0, k = 0, l = 0;
};

void add_flags(CLI::App* cmd, FlagValues& v) {
  cmd->add_option("--config", v.config, "JSON run configuration");
  cmd->add_option("--seed", v.seed, "Master seed (default: config, then VCAT_SEED, then 0)");
  cmd->add_option("--jobs", v.jobs, "Worker threads (default: machine parallelism)");
  cmd->add_option("--out", v.out, "Output directory");
  cmd->add_option("--data", v.data, "Trial CSV");
  cmd->add_option("--schema", v.schema, "Schema JSON");
  cmd->add_option("--n", v.n, "Number of recruited control patients used for training");
  cmd->add_option("--k", v.k, "Number of training sets (sensitivity)");
  cmd->add_option("--l", v.l, "Number of generated replicates (averaged procedure)")->check(CLI::PositiveNumber);
  cmd->add_option("--generator", v.generator, "Generator kind: bootstrap, marginals, copula, external");
}

template <class T>
void take(const CLI::App* cmd, const char* flag, const T& value, std::optional<T>& slot) {
  if (cmd->count(flag) > 0) slot = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation engine for trials whose control arm is completed with generated patients", "vcat-sim"};
  app.set_version_flag("--version", vcat::version());
  app.require_subcommand(1);

  FlagValues values;
  for (const char* name : {"n-first", "sensitivity", "simulate", "score", "tune", "impute"}) {
    add_flags(app.add_subcommand(name), values);
  }
  app.get_subcommand("n-first")->description("Train on the n earliest-enrolled controls, generate the rest");
  app.get_subcommand("sensitivity")->description("Repeat the averaged procedure over k random training sets");
  app.get_subcommand("simulate")->description("Write a simulated trial and its schema");
  app.get_subcommand("score")->description("Fidelity of a synthetic table against a real one");
  app.get_subcommand("tune")->description("Grid search with k-fold cross-validation");
  app.get_subcommand("impute")->description("Chained-equations imputation of missing cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : vcat::app::kExitValidation;
  }

  const CLI::App* cmd = app.get_subcommands().front();
  vcat::app::Overrides o;
  auto take_path = [&](const char* flag, const std::string& value, std::optional<std::filesystem::path>& slot) {
    if (cmd->count(flag) > 0) slot = value;
  };
  take_path("--config", values.config, o.config);
  take_path("--out", values.out, o.out);
  take_path("--data", values.data, o.data);
  take_path("--schema", values.schema, o.schema);
  take(cmd, "--seed", values.seed, o.seed);
  take(cmd, "--jobs", values.jobs, o.jobs);
  take(cmd, "--n", values.n, o.n);
  take(cmd, "--k", values.k, o.k);
  take(cmd, "--l", values.l, o.l);
  take(cmd, "--generator", values.generator, o.generator);
  return vcat::app::run(cmd->get_name(), o, std::cerr);
}
