#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "embexp/pipeline.hpp"

namespace {

using namespace embexp;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kOracle = 3 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string out;
};

// defaults < config file < environment < flags
PipelineConfig resolve_config(const Flags& f) {
  std::string path = f.config;
  if (path.empty()) {
    if (const char* env = std::getenv("EMBEXP_CONFIG"); env && *env) path = env;
  }
  auto cfg = path.empty() ? default_config() : load_config(path);
  cfg = apply_env(std::move(cfg), [](const char* name) { return std::getenv(name); });
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.out.empty()) cfg.out = f.out;
  return cfg;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file (or EMBEXP_CONFIG)");
  cmd->add_option("--seed", f.seed, "global seed (or EMBEXP_SEED)");
  cmd->add_option("--jobs", f.jobs, "worker threads (or EMBEXP_JOBS)")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory (or EMBEXP_OUT)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Household experience collection, dataset compilation, scoring and the EWC-LoRA toy demo"};
  app.require_subcommand(1);
  Flags flags;

  auto* collect = app.add_subcommand("collect", "plan seen activities and explore random traces");
  add_common(collect, flags);

  auto* compile = app.add_subcommand("compile", "build train and eval datasets from experiences");
  add_common(compile, flags);
  std::string experiences;
  compile->add_option("--experiences", experiences, "experience JSONL (default: <out>/experiences.jsonl)");

  auto* score = app.add_subcommand("score", "score predictions against an eval dataset");
  add_common(score, flags);
  std::string predictions, eval;
  score->add_option("--predictions", predictions, "predictions JSONL with {id, output}")->required();
  score->add_option("--eval", eval, "eval JSONL (default: <out>/eval.jsonl)");

  auto* demo = app.add_subcommand("ewc-demo", "continual-learning toy comparison of four regimes");
  add_common(demo, flags);
  std::vector<double> lambdas;
  demo->add_option("--lambda", lambdas, "penalty strengths for the sweep (repeatable)");

  auto* validate = app.add_subcommand("validate", "recheck manifest hashes and eval gold answers");
  add_common(validate, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    auto cfg = resolve_config(flags);
    if (!lambdas.empty()) cfg.lambdas = lambdas;
    if (*collect) {
      cmd_collect(cfg, std::cout);
    } else if (*compile) {
      cmd_compile(cfg, std::cout, experiences.empty() ? std::nullopt : std::optional<fs::path>(experiences));
    } else if (*score) {
      cmd_score(cfg, predictions, std::cout, eval.empty() ? std::nullopt : std::optional<fs::path>(eval));
    } else if (*demo) {
      cmd_ewc_demo(cfg, std::cout);
    } else if (*validate) {
      cmd_validate(cfg, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "[config] " << e.what() << "\n";
    return kUsage;
  } catch (const OracleError& e) {
    std::cerr << e.what() << "\n";
    for (const auto& m : e.report().mismatches) std::cerr << "  " << m.id << ": " << m.message << "\n";
    return kOracle;
  } catch (const StageError& e) {
    std::cerr << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "[" << app.get_subcommands().front()->get_name() << "] " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
