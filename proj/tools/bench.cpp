// Seeded trial batteries for the factored low-rank solvers.
//
//   bench run   --model regression --d1 100 --d2 100 --rank 5 --n 2500 --out trials.csv
//   bench sweep --model completion --axis n --values 1,3,5 --normalized --out sweep.csv
//
// Settings may also come from a key=value file (--config); flags win.
// Exit codes: 0 battery completed, 2 configuration error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "lowrank/bench.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;

struct Flag {
  const char* key;
  const char* help;
};

const std::vector<Flag> kValueFlags = {
    {"model", "regression | completion | onebit"},
    {"d1", "rows"},
    {"d2", "columns"},
    {"rank", "target rank r"},
    {"n", "measurements (regression) or expected observed entries"},
    {"p", "sampling probability (completion / onebit)"},
    {"noise", "none | rel<f> | abs:<sd>"},
    {"link", "logistic | probit (onebit)"},
    {"link-scale", "probit noise scale"},
    {"alpha", "entrywise bound of X* (onebit)"},
    {"scheme", "gaussian | uniform ground-truth factors"},
    {"sampling", "bernoulli | replacement"},
    {"init", "pgd | onestep | random"},
    {"random-scale", "auto | <v>"},
    {"trials", "number of trials"},
    {"seed", "base seed; trial t uses seed + t (BENCH_SEED overrides)"},
    {"eta", "auto | <v>"},
    {"eta-coeff", "coefficient of the automatic step size"},
    {"tau", "auto | <v> initialization step"},
    {"init-iters", "initialization iterations"},
    {"max-iters", "gradient descent iterations"},
    {"tol", "relative-change stopping tolerance"},
    {"radius", "auto | <v> row-norm constraint"},
    {"threshold", "success threshold on the squared relative error"},
    {"out", "output CSV path"},
    {"jobs", "parallel trials"},
};

struct Options {
  std::map<std::string, std::string> values;
  std::string config_path;
  bool unsquared = false;
  bool no_wall_time = false;
};

void add_common(CLI::App* app, Options& opts) {
  app->add_option("--config", opts.config_path, "key=value settings file");
  for (const auto& f : kValueFlags) {
    app->add_option_function<std::string>(
        std::string("--") + f.key,
        [&opts, key = std::string(f.key)](const std::string& v) { opts.values[key] = v; }, f.help)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
  app->add_flag("--unsquared", opts.unsquared, "threshold the unsquared relative error");
  app->add_flag("--no-wall-time", opts.no_wall_time, "leave the wall-time column empty");
}

lowrank::ExperimentConfig build_config(const Options& opts, bool validate) {
  lowrank::ExperimentConfig config;
  std::map<std::string, std::string> settings;
  if (!opts.config_path.empty()) settings = lowrank::read_config_file(opts.config_path);
  for (const auto& [k, v] : opts.values) settings[k] = v;
  if (opts.unsquared) settings["unsquared"] = "true";
  if (opts.no_wall_time) settings["wall-time"] = "false";
  if (const char* env = std::getenv("BENCH_SEED"); env && *env) settings["seed"] = env;
  lowrank::apply_settings(config, settings);
  if (validate) config.validate();
  return config;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item =
        text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw lowrank::ConfigError("--values: '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seeded recovery experiments for factored low-rank estimation"};
  app.require_subcommand(1);

  Options run_opts;
  bool trace = false;
  CLI::App* run = app.add_subcommand("run", "run one trial battery");
  add_common(run, run_opts);
  run->add_flag("--trace", trace, "write per-iteration traces for every init kind instead");

  Options sweep_opts;
  std::string axis = "n";
  std::string values;
  bool normalized = false;
  CLI::App* sw = app.add_subcommand("sweep", "run one battery per value of an axis");
  add_common(sw, sweep_opts);
  sw->add_option("--axis", axis, "n | p | dims")->check(CLI::IsMember({"n", "p", "dims"}));
  sw->add_option("--values", values, "comma-separated ascending values")->required();
  sw->add_flag("--normalized", normalized, "read n values as multiples of r max(d1, d2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; malformed command lines are config errors.
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (run->parsed()) {
      const lowrank::ExperimentConfig config = build_config(run_opts, true);
      if (trace) {
        lowrank::trace_export(config);
      } else {
        lowrank::run_experiment(config, &std::cout);
      }
    } else {
      const lowrank::ExperimentConfig config = build_config(sweep_opts, false);
      const auto rows = lowrank::sweep(config, lowrank::parse_sweep_axis(axis),
                                       parse_values(values), normalized, &std::cout);
      std::cout << "sweep axis=" << axis << " points=" << rows.size() << '\n';
    }
  } catch (const lowrank::ConfigError& e) {
    std::cerr << "bench: config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const lowrank::IoError& e) {
    std::cerr << "bench: I/O error: " << e.what() << '\n';
    return kIoExit;
  } catch (const lowrank::DomainError& e) {
    std::cerr << "bench: config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
