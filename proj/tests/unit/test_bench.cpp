#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lowrank/bench.hpp"
#include "lowrank/csv.hpp"

using namespace lowrank;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(parse_csv_line(line));
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lowrank_tests";
  fs::create_directories(dir);
  return dir / name;
}

ExperimentConfig tiny_completion() {
  ExperimentConfig c;
  apply_settings(c, {{"model", "completion"},
                     {"d1", "20"},
                     {"d2", "16"},
                     {"rank", "2"},
                     {"p", "0.6"},
                     {"noise", "rel0.1"},
                     {"trials", "2"},
                     {"seed", "7"},
                     {"max-iters", "200"},
                     {"wall-time", "false"}});
  return c;
}

}  // namespace

TEST_SUITE("csv") {
  TEST_CASE("numbers round-trip in shortest form") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-300) == "1e-300");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(NAN) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    for (double v : {M_PI, 1.0 / 3.0, 6.02214076e23, -2.5e-17}) {
      CHECK(std::stod(format_number(v)) == v);
    }
  }

  TEST_CASE("fields are quoted only when needed") {
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
    std::ostringstream os;
    CsvWriter(os).row({"x", "a,b", "q\"", ""});
    CHECK(os.str() == "x,\"a,b\",\"q\"\"\",\n");
    const auto back = parse_csv_line("x,\"a,b\",\"q\"\"\",");
    CHECK(back == std::vector<std::string>{"x", "a,b", "q\"", ""});
  }
}

TEST_SUITE("experiment config") {
  TEST_CASE("settings map onto fields") {
    ExperimentConfig c;
    apply_settings(c, {{"model", "onebit"},
                       {"n", "5000"},
                       {"link", "logistic"},
                       {"eta", "0.01"},
                       {"tau", "auto"},
                       {"radius", "2"},
                       {"threshold", "0.01"},
                       {"unsquared", "true"},
                       {"init", "random"},
                       {"random-scale", "0.5"}});
    CHECK(c.model == ModelKind::OneBit);
    CHECK(c.sample_probability() == doctest::Approx(0.5));
    CHECK(c.resolved_scheme() == FactorScheme::UniformScaled);
    CHECK(*c.solver.eta == 0.01);
    CHECK_FALSE(c.init_cfg.tau.has_value());
    CHECK(*c.solver.projection_radius == 2.0);
    CHECK_FALSE(c.squared_threshold);
    CHECK(c.init == InitKind::Random);
    CHECK(c.normalized_budget() == doctest::Approx(10.0));
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("bad settings name the key") {
    ExperimentConfig c;
    CHECK_THROWS_WITH_AS(apply_setting(c, "d1", "ten"), doctest::Contains("d1"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_setting(c, "colour", "red"), doctest::Contains("colour"),
                         ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "seed", "-3"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "model", "tensor"), ConfigError);
    CHECK_THROWS_AS(apply_setting(c, "wall-time", "maybe"), ConfigError);
  }

  TEST_CASE("validation") {
    ExperimentConfig c;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("regression needs n"), ConfigError);
    c.n = 100;
    CHECK_NOTHROW(c.validate());
    c.r = 200;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ExperimentConfig{};
    c.model = ModelKind::Completion;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.p = 1.2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.p = 0.5;
    c.trials = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("config files skip comments and blank lines") {
    const fs::path p = scratch("settings.cfg");
    {
      std::ofstream out(p);
      out << "# battery\n\nmodel = completion\n  p=0.3\ntrials=4\n";
    }
    const auto m = read_config_file(p.string());
    CHECK(m.size() == 3);
    CHECK(m.at("model") == "completion");
    CHECK(m.at("p") == "0.3");

    {
      std::ofstream out(p);
      out << "model completion\n";
    }
    CHECK_THROWS_WITH_AS(read_config_file(p.string()), doctest::Contains(":1:"), ConfigError);
    CHECK_THROWS_AS(read_config_file((scratch("missing") / "none.cfg").string()), IoError);
  }
}

TEST_SUITE("trial battery") {
  TEST_CASE("success column follows the threshold rule") {
    const std::vector<TrialRow> rows = run_experiment(tiny_completion());
    REQUIRE(rows.size() == 2);
    ExperimentConfig c = tiny_completion();
    for (const auto& r : rows) {
      CHECK(r.success == meets_threshold(r.sq_rel_error, c));
      CHECK(r.success == (r.sq_rel_error < c.success_threshold));
      CHECK(r.seed == 7 + static_cast<std::uint64_t>(r.trial_id));
      CHECK_FALSE(r.wall_time_s.has_value());
    }
    c.squared_threshold = false;
    CHECK(meets_threshold(0.04, c) == (0.2 < c.success_threshold));
    CHECK_FALSE(meets_threshold(NAN, c));
  }

  TEST_CASE("repeated runs write identical bytes") {
    ExperimentConfig c = tiny_completion();
    c.output_path = scratch("a.csv").string();
    run_experiment(c);
    c.output_path = scratch("b.csv").string();
    run_experiment(c);
    c.output_path = scratch("c.csv").string();
    c.jobs = 2;
    run_experiment(c);
    const std::string a = slurp(scratch("a.csv"));
    CHECK(a.size() > 100);
    CHECK(a == slurp(scratch("b.csv")));
    CHECK(a == slurp(scratch("c.csv")));
  }

  TEST_CASE("trials depend only on their own seed") {
    ExperimentConfig c = tiny_completion();
    const TrialRow second = run_experiment(c)[1];
    c.base_seed = 8;
    c.trials = 1;
    const TrialRow alone = run_experiment(c)[0];
    CHECK(alone.sq_rel_error == second.sq_rel_error);
    CHECK(alone.n_obs == second.n_obs);
  }

  TEST_CASE("matches the golden file") {
    ExperimentConfig c = tiny_completion();
    c.output_path = scratch("golden.csv").string();
    run_experiment(c);
    const auto got = read_csv(c.output_path);
    const auto want = read_csv(fs::path(LOWRANK_GOLDEN_DIR) / "tiny_completion.csv");
    REQUIRE(got.size() == want.size());
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].size() == want[i].size());
      for (std::size_t j = 0; j < got[i].size(); ++j) {
        // Numeric columns get a relative tolerance so that a different libm
        // does not fail the test; everything else must match exactly.
        char* end = nullptr;
        const double w = std::strtod(want[i][j].c_str(), &end);
        if (i > 0 && !want[i][j].empty() && *end == '\0') {
          CHECK_MESSAGE(std::stod(got[i][j]) == doctest::Approx(w).epsilon(1e-8),
                        "row " << i << " column " << want[0][j]);
        } else {
          CHECK(got[i][j] == want[i][j]);
        }
      }
    }
  }

  TEST_CASE("unwritable output is an I/O error") {
    ExperimentConfig c = tiny_completion();
    c.output_path = (scratch("no_such_dir") / "x" / "out.csv").string();
    CHECK_THROWS_AS(run_experiment(c), IoError);
  }

  TEST_CASE("summary statistics") {
    std::vector<TrialRow> rows(4);
    const double errs[] = {4.0, 1.0, 3.0, 2.0};
    for (int i = 0; i < 4; ++i) {
      rows[i].sq_rel_error = errs[i];
      rows[i].normalized_error = 2 * errs[i];
      rows[i].success = i % 2 == 0;
      rows[i].p = 0.25 * (i + 1);
    }
    const ExperimentSummary s = summarize(rows);
    CHECK(s.successes == 2);
    CHECK(s.success_probability == 0.5);
    CHECK(s.median_sq_rel_error == 2.5);
    CHECK(s.mean_sq_rel_error == 2.5);
    CHECK(s.mean_normalized_error == 5.0);
    CHECK(s.mean_observed_fraction == doctest::Approx(0.625));
  }
}

TEST_SUITE("sweeps and traces") {
  TEST_CASE("single-value sweep reproduces the battery") {
    ExperimentConfig c = tiny_completion();
    const ExperimentSummary s = summarize(run_experiment(c));
    c.output_path = scratch("sweep.csv").string();
    const auto rows = sweep(c, SweepAxis::P, {0.6});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].mean_sq_rel_error == s.mean_sq_rel_error);
    CHECK(rows[0].success_prob == s.success_probability);
    CHECK(rows[0].normalized_axis == s.mean_observed_fraction);
    const auto csv = read_csv(c.output_path);
    REQUIRE(csv.size() == 2);
    CHECK(csv[0] == sweep_csv_header());
    CHECK(std::stod(csv[1][3]) == s.mean_sq_rel_error);
  }

  TEST_CASE("sweep points") {
    ExperimentConfig base;
    base.d1 = base.d2 = 100;
    base.r = 5;
    base.n = 2500;
    CHECK(*sweep_point(base, SweepAxis::N, 4, true).n == 2000);
    CHECK(*sweep_point(base, SweepAxis::N, 700, false).n == 700);
    const ExperimentConfig dims = sweep_point(base, SweepAxis::Dims, 200);
    CHECK(dims.d1 == 200);
    CHECK(dims.normalized_budget() == doctest::Approx(base.normalized_budget()));
    base.model = ModelKind::Completion;
    base.n.reset();
    base.p = 0.3;
    CHECK(sweep_point(base, SweepAxis::Dims, 50).sample_probability() == 0.3);
    CHECK(sweep_point(base, SweepAxis::P, 0.7).sample_probability() == 0.7);
  }

  TEST_CASE("sweep argument errors") {
    const ExperimentConfig c = tiny_completion();
    CHECK_THROWS_AS(sweep(c, SweepAxis::P, {}), ConfigError);
    CHECK_THROWS_AS(sweep(c, SweepAxis::P, {0.5, 0.3}), ConfigError);
    CHECK_THROWS_AS(sweep(c, SweepAxis::P, {0.5, 1.5}), ConfigError);
    CHECK_THROWS_AS(parse_sweep_axis("time"), ConfigError);
  }

  TEST_CASE("trace export covers every init kind") {
    ExperimentConfig c = tiny_completion();
    c.solver.max_iters = 30;
    c.output_path = scratch("trace.csv").string();
    const auto pts = trace_export(c);
    const auto csv = read_csv(c.output_path);
    CHECK(csv.size() == pts.size() + 1);
    CHECK(csv[0] == trace_csv_header());
    int starts = 0;
    for (const auto& p : pts) starts += p.iter == 0;
    CHECK(starts == 3);
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].iter > 0) CHECK(pts[i].iter == pts[i - 1].iter + 1);
    }
  }
}
