#include <doctest.h>

#include <stdlib.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tdse/error.hpp"
#include "tdse_cli/commands.hpp"

using namespace tdse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tdse_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

// A synthetic raw directory shared by the tests of this file.
struct RawDir {
  fs::path dir = scratch("raw");
  RawDir() {
    synth::SyntheticConfig sc;
    sc.seed = 9;
    cli::cmd_synth(sc, dir);
  }
  ~RawDir() { fs::remove_all(dir); }
};

const fs::path& raw_dir() {
  static const RawDir raw;
  return raw.dir;
}

cli::RunConfig config_for(const fs::path& out, std::optional<std::size_t> workers = {}) {
  cli::Overrides ov;
  ov.out = out;
  ov.workers = workers;
  return cli::load_run_config(raw_dir() / "tdse.cfg", ov);
}

struct EnvGuard {
  std::string name;
  EnvGuard(std::string n, const std::string& value) : name(std::move(n)) { ::setenv(name.c_str(), value.c_str(), 1); }
  ~EnvGuard() { ::unsetenv(name.c_str()); }
};

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("config precedence: file, then environment, then command line") {
  const auto base = scratch("cfg");
  {
    std::ofstream f(base / "a.cfg");
    f << "seed = 4\nworkers = 2\ndata.providers = p\nmeta.knn_k = 7\n";
  }
  auto rc = cli::load_run_config(base / "a.cfg", {});
  CHECK(rc.seed == 4);
  CHECK(rc.workers == 2);
  CHECK(rc.stage2.knn_k == 7);
  CHECK(rc.data_dir == base / ".");
  {
    EnvGuard env("TDSE_META_KNN_K", "9");
    EnvGuard env2("TDSE_WORKERS", "3");
    rc = cli::load_run_config(base / "a.cfg", {});
    CHECK(rc.stage2.knn_k == 9);
    CHECK(rc.workers == 3);
    cli::Overrides ov;
    ov.workers = 5;
    ov.seed = 12;
    rc = cli::load_run_config(base / "a.cfg", ov);
    CHECK(rc.workers == 5);
    CHECK(rc.seed == 12);
  }
  CHECK(cli::load_run_config(base / "a.cfg", {}).stage2.knn_k == 7);
  fs::remove_all(base);
}

TEST_CASE("config errors") {
  const auto base = scratch("cfgerr");
  const auto write = [&](const std::string& text) {
    std::ofstream f(base / "c.cfg");
    f << text;
  };
  const auto code_of = [&](const cli::Overrides& ov = {}) {
    try {
      cli::load_run_config(base / "c.cfg", ov);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  write("data.providers = p\n");
  CHECK(code_of() == ErrorCode::InvalidConfig);  // no seed
  cli::Overrides seeded;
  seeded.seed = 1;
  CHECK_NOTHROW(cli::load_run_config(base / "c.cfg", seeded));
  write("seed = 1\nmeta.knn = 3\n");
  CHECK(code_of() == ErrorCode::InvalidConfig);  // unknown key
  write("seed = 1\ndata.tie = sideways\n");
  CHECK(code_of() == ErrorCode::InvalidConfig);
  write("seed = 1\ndata.providers = a,b\nrnn.weights = 1\n");
  CHECK(code_of() == ErrorCode::InvalidConfig);
  write("seed = 1\nga.selection = 1.5\n");
  CHECK(code_of() == ErrorCode::InvalidConfig);
  CHECK_THROWS_AS(cli::load_run_config(base / "missing.cfg", {}), Error);
  fs::remove_all(base);
}

TEST_CASE("ingest reports missing sources and is reproducible") {
  const auto base = scratch("ingest");
  {
    auto rc = config_for(base / "out");
    rc.target = base / "nope.csv";
    try {
      cli::cmd_ingest(rc);
      FAIL("expected MissingSource");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingSource);
    }
    auto rc2 = config_for(base / "out");
    rc2.providers.push_back("ghost");
    CHECK_THROWS_AS(cli::cmd_ingest(rc2), Error);
    CHECK_THROWS_AS(cli::load_snapshot(config_for(base / "empty")), Error);
  }
  const auto a = config_for(base / "a");
  const auto b = config_for(base / "b");
  const auto da = cli::cmd_ingest(a);
  cli::cmd_ingest(b);
  const auto ta = tree(a.snapshot);
  CHECK(ta == tree(b.snapshot));
  CHECK(ta.count("alignment.json") == 1);
  CHECK(ta.count("sentiment_provider0.csv") == 1);
  CHECK(ta.at("alignment.json").find("\"violations\": 0") != std::string::npos);

  // The snapshot reloads to the same dataset.
  const auto re = cli::load_snapshot(a);
  CHECK(re.calendar == da.calendar);
  REQUIRE(re.labels.size() == da.labels.size());
  for (std::size_t i = 0; i < re.labels.size(); ++i) CHECK(re.labels[i].direction == da.labels[i].direction);
  REQUIRE(re.sentiment.size() == da.sentiment.size());
  for (std::size_t i = 0; i < re.sentiment.size(); ++i) {
    std::ostringstream x, y;
    data::write_sentiment_csv(x, re.sentiment[i]);
    data::write_sentiment_csv(y, da.sentiment[i]);
    CHECK(x.str() == y.str());
  }
  fs::remove_all(base);
}

TEST_CASE("train output does not depend on the worker count") {
  const auto base = scratch("train");
  const auto one = config_for(base / "one", 1);
  auto four = config_for(base / "four", 4);
  four.snapshot = one.snapshot;
  cli::cmd_ingest(one);
  const auto s1 = cli::cmd_train(one);
  const auto s4 = cli::cmd_train(four);
  CHECK(s1.mean_accuracy == s4.mean_accuracy);
  CHECK(s1.mean_accuracy > 0.85);
  for (const char* f : {"report.csv", "report.json", "schedule.csv", "predictions.csv", "extractors.csv",
                        "summary.json"}) {
    CAPTURE(f);
    CHECK(slurp(base / "one" / f) == slurp(base / "four" / f));
  }
  CHECK(tree(base / "one" / "checkpoints") == tree(base / "four" / "checkpoints"));
  CHECK(tree(base / "one" / "features") == tree(base / "four" / "features"));

  SUBCASE("evaluate reproduces the per-window report") {
    auto rc = one;
    rc.out = base / "eval";
    cli::cmd_evaluate(rc, base / "one" / "predictions.csv", std::nullopt);
    const auto ev = lines_of(slurp(base / "eval" / "evaluation.csv"));
    const auto rep = lines_of(slurp(base / "one" / "report.csv"));
    CHECK(ev == rep);
    CHECK_THROWS_AS(cli::cmd_evaluate(rc, base / "nope.csv", std::nullopt), Error);
  }

  SUBCASE("backtest rows") {
    auto rc = one;
    rc.out = base / "bt";
    const auto reports = cli::cmd_backtest(rc, base / "one" / "predictions.csv");
    REQUIRE(reports.size() == 3);
    const auto econ = lines_of(slurp(base / "bt" / "econ.csv"));
    REQUIRE(econ.size() == 4);
    CHECK(econ[0] == "strategy,accumulative_return,monthly_return,sharpe_ratio,daily_return,max_drawdown");
    CHECK(econ[1].rfind("TDSE,", 0) == 0);
    CHECK(econ[2].rfind("BuyHold,", 0) == 0);
    CHECK(econ[3].rfind("Random,", 0) == 0);
    // Accurate signals beat holding the index.
    CHECK(reports[0].accumulative_return > reports[1].accumulative_return);

    // All-Up signals reproduce Buy & Hold.
    {
      std::ofstream f(base / "up.csv");
      f << "date,signal\n";
      for (const auto& line : lines_of(slurp(base / "one" / "predictions.csv"))) {
        if (line.rfind("window", 0) == 0) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        f << line.substr(c1 + 1, c2 - c1 - 1) << ",Up\n";
      }
    }
    rc.out = base / "up";
    cli::cmd_backtest(rc, base / "up.csv");
    const auto up = lines_of(slurp(base / "up" / "econ.csv"));
    CHECK(up[1].substr(up[1].find(',')) == up[2].substr(up[2].find(',')));
    CHECK(slurp(base / "up" / "equity_tdse.csv") == slurp(base / "up" / "equity_buyhold.csv"));

    // The random seed moves only the Random row.
    rc.out = base / "up2";
    rc.random_seed += 1;
    cli::cmd_backtest(rc, base / "up.csv");
    const auto up2 = lines_of(slurp(base / "up2" / "econ.csv"));
    CHECK(up2[1] == up[1]);
    CHECK(up2[2] == up[2]);
    CHECK(up2[3] != up[3]);

    {
      std::ofstream f(base / "bad.csv");
      f << "date,signal\n2019-01-05,Up\n";  // a Saturday
    }
    CHECK_THROWS_AS(cli::cmd_backtest(rc, base / "bad.csv"), Error);
  }
  fs::remove_all(base);
}
