#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdse/error.hpp"
#include "tdse_cli/commands.hpp"

namespace {

int fail(const std::string& code, const std::string& message, int status) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  using namespace tdse;

  CLI::App app{"Two-stage dynamic stacking ensemble toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "Flat key = value config file");
  app.add_option("--seed", seed, "Run seed (overrides the config)");
  app.add_option("--workers", workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory (overrides the config)");

  auto* ingest = app.add_subcommand("ingest", "Validate and align raw sources into a snapshot");
  auto* train = app.add_subcommand("train", "Walk-forward run with fixed hyper-parameters");
  auto* optimize = app.add_subcommand("optimize", "Stage-by-stage GA search, then a walk-forward run");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics per window from a predictions file");
  std::string predictions;
  std::optional<std::string> against;
  evaluate->add_option("--predictions", predictions, "predictions.csv (default <out>/predictions.csv)");
  evaluate->add_option("--against", against, "Second predictions file for a paired t-test");

  auto* bt = app.add_subcommand("backtest", "TDSE signals vs Buy & Hold vs Random");
  std::string signals;
  bt->add_option("--signals", signals, "date + predicted/signal CSV (default <out>/predictions.csv)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic raw-data directory");
  synth::SyntheticConfig sc;
  std::string synth_dir;
  synth->add_option("dir", synth_dir, "Target directory")->required();
  synth->add_option("--months", sc.months);
  synth->add_option("--industries", sc.industries);
  synth->add_option("--groups", sc.industry_groups);
  synth->add_option("--providers", sc.providers);
  synth->add_option("--global-strength", sc.global_strength);
  synth->add_option("--industry-strength", sc.industry_strength);
  synth->add_option("--sentiment-strength", sc.sentiment_strength);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("Usage", e.what(), 2);
  }

  try {
    if (synth->parsed()) {
      if (seed) sc.seed = *seed;
      cli::cmd_synth(sc, synth_dir);
      return 0;
    }
    cli::Overrides ov;
    ov.seed = seed;
    ov.workers = workers;
    if (out) ov.out = fs::path(*out);
    std::optional<fs::path> cfg;
    if (config_path) cfg = fs::path(*config_path);
    const auto rc = cli::load_run_config(cfg, ov);

    if (ingest->parsed()) {
      cli::cmd_ingest(rc);
    } else if (train->parsed()) {
      const auto s = cli::cmd_train(rc);
      std::cout << "mean accuracy " << s.mean_accuracy << " (random " << s.random_accuracy << ")\n";
    } else if (optimize->parsed()) {
      const auto s = cli::cmd_optimize(rc);
      std::cout << "mean accuracy " << s.mean_accuracy << " (random " << s.random_accuracy << ")\n";
    } else if (evaluate->parsed()) {
      std::optional<fs::path> other;
      if (against) other = fs::path(*against);
      cli::cmd_evaluate(rc, predictions.empty() ? rc.out / "predictions.csv" : fs::path(predictions), other);
    } else if (bt->parsed()) {
      cli::cmd_backtest(rc, signals.empty() ? rc.out / "predictions.csv" : fs::path(signals));
    }
  } catch (const Error& e) {
    return fail(to_string(e.code()), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
  return 0;
}
