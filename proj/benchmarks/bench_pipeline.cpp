#include <benchmark/benchmark.h>

#include <unistd.h>

#include <filesystem>

#include "tdse/pipeline.hpp"
#include "tdse_cli/commands.hpp"

using namespace tdse;
namespace fs = std::filesystem;

namespace {

struct Data {
  pipeline::Prepared prepared;
  pipeline::Stage1Hyper hyper;
};

const Data& data() {
  static const Data d = [] {
    const auto dir = fs::temp_directory_path() / ("tdse_bench_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    synth::SyntheticConfig sc;
    cli::cmd_synth(sc, dir / "raw");
    cli::Overrides ov;
    ov.out = dir / "out";
    const auto rc = cli::load_run_config(dir / "raw" / "tdse.cfg", ov);
    Data out{pipeline::prepare(cli::cmd_ingest(rc), rc.lags, rc.windows), rc.stage1};
    fs::remove_all(dir);
    return out;
  }();
  return d;
}

void BM_WindowFeatures(benchmark::State& state) {
  const auto& d = data();
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::window_features(d.prepared, 5, d.hyper, 1));
}
BENCHMARK(BM_WindowFeatures)->Unit(benchmark::kMillisecond);

void BM_Stage2AllWindows(benchmark::State& state) {
  const auto& d = data();
  const std::vector<pipeline::Stage1Hyper> hyper = {d.hyper};
  const auto features = pipeline::all_features(d.prepared, hyper, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::run_stage2(features, meta::MetaHyper{}, 1, 1));
}
BENCHMARK(BM_Stage2AllWindows)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
