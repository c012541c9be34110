#include <benchmark/benchmark.h>

#include "pma/adversary.hpp"
#include "pma/fusion.hpp"
#include "pma/neuralnet.hpp"
#include "pma/simulator.hpp"

namespace {

using namespace pma;

Eigen::MatrixXd gaussian_batch(int rows, int cols, std::uint64_t seed) {
  RandomStream rng(seed);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.normal(0.0, 1.0);
  return x;
}

std::vector<int> sign_labels(const Eigen::MatrixXd& x) {
  std::vector<int> y(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) y[static_cast<std::size_t>(j)] = x.col(j).sum() > 0 ? 1 : 0;
  return y;
}

void BM_ForwardBatch(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const Mlp net(MlpSpec::with_input(m));
  const Eigen::MatrixXd x = gaussian_batch(m, 1024, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, x));
  state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_ForwardBatch)->Arg(2)->Arg(8)->Arg(20);

void BM_Backprop(benchmark::State& state) {
  const Mlp net(MlpSpec::with_input(8));
  const Eigen::MatrixXd x = gaussian_batch(8, static_cast<int>(state.range(0)), 2);
  const auto y = sign_labels(x);
  for (auto _ : state) benchmark::DoNotOptimize(backprop(net, x, y));
  state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_Backprop)->Arg(32)->Arg(256);

void BM_SurrogateTraining(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian_batch(8, 2000, 3);
  const auto y = sign_labels(x);
  for (auto _ : state) {
    Mlp net(MlpSpec::with_input(8));
    benchmark::DoNotOptimize(train(net, x, y, SgdConfig{}));
  }
}
BENCHMARK(BM_SurrogateTraining)->Unit(benchmark::kMillisecond);

void BM_CraftBatch(benchmark::State& state) {
  const Eigen::MatrixXd obs = gaussian_batch(8, 2000, 4);
  ObservationLog log(8);
  const auto labels = sign_labels(obs);
  for (Eigen::Index j = 0; j < obs.cols(); ++j) log.observe(obs.col(j), labels[static_cast<std::size_t>(j)]);
  SgdConfig sgd;
  sgd.epochs = 5;
  const SurrogateModel surrogate = fit_surrogate(log, MlpSpec::with_input(8), sgd);
  const Eigen::MatrixXd x = gaussian_batch(8, static_cast<int>(state.range(0)), 5);
  const auto inferred = sign_labels(x);
  const AdversaryConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(craft_batch(surrogate, x, inferred, cfg));
  state.SetItemsProcessed(state.iterations() * x.cols());
}
BENCHMARK(BM_CraftBatch)->Arg(256)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_FusionTraining(benchmark::State& state) {
  const ScenarioConfig cfg;
  const RandomStream rng(6);
  const auto data = generate_rounds(generate_profiles(cfg, rng), cfg, rng, 2000);
  for (auto _ : state) benchmark::DoNotOptimize(train_fusion(data, FusionTrainConfig{}));
}
BENCHMARK(BM_FusionTraining)->Unit(benchmark::kMillisecond);

void BM_FullRun(benchmark::State& state) {
  RunConfig cfg;
  cfg.adversary.controlled_ids = AdversaryConfig::first_devices(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run(cfg));
}
BENCHMARK(BM_FullRun)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_EvaluateThreshold(benchmark::State& state) {
  const Experiment exp(RunConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(exp.evaluate(0.75));
}
BENCHMARK(BM_EvaluateThreshold)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
