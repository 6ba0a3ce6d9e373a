// Serial reference kernel against the OpenMP kernel on a synthetic corpus.
#include <benchmark/benchmark.h>

#include <omp.h>

#include "folk/pipeline.hpp"
#include "folk/synthetic.hpp"

namespace {

struct Fixture {
  folk::RapGraph graph;
  folk::AssignmentMatrix previous;

  explicit Fixture(int scale) {
    folk::SyntheticSpec spec;
    spec.num_experts *= scale;
    spec.num_novices *= scale;
    auto syn = folk::generate_synthetic(spec);
    auto corpus = folk::ingest_synthetic(syn);
    std::vector<std::size_t> all(corpus.saplings.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto sample = folk::sample_nodes(corpus, all, std::vector<bool>(corpus.users.size(), false));
    auto matrix = folk::build_similarity(corpus, sample, {});
    folk::assign_preferences(matrix, {}, sample.expert);
    graph = folk::RapGraph::build(matrix, {sample.parent});
    previous.resize(sample.nodes.size());
    for (std::size_t i = 0; i < previous.size(); ++i) previous[i] = static_cast<int>(i);
  }
};

const Fixture& fixture(int scale) {
  static Fixture small(1), large(8);
  return scale == 1 ? small : large;
}

void run_sweeps(benchmark::State& state, folk::SweepKernel kernel) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  int threads = static_cast<int>(state.range(1));
  omp_set_num_threads(threads);
  folk::MessageState messages(f.graph.entries());
  for (auto _ : state) {
    folk::sweep(f.graph, messages, f.previous, 0.5, folk::FConstraint::modified, kernel);
    benchmark::DoNotOptimize(messages.alpha.data());
  }
  state.counters["entries"] = static_cast<double>(f.graph.entries());
}

void BM_SweepReference(benchmark::State& state) { run_sweeps(state, folk::SweepKernel::reference); }
void BM_SweepParallel(benchmark::State& state) { run_sweeps(state, folk::SweepKernel::parallel); }

}  // namespace

BENCHMARK(BM_SweepReference)->Args({1, 1})->Args({8, 1});
BENCHMARK(BM_SweepParallel)->Args({1, 1})->Args({8, 1})->Args({8, 2})->Args({8, 4});

BENCHMARK_MAIN();
