// Throughput benchmark for maxcos scoring: N random sentences x 84 option
// vectors at dimension D.
//
//   bench_scoring [--sentences N] [--dim D] [--threads T]

#include <chrono>
#include <iostream>
#include <random>
#include <thread>

#include <CLI11.hpp>

#include "symptomrank/similarity.hpp"

int main(int argc, char** argv) {
  using namespace symptomrank;
  std::size_t n = 1'000'000, dim = 768;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  CLI::App app{"maxcos scoring benchmark"};
  app.add_option("--sentences,-n", n, "number of sentence vectors");
  app.add_option("--dim,-d", dim, "embedding dimension");
  app.add_option("--threads,-t", threads, "worker threads");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 gen(7);
  std::normal_distribution<float> normal;
  std::vector<float> v(dim);
  auto fill = [&] {
    for (auto& x : v) x = normal(gen);
  };

  EmbeddingStore options(dim);
  for (int s = 1; s <= kNumSymptoms; ++s)
    for (int i = 0; i < kOptionsPerSymptom; ++i) {
      fill();
      options.add(option_vector_id(s, i), v);
    }
  const auto opts = OptionVectors::from_store(options);

  EmbeddingStore store(dim);
  store.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    fill();
    store.add("s" + std::to_string(i), v);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto m = score_matrix(store, opts, threads);
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double checksum = 0;
  for (double x : m.values) checksum += x;
  std::cout << n << " sentences x " << OptionVectors::kCount << " options, D=" << dim << ", " << threads
            << " threads: " << secs << " s (" << double(n) / secs << " sentences/s, checksum " << checksum << ")\n";
  return 0;
}
