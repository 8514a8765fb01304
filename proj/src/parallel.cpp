#include "flowlab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace flowlab {

namespace {
std::atomic<int> g_default_threads{0};
}

void set_default_threads(int threads) { g_default_threads = threads; }

int default_threads() { return resolve_threads(g_default_threads); }

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FLOWLAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  const int workers = static_cast<int>(std::min<Index>(count, threads > 0 ? threads : default_threads()));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::mutex mu;
  Index failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double reduce_sum(const std::vector<double>& values, const ExecPolicy& policy) {
  if (policy.reduction == Reduction::fixed_order) {
    double s = 0;
    for (double v : values) s += v;
    return s;
  }
  const int workers = policy.threads > 0 ? policy.threads : default_threads();
  const std::size_t n = values.size();
  const std::size_t chunk = (n + workers - 1) / std::max(1, workers);
  std::vector<double> partial(workers, 0.0);
  parallel_for(workers, workers, [&](Index w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    partial[w] = s;
  });
  double s = 0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace flowlab
