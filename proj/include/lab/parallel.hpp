#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lab {

// Resolve a worker count: explicit request > LAB_WORKERS > hardware.
inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LAB_WORKERS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Run f(i) for i in [0, n).  Work is handed out in index chunks from an atomic
// counter; f must write its result into a slot indexed by i (never to shared
// accumulators), so the outcome is independent of scheduling and worker count.
// Aggregation happens afterwards in index order.
template <class F>
void parallel_for_samples(std::uint64_t n, unsigned workers, F&& f) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) f(i);
    return;
  }
  const std::uint64_t chunk = std::max<std::uint64_t>(1, n / (8 * workers));
  std::atomic<std::uint64_t> cursor{0};
  auto worker = [&] {
    for (;;) {
      std::uint64_t lo = cursor.fetch_add(chunk);
      if (lo >= n) return;
      std::uint64_t hi = std::min(n, lo + chunk);
      for (std::uint64_t i = lo; i < hi; ++i) f(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

// One-pass mean and standard error over a sample vector, folded in index
// order.  (Welford; the fold order is fixed so repeated runs agree bitwise.)
struct MeanSE {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
};

inline MeanSE fold_mean_se(const std::vector<double>& xs) {
  MeanSE r;
  double m = 0.0, m2 = 0.0;
  std::uint64_t n = 0;
  for (double x : xs) {
    ++n;
    double d = x - m;
    m += d / static_cast<double>(n);
    m2 += d * (x - m);
  }
  r.mean = m;
  r.n = n;
  if (n > 1) {
    double var = m2 / static_cast<double>(n - 1);
    r.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

}  // namespace lab
