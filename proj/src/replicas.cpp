#include "rectflow/replicas.hpp"

#include <fmt/format.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "rectflow/errors.hpp"

namespace rectflow {

std::size_t thread_budget() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RECTFLOW_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
  }
  return hw;
}

ReplicaSummary summarize(std::vector<std::vector<double>> samples) {
  ReplicaSummary s;
  s.replicas = samples.size();
  if (samples.empty()) return s;
  const std::size_t k = samples.front().size();
  for (const auto& row : samples)
    if (row.size() != k) throw DomainError("invalid_replica", "replicas returned different numbers of observables");
  const double R = static_cast<double>(samples.size());
  s.mean.assign(k, 0.0);
  s.std_error.assign(k, std::nan(""));
  for (const auto& row : samples)
    for (std::size_t j = 0; j < k; ++j) s.mean[j] += row[j];
  for (double& v : s.mean) v /= R;
  if (samples.size() > 1) {
    for (std::size_t j = 0; j < k; ++j) {
      double ss = 0.0;
      for (const auto& row : samples) ss += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
      s.std_error[j] = std::sqrt(ss / (R - 1.0) / R);
    }
  }
  s.samples = std::move(samples);
  return s;
}

ReplicaSummary replicas(const ReplicaOp& op, std::size_t R, std::uint64_t seed) {
  if (R == 0) throw DomainError("invalid_parameters", "need at least one replica");
  std::vector<std::vector<double>> results(R);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < R;) {
      try {
        results[r] = op(r, seed);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = R;
      }
    }
  };
  std::size_t threads = std::min(thread_budget(), R);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return summarize(std::move(results));
}

}  // namespace rectflow
