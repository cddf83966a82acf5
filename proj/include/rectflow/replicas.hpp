#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace rectflow {

struct ReplicaSummary {
  std::size_t replicas = 0;
  std::vector<double> mean;
  std::vector<double> std_error;  // NaN when replicas == 1
  std::vector<std::vector<double>> samples;  // samples[r] = observables of replica r

  bool has_std_error() const { return replicas > 1; }
};

// Observables of one replica. The replica index doubles as the PRNG stream id.
using ReplicaOp = std::function<std::vector<double>(std::size_t replica, std::uint64_t seed)>;

// Threads from RECTFLOW_THREADS (default: hardware concurrency), at least 1.
std::size_t thread_budget();

// Runs op for r = 0..R-1, in parallel when allowed; reduction is in replica order.
ReplicaSummary replicas(const ReplicaOp& op, std::size_t R, std::uint64_t seed);

// Mean and standard error of one column of samples.
ReplicaSummary summarize(std::vector<std::vector<double>> samples);

}  // namespace rectflow
