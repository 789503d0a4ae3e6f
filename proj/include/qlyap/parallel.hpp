#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qlyap/lyapunov.hpp"

namespace qlyap {

struct TaskFailure {
  std::uint64_t id;
  std::string message;
};

// Calls fn(id) for every id in [0, n). workers = 1 runs serially in id
// order (the reference path); otherwise an OpenMP team of `workers` threads
// (0: OpenMP default) takes ids dynamically. An exception escaping fn(id) is
// recorded against id and does not affect the other ids.
std::vector<TaskFailure> for_each_trajectory(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Aggregates the surviving exponents. With failures present this throws
// NumericalError listing them, unless allow_partial, in which case the
// estimate is flagged partial.
EnsembleEstimate finish_ensemble(std::vector<FiniteTimeExponent> ok, std::vector<TaskFailure> failures,
                                 bool allow_partial, const std::string& who);

int available_workers();

}  // namespace qlyap
