#pragma once

#include <cstddef>
#include <functional>

namespace canaleval::cli {

/// Worker count from --workers, else CANALEVAL_WORKERS, else 1.
std::size_t resolve_workers(int flag_value);

/// Runs task(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to per-index slots so output order never depends on scheduling.
/// The first exception (lowest index) is rethrown after all tasks finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

}  // namespace canaleval::cli
