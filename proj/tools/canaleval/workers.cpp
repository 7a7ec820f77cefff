#include "workers.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <string_view>
#include <thread>
#include <vector>

namespace canaleval::cli {

std::size_t resolve_workers(int flag_value) {
  if (flag_value > 0) return static_cast<std::size_t>(flag_value);
  if (const char* env = std::getenv("CANALEVAL_WORKERS")) {
    const std::string_view text(env);
    int value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec == std::errc() && value > 0) return static_cast<std::size_t>(value);
  }
  return 1;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(workers, n);
  if (threads <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace canaleval::cli
