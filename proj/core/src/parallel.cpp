// Copyright 2026 The flowdict authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flowdict/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace flowdict {

std::size_t thread_budget(std::size_t jobs) {
  if (jobs <= 1) return jobs;
  std::size_t budget = std::thread::hardware_concurrency();
  if (budget == 0) budget = 1;
  if (const char* env = std::getenv("FLOWDICT_THREADS")) {
    try {
      const long parsed = std::stol(env);
      if (parsed >= 1) budget = static_cast<std::size_t>(parsed);
    } catch (const std::exception&) {
      // Unparseable values fall back to hardware concurrency.
    }
  }
  return std::min(jobs, budget);
}

void parallel_chunks(
    std::size_t count, std::size_t chunks,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (count == 0 || chunks == 0) return;
  chunks = std::min(chunks, count);

  // Boundary ci*count/chunks is a pure function of (count, chunks); the
  // worker pool size below never shifts which indices land in which chunk.
  const auto run_chunk = [&](std::size_t ci) {
    const std::size_t begin = ci * count / chunks;
    const std::size_t end = (ci + 1) * count / chunks;
    fn(ci, begin, end);
  };

  const std::size_t workers = thread_budget(chunks);
  if (workers <= 1) {
    for (std::size_t ci = 0; ci < chunks; ++ci) run_chunk(ci);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&]() {
    for (;;) {
      const std::size_t ci = next.fetch_add(1);
      if (ci >= chunks) return;
      try {
        run_chunk(ci);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 0; i + 1 < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowdict
