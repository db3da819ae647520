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

#ifndef FLOWDICT_PARALLEL_HPP
#define FLOWDICT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace flowdict {

/// Worker threads to use for `jobs` independent work items:
/// min(jobs, FLOWDICT_THREADS if set, hardware concurrency).
std::size_t thread_budget(std::size_t jobs);

/// Splits [0, count) into `chunks` fixed slices and runs
/// fn(chunk_index, begin, end) for each, possibly concurrently.
///
/// Slice boundaries depend only on (count, chunks), never on the thread
/// budget, so callers that combine per-chunk results in chunk order get
/// identical output for every thread count.  fn must only write state owned
/// by its chunk.  The first exception thrown by any chunk is rethrown after
/// all workers finish.
void parallel_chunks(
    std::size_t count, std::size_t chunks,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace flowdict

#endif  // FLOWDICT_PARALLEL_HPP
