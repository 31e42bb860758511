// Copyright 2026 The eqbg Authors.
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

#ifndef EQBG_PARALLEL_HPP
#define EQBG_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace eqbg {

/// Worker count used by parallel_for. Defaults to the hardware concurrency.
int num_threads() noexcept;
/// n <= 0 restores the default.
void set_num_threads(int n) noexcept;

/// Calls body(i) for every i in [0, count), spread over num_threads() workers
/// with a static partition. body must only write to per-index state. The
/// first exception thrown by any call is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Half-open index range [begin, end).
struct Chunk {
  std::size_t begin;
  std::size_t end;
};

/// Splits [0, count) into at most max_chunks contiguous chunks. The split
/// depends only on its arguments, so per-chunk partial sums reduced in chunk
/// order give the same bits for any thread count.
Chunk chunk_range(std::size_t count, std::size_t num_chunks, std::size_t index) noexcept;
std::size_t chunk_count(std::size_t count, std::size_t max_chunks) noexcept;

}  // namespace eqbg

#endif  // EQBG_PARALLEL_HPP
