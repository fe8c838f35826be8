#pragma once

#include <cstddef>
#include <functional>

namespace raclab {

/// Worker cap. 0 means "not set": RACLAB_THREADS is consulted, then the
/// hardware concurrency.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Splits [0, n) into contiguous chunks and runs body(begin, end, chunk_id)
/// on up to max_threads() workers. Chunk boundaries depend only on n and
/// the worker count, but callers must not let results depend on them.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace raclab
