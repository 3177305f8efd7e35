// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace gscodec {

/// Worker count used by parallel_for. Defaults to the hardware concurrency,
/// capped by the GSCODEC_THREADS environment variable.
unsigned thread_count();

/// Overrides the worker count for the current process (1 = serial).
void set_thread_count(unsigned threads);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and the thread count; bodies must write disjoint outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace gscodec
