// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

// The distro's benchmark_main archive carries LTO bytecode tied to one
// compiler release, so the entry point is defined here.
BENCHMARK_MAIN();
