#pragma once

#include <cstddef>
#include <functional>

#include "conekit/rng.hpp"

namespace conekit {

// Worker count from CONEKIT_THREADS, else the machine's parallelism.
int worker_count_from_env();

// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index owns
// its output slot, so results never depend on the worker count. The
// exception of the smallest failing index is rethrown.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

// Replicas [0, count) in consecutive blocks of `block`; block b runs
// fn(first, size, stream) with stream = rng.derive(b), so every replica's
// randomness is fixed by its block regardless of the worker count.
void for_each_block(std::size_t count, std::size_t block, int workers, const RngStream& rng,
                    const std::function<void(std::size_t, std::size_t, RngStream&)>& fn);

}  // namespace conekit
