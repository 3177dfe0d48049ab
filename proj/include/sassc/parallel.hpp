#pragma once

#include <cstddef>
#include <functional>

namespace sassc {

/// Worker cap: SASSC_THREADS if set and positive, otherwise the hardware count.
std::size_t worker_count();

/// Runs fn(i) for i in [0, count). Work items must be independent; callers
/// perform any reduction afterwards in index order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace sassc
