#pragma once

#include "flowlab/tensor.hpp"

#include <functional>
#include <vector>

namespace flowlab {

enum class Reduction { fixed_order, parallel };

struct ExecPolicy {
  int threads = 0;  // 0: process default
  Reduction reduction = Reduction::fixed_order;
};

// Process-wide default used when ExecPolicy::threads == 0.
void set_default_threads(int threads);
int default_threads();

// requested > 0, else FLOWLAB_THREADS, else hardware concurrency.
int resolve_threads(int requested);

// Calls fn(i) for i in [0, count) on up to `threads` workers. The exception of the
// lowest failing index is rethrown.
void parallel_for(Index count, int threads, const std::function<void(Index)>& fn);

// Sum of values; fixed_order is a left fold independent of thread count.
double reduce_sum(const std::vector<double>& values, const ExecPolicy& policy);

}  // namespace flowlab
