#pragma once

#include <cstdint>

namespace aop::autodiff {

// Operation tallies for one instrumented run. Counters only ever increase
// while a scope is active.
struct OpCounter {
  std::uint64_t multiply_adds = 0;        // inner-product MACs performed by matrix kernels
  std::uint64_t decoder_invocations = 0;  // full decoder passes
  std::uint64_t param_sum_elements = 0;   // scalar multiply-adds spent mixing parameter vectors
};

// The counter installed on this thread, or nullptr.
OpCounter* active_counter();

// Installs `counter` for the current thread for the lifetime of the scope.
// Scopes nest; the previous counter is restored on exit.
class CounterScope {
 public:
  explicit CounterScope(OpCounter& counter);
  ~CounterScope();
  CounterScope(const CounterScope&) = delete;
  CounterScope& operator=(const CounterScope&) = delete;

 private:
  OpCounter* previous_;
};

inline void count_multiply_adds(std::uint64_t n) {
  if (auto* c = active_counter()) c->multiply_adds += n;
}
inline void count_decoder_invocation() {
  if (auto* c = active_counter()) ++c->decoder_invocations;
}
inline void count_param_sum(std::uint64_t n) {
  if (auto* c = active_counter()) c->param_sum_elements += n;
}

}  // namespace aop::autodiff
