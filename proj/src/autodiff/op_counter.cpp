#include "aop/autodiff/op_counter.hpp"

namespace aop::autodiff {

namespace {
thread_local OpCounter* t_counter = nullptr;
}

OpCounter* active_counter() { return t_counter; }

CounterScope::CounterScope(OpCounter& counter) : previous_(t_counter) { t_counter = &counter; }

CounterScope::~CounterScope() { t_counter = previous_; }

}  // namespace aop::autodiff
