#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "aop/autodiff/tensor.hpp"
#include "aop/rng.hpp"

namespace aop::autodiff {

// Named trainable leaves, kept in insertion order so that serialization and
// optimizer updates are deterministic.
class ParamStore {
 public:
  // Registers a new parameter; throws ContractError on a duplicate name.
  Tensor add(const std::string& name, Tensor value);
  Tensor zeros(const std::string& name, Shape shape);
  Tensor ones(const std::string& name, Shape shape);
  // uniform(-limit, limit)
  Tensor uniform(const std::string& name, Shape shape, double limit, Rng& rng);
  // Glorot/Xavier uniform over the two trailing dimensions.
  Tensor glorot(const std::string& name, Shape shape, Rng& rng);

  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;

  void zero_grad();
  // Values of every parameter concatenated in insertion order.
  std::vector<double> snapshot() const;
  void restore(const std::vector<double>& values);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace aop::autodiff
