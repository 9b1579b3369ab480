#include "aop/autodiff/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "aop/errors.hpp"

namespace aop::autodiff {

Tensor ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  value.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, value);
  return value;
}

Tensor ParamStore::zeros(const std::string& name, Shape shape) { return add(name, Tensor::zeros(std::move(shape))); }

Tensor ParamStore::ones(const std::string& name, Shape shape) { return add(name, Tensor::full(std::move(shape), 1.0)); }

Tensor ParamStore::uniform(const std::string& name, Shape shape, double limit, Rng& rng) {
  std::vector<double> data(shape_size(shape));
  for (auto& v : data) v = rng.uniform(-limit, limit);
  return add(name, Tensor::from_data(std::move(shape), std::move(data)));
}

Tensor ParamStore::glorot(const std::string& name, Shape shape, Rng& rng) {
  const double fan_in = static_cast<double>(shape.size() >= 2 ? shape[shape.size() - 2] : 1);
  const double fan_out = static_cast<double>(shape.back());
  return uniform(name, std::move(shape), std::sqrt(6.0 / (fan_in + fan_out)), rng);
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return entries_[it->second].second;
}

std::size_t ParamStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

std::vector<double> ParamStore::snapshot() const {
  std::vector<double> out;
  out.reserve(element_count());
  for (const auto& [_, t] : entries_) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

void ParamStore::restore(const std::vector<double>& values) {
  if (values.size() != element_count()) throw ContractError("restore: snapshot size mismatch");
  std::size_t off = 0;
  for (auto& [_, t] : entries_) {
    auto dst = t.mutable_data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(off), dst.size(), dst.begin());
    off += dst.size();
  }
}

}  // namespace aop::autodiff
