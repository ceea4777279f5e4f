#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nco/rng.hpp"
#include "nco/tensor.hpp"

namespace nco {

// Ordered name -> tensor map. Each entry carries its adjoint buffer so a
// backward pass needs no side table. Iteration order is insertion order.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor adjoint;
  };

  void add(const std::string& name, Tensor value) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    index_[name] = entries_.size();
    Tensor adj = Tensor::zeros(value.shape);
    entries_.push_back(Entry{name, std::move(value), std::move(adj)});
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Entry& entry(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
    return entries_[it->second];
  }
  const Entry& entry(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("ParamStore: no parameter " + name);
    return entries_[it->second];
  }

  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }
  Tensor& adjoint(const std::string& name) { return entry(name).adjoint; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  size_t count() const { return entries_.size(); }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  void zero_adjoints() {
    for (auto& e : entries_)
      for (double& x : e.adjoint.data) x = 0.0;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// Fills every parameter i.i.d. uniform in [lo, hi], in store order.
void init_uniform(ParamStore& store, double lo, double hi, Rng& rng);

// Glorot-uniform matrices, uniform [-vec_range, vec_range] vectors/biases.
void init_network(ParamStore& store, double vec_range, Rng& rng);

// Scales all adjoints by max_norm/g when the global L2 norm g exceeds
// max_norm. Returns the scale applied (1.0 when within bounds).
double clip_global_norm(ParamStore& store, double max_norm);

double global_grad_norm(const ParamStore& store);

}  // namespace nco
