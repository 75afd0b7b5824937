#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hakg/rng.hpp"
#include "hakg/tensor.hpp"

namespace hakg::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Matrix grad;  // same shape as value.matrix()
  Matrix m;     // Adam first moment
  Matrix v;     // Adam second moment
};

// Named trainable tensors with gradient slots and optimizer state. Parameter
// references stay valid while the store is alive (storage never relocates).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& add(std::string name, Tensor init);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return params_.size(); }
  std::deque<Parameter>& parameters() { return params_; }
  const std::deque<Parameter>& parameters() const { return params_; }

  void zero_grad();
  double squared_norm() const;
  std::size_t scalar_count() const;

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  // (name, shape) in insertion order.
  std::vector<std::pair<std::string, Shape>> signature() const;

  // Copies values only (gradients and moments untouched). Signatures must match.
  void copy_values_from(const ParamStore& other);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)). For a rows x cols matrix
// fan_out = rows and fan_in = cols; for a vector fan_in = n and fan_out = 1.
Tensor xavier_init(const Shape& shape, Rng& rng);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter; increments the step
// counter once. Throws NumericError on a non-finite gradient.
void adam_step(ParamStore& params, const AdamConfig& cfg);

}  // namespace hakg::nn
