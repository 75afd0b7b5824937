#include "hakg/params.hpp"

#include <cmath>

#include "hakg/error.hpp"

namespace hakg::nn {

ParamStore::ParamStore(const ParamStore& other)
    : params_(other.params_), index_(other.index_), step_(other.step_) {}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    params_ = other.params_;
    index_ = other.index_;
    step_ = other.step_;
  }
  return *this;
}

Parameter& ParamStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  Parameter p;
  p.name = name;
  const auto rows = init.matrix().rows();
  const auto cols = init.matrix().cols();
  p.value = std::move(init);
  p.grad = Matrix::Zero(rows, cols);
  p.m = Matrix::Zero(rows, cols);
  p.v = Matrix::Zero(rows, cols);
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter* ParamStore::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParamStore::get(const std::string& name) {
  if (auto* p = find(name)) return *p;
  throw ContractError("no parameter named '" + name + "'");
}

const Parameter& ParamStore::get(const std::string& name) const {
  if (const auto* p = find(name)) return *p;
  throw ContractError("no parameter named '" + name + "'");
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += p.value.matrix().squaredNorm();
  return s;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<std::pair<std::string, Shape>> ParamStore::signature() const {
  std::vector<std::pair<std::string, Shape>> sig;
  for (const auto& p : params_) sig.emplace_back(p.name, p.value.shape());
  return sig;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (signature() != other.signature()) throw ShapeError("parameter signatures differ");
  for (std::size_t k = 0; k < params_.size(); ++k) params_[k].value = other.params_[k].value;
}

Tensor xavier_init(const Shape& shape, Rng& rng) {
  double fan_in, fan_out;
  if (shape.size() == 1) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = 1.0;
  } else if (shape.size() == 2) {
    fan_out = static_cast<double>(shape[0]);
    fan_in = static_cast<double>(shape[1]);
  } else {
    throw ShapeError("xavier_init expects a 1- or 2-dimensional shape, got " + shape_string(shape));
  }
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (double& x : t.values()) x = uniform_real(rng, -bound, bound);
  return t;
}

void adam_step(ParamStore& params, const AdamConfig& cfg) {
  for (const auto& p : params.parameters()) check_finite(p.grad, ("gradient of " + p.name).c_str());
  const auto t = static_cast<double>(params.step() + 1);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& p : params.parameters()) {
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.matrix().array() -=
        cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
  }
  params.set_step(params.step() + 1);
}

}  // namespace hakg::nn
