#include "hakg/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "hakg/error.hpp"

namespace hakg::model {

using nn::Var;

namespace {

std::string mlp_name(std::size_t layer, const char* what) {
  return "mlp" + std::to_string(layer) + "." + what;
}

constexpr std::size_t kPredictiveFactors = 32;

}  // namespace

std::vector<std::size_t> tower_sizes(std::size_t input) {
  if (input == 0) throw ConfigError("tower input size must be positive");
  std::vector<std::size_t> sizes{input};
  std::size_t width = std::max(kPredictiveFactors, std::bit_floor(std::max<std::size_t>(1, input / 2)));
  for (; width > kPredictiveFactors; width /= 2) sizes.push_back(width);
  sizes.push_back(kPredictiveFactors);
  sizes.push_back(1);
  return sizes;
}

std::size_t mlp_input_size(const ModelShape& shape) {
  return (shape.variant == Variant::kNoSubgraph ? 2 : 3) * shape.dims.entity;
}

void add_mlp_params(nn::ParamStore& store, std::size_t input, Rng& rng) {
  const auto sizes = tower_sizes(input);
  for (std::size_t j = 0; j + 1 < sizes.size(); ++j) {
    store.add(mlp_name(j + 1, "weight"), nn::xavier_init({sizes[j + 1], sizes[j]}, rng));
    store.add(mlp_name(j + 1, "bias"), nn::Tensor({sizes[j + 1]}));
  }
}

MlpParams bind_mlp(nn::ParamStore& store, std::size_t input) {
  MlpParams mlp;
  const auto layers = tower_sizes(input).size() - 1;
  for (std::size_t j = 1; j <= layers; ++j) {
    mlp.weights.push_back(&store.get(mlp_name(j, "weight")));
    mlp.biases.push_back(&store.get(mlp_name(j, "bias")));
  }
  return mlp;
}

Var predict(nn::Tape& tape, Var e_u, std::optional<Var> g, Var e_i, const MlpParams& mlp, const EncodeContext& ctx) {
  Var x = g ? nn::concat_cols({e_u, *g, e_i}) : nn::concat_cols({e_u, e_i});
  if (mlp.weights.empty()) throw ConfigError("empty scoring tower");
  const auto in = mlp.weights.front()->value.matrix().cols();
  if (x.rows() != 1 || x.cols() != in) {
    throw ShapeError("tower input (" + std::to_string(x.rows()) + ", " + std::to_string(x.cols()) +
                     ") does not match first layer (" + std::to_string(mlp.weights.front()->value.matrix().rows()) +
                     ", " + std::to_string(in) + ")");
  }
  const std::size_t last = mlp.weights.size() - 1;
  for (std::size_t j = 0; j < last; ++j) {
    x = nn::relu(nn::add(nn::matmul_bt(x, tape.param(*mlp.weights[j])), tape.param(*mlp.biases[j])));
    if (ctx.training && ctx.dropout > 0.0) {
      if (ctx.rng == nullptr) throw ContractError("dropout in training mode needs an rng");
      x = nn::dropout(x, ctx.dropout, *ctx.rng, true);
    }
  }
  return nn::sigmoid(nn::add(nn::matmul_bt(x, tape.param(*mlp.weights[last])), tape.param(*mlp.biases[last])));
}

double batch_loss(std::span<const double> positive_scores, std::span<const double> negative_scores, double lambda,
                  double squared_norm) {
  auto clamp = [](double p) { return std::clamp(p, nn::kProbabilityClamp, 1.0 - nn::kProbabilityClamp); };
  double j = 0.0;
  for (double p : positive_scores) j -= std::log(clamp(p));
  for (double p : negative_scores) j -= std::log1p(-clamp(p));
  return j + lambda * squared_norm;
}

nn::ParamStore make_params(const ModelShape& shape, Rng& rng) {
  nn::ParamStore store;
  add_encoder_params(store, shape, rng);
  add_mlp_params(store, mlp_input_size(shape), rng);
  return store;
}

void check_layout(const nn::ParamStore& params, const ModelShape& shape) {
  Rng scratch(0);
  const auto expected = make_params(shape, scratch).signature();
  const auto actual = params.signature();
  for (const auto& [name, dims] : expected) {
    const auto* p = params.find(name);
    if (p == nullptr) throw ShapeError("parameter '" + name + "' missing for variant " + std::string(variant_name(shape.variant)));
    if (p->value.shape() != dims) {
      throw ShapeError("parameter '" + name + "' has shape " + nn::shape_string(p->value.shape()) + ", variant " +
                       std::string(variant_name(shape.variant)) + " expects " + nn::shape_string(dims));
    }
  }
  for (const auto& [name, dims] : actual) {
    auto it = std::find_if(expected.begin(), expected.end(), [&](const auto& e) { return e.first == name; });
    if (it == expected.end()) {
      throw ShapeError("unexpected parameter '" + name + "' for variant " + std::string(variant_name(shape.variant)));
    }
  }
}

HakgModel::HakgModel(const ModelShape& shape, std::uint64_t seed) : shape_(shape) {
  Rng rng(derive_seed(seed, {tag(StreamTag::kInit)}));
  params_ = make_params(shape_, rng);
  bind();
}

HakgModel::HakgModel(const ModelShape& shape, nn::ParamStore params) : shape_(shape), params_(std::move(params)) {
  check_layout(params_, shape_);
  bind();
}

HakgModel::HakgModel(const HakgModel& other) : shape_(other.shape_), params_(other.params_) { bind(); }

HakgModel& HakgModel::operator=(const HakgModel& other) {
  if (this != &other) {
    shape_ = other.shape_;
    params_ = other.params_;
    bind();
  }
  return *this;
}

void HakgModel::bind() {
  encoder_ = bind_encoder(params_, shape_);
  mlp_ = bind_mlp(params_, mlp_input_size(shape_));
}

ForwardTrace HakgModel::forward(nn::Tape& tape, const subgraph::Subgraph& sg, std::span<const TypeId> entity_types,
                                const EncodeContext& ctx) {
  if (sg.size() < 2) throw ContractError("subgraph must hold both anchors");
  ForwardTrace t;
  t.entities = encode_entities(tape, encoder_, sg, entity_types, shape_, ctx);
  const std::uint32_t u = subgraph::Subgraph::kUserAnchor;
  const std::uint32_t i = subgraph::Subgraph::kItemAnchor;
  Var e_u = nn::gather_rows(t.entities, {&u, 1});
  Var e_i = nn::gather_rows(t.entities, {&i, 1});
  if (uses_self_attention(shape_.variant)) {
    t.attention = attention_matrix(tape, encoder_, t.entities);
    t.pooled = subgraph_embedding(tape, encoder_, *t.attention, t.entities, aggregator_for(shape_.variant));
  } else if (shape_.variant == Variant::kNoAttention) {
    t.pooled = nn::mean(t.entities, nn::Axis::kRows);
  }
  t.score = predict(tape, e_u, t.pooled, e_i, mlp_, ctx);
  return t;
}

double HakgModel::score(const subgraph::Subgraph& sg, std::span<const TypeId> entity_types) {
  nn::Tape tape(false);
  return forward(tape, sg, entity_types, {}).score.value()(0, 0);
}

double accumulate_loss(HakgModel& model, std::span<const Example> batch, std::span<const TypeId> entity_types,
                       double lambda, const EncodeContext& ctx) {
  double j = 0.0;
  for (const auto& ex : batch) {
    nn::Tape tape;
    Var loss = nn::binary_nll(model.forward(tape, *ex.subgraph, entity_types, ctx).score, ex.positive);
    j += loss.value()(0, 0);
    tape.backward(loss);
  }
  if (lambda != 0.0) {
    for (auto& p : model.params().parameters()) {
      j += lambda * p.value.matrix().squaredNorm();
      p.grad += 2.0 * lambda * p.value.matrix();
    }
  }
  return j;
}

}  // namespace hakg::model
