#include "hakg/encoder.hpp"

#include <array>
#include <cmath>
#include <string>

#include "hakg/error.hpp"

namespace hakg::model {

using nn::Matrix;
using nn::Var;

namespace {

constexpr std::array<Variant, 7> kVariants = {Variant::kFull,        Variant::kNoType,     Variant::kNoRelation,
                                              Variant::kNoAttention, Variant::kNoSubgraph, Variant::kMaxPool,
                                              Variant::kAttentionPool};

std::string layer_name(std::size_t layer, const char* what) {
  return "prop" + std::to_string(layer) + "." + what;
}

}  // namespace

Variant parse_variant(std::string_view name) {
  for (Variant v : kVariants) {
    if (variant_name(v) == name) return v;
  }
  if (name == "t") return Variant::kNoType;
  if (name == "r") return Variant::kNoRelation;
  if (name == "a") return Variant::kNoAttention;
  if (name == "g") return Variant::kNoSubgraph;
  throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, -t, -r, -a, -g, max or att)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoType: return "-t";
    case Variant::kNoRelation: return "-r";
    case Variant::kNoAttention: return "-a";
    case Variant::kNoSubgraph: return "-g";
    case Variant::kMaxPool: return "max";
    case Variant::kAttentionPool: return "att";
  }
  throw ConfigError("unknown variant id " + std::to_string(static_cast<int>(v)));
}

std::span<const Variant> all_variants() { return kVariants; }

bool uses_type_embedding(Variant v) { return v != Variant::kNoType; }
bool uses_relation_embedding(Variant v) { return v != Variant::kNoRelation; }
bool uses_self_attention(Variant v) { return v != Variant::kNoAttention && v != Variant::kNoSubgraph; }

Aggregator aggregator_for(Variant v) {
  switch (v) {
    case Variant::kMaxPool: return Aggregator::kMax;
    case Variant::kAttentionPool: return Aggregator::kAttention;
    default: return Aggregator::kMean;
  }
}

void add_encoder_params(nn::ParamStore& store, const ModelShape& shape, Rng& rng) {
  const auto& d = shape.dims;
  if (d.entity == 0 || d.type == 0 || d.relation == 0 || d.attention == 0 || d.heads == 0 || d.layers == 0) {
    throw ConfigError("all model dimensions must be positive");
  }
  if (shape.entities == 0 || shape.types == 0 || shape.relations == 0) {
    throw ConfigError("model needs at least one entity, type and relation");
  }
  const Variant v = shape.variant;
  store.add("entity.embedding", nn::xavier_init({shape.entities, d.entity}, rng));
  if (uses_type_embedding(v)) {
    store.add("type.embedding", nn::xavier_init({shape.types, d.type}, rng));
    store.add("init.weight", nn::xavier_init({d.entity, d.entity + d.type}, rng));
    store.add("init.bias", nn::Tensor({d.entity}));
  }
  if (uses_relation_embedding(v)) store.add("relation.embedding", nn::xavier_init({shape.relations, d.relation}, rng));
  const std::size_t message_in = uses_relation_embedding(v) ? d.entity + d.relation : d.entity;
  for (std::size_t l = 1; l <= d.layers; ++l) {
    store.add(layer_name(l, "w1"), nn::xavier_init({d.entity, message_in}, rng));
    store.add(layer_name(l, "w2"), nn::xavier_init({d.entity, d.entity}, rng));
  }
  if (uses_self_attention(v)) {
    store.add("attn.w1", nn::xavier_init({d.attention, d.entity}, rng));
    store.add("attn.w2", nn::xavier_init({d.heads, d.attention}, rng));
    if (aggregator_for(v) == Aggregator::kAttention) store.add("attn.context", nn::xavier_init({d.entity}, rng));
  }
}

EncoderParams bind_encoder(nn::ParamStore& store, const ModelShape& shape) {
  const Variant v = shape.variant;
  EncoderParams p;
  p.entity = &store.get("entity.embedding");
  if (uses_type_embedding(v)) {
    p.type = &store.get("type.embedding");
    p.init_weight = &store.get("init.weight");
    p.init_bias = &store.get("init.bias");
  }
  if (uses_relation_embedding(v)) p.relation = &store.get("relation.embedding");
  for (std::size_t l = 1; l <= shape.dims.layers; ++l) {
    p.neighbor_weight.push_back(&store.get(layer_name(l, "w1")));
    p.self_weight.push_back(&store.get(layer_name(l, "w2")));
  }
  if (uses_self_attention(v)) {
    p.attention_hidden = &store.get("attn.w1");
    p.attention_heads = &store.get("attn.w2");
    if (aggregator_for(v) == Aggregator::kAttention) p.head_context = &store.get("attn.context");
  }
  return p;
}

Propagation propagation_operator(const subgraph::Subgraph& sg, std::size_t relation_count) {
  const auto n = static_cast<Eigen::Index>(sg.size());
  Propagation prop;
  prop.degree.assign(sg.size(), 0);
  for (const auto& l : sg.links) {
    ++prop.degree[l.head];
    ++prop.degree[l.tail];
  }
  prop.laplacian = Matrix::Zero(n, n);
  prop.relation_mix = Matrix::Zero(n, static_cast<Eigen::Index>(relation_count));
  for (const auto& l : sg.links) {
    if (l.relation >= relation_count) {
      throw std::out_of_range("subgraph relation " + std::to_string(l.relation) + " outside the relation table");
    }
    const double c = 1.0 / std::sqrt(static_cast<double>(prop.degree[l.head] * prop.degree[l.tail]));
    prop.laplacian(l.head, l.tail) += c;
    prop.laplacian(l.tail, l.head) += c;
    prop.relation_mix(l.head, l.relation) += c;
    prop.relation_mix(l.tail, l.relation) += c;
  }
  return prop;
}

Var init_embeddings(nn::Tape& tape, const EncoderParams& p, const subgraph::Subgraph& sg,
                    std::span<const TypeId> entity_types, Variant variant) {
  Var e = tape.lookup(*p.entity, sg.entities);
  if (!uses_type_embedding(variant)) return e;
  std::vector<std::uint32_t> types;
  types.reserve(sg.size());
  for (EntityId g : sg.entities) {
    if (g >= entity_types.size()) throw std::out_of_range("entity " + std::to_string(g) + " has no type");
    TypeId t = entity_types[g];
    if (t >= static_cast<std::size_t>(p.type->value.matrix().rows())) {
      throw std::out_of_range("unknown type id " + std::to_string(t));
    }
    types.push_back(t);
  }
  Var t = tape.lookup(*p.type, types);
  Var x = nn::concat_cols({e, t});
  return nn::relu(nn::add(nn::matmul_bt(x, tape.param(*p.init_weight)), tape.param(*p.init_bias)));
}

Var propagate_layer(nn::Tape& tape, const EncoderParams& p, const Propagation& prop, Var h_prev, std::size_t layer,
                    Variant variant) {
  if (layer == 0 || layer > p.neighbor_weight.size()) throw ContractError("propagation layer out of range");
  if (h_prev.rows() != prop.laplacian.rows()) throw ShapeError("layer input rows do not match the subgraph size");
  Var lap = tape.constant(prop.laplacian);
  Var neighbors = nn::matmul(lap, h_prev);
  if (uses_relation_embedding(variant)) {
    Var rel = nn::matmul(tape.constant(prop.relation_mix), tape.param(*p.relation));
    neighbors = nn::concat_cols({neighbors, rel});
  }
  Var message = nn::matmul_bt(neighbors, tape.param(*p.neighbor_weight[layer - 1]));
  Var self = nn::matmul_bt(h_prev, tape.param(*p.self_weight[layer - 1]));
  return nn::relu(nn::add(self, message));
}

Var encode_entities(nn::Tape& tape, const EncoderParams& p, const subgraph::Subgraph& sg,
                    std::span<const TypeId> entity_types, const ModelShape& shape, const EncodeContext& ctx) {
  if (shape.dims.layers == 0) throw ContractError("encode_entities needs at least one layer");
  const Propagation prop = propagation_operator(sg, shape.relations);
  Var h = init_embeddings(tape, p, sg, entity_types, shape.variant);
  for (std::size_t l = 1; l <= shape.dims.layers; ++l) {
    h = propagate_layer(tape, p, prop, h, l, shape.variant);
    if (ctx.training && ctx.dropout > 0.0) {
      if (ctx.rng == nullptr) throw ContractError("dropout in training mode needs an rng");
      h = nn::dropout(h, ctx.dropout, *ctx.rng, true);
    }
  }
  return h;
}

Var attention_matrix(nn::Tape& tape, const EncoderParams& p, Var h) {
  if (h.rows() < 1) throw ShapeError("attention over an empty subgraph");
  Var hidden = nn::tanh(nn::matmul_bt(h, tape.param(*p.attention_hidden)));  // n x d_a
  return nn::softmax_rows(nn::matmul_bt(tape.param(*p.attention_heads), hidden));
}

Var subgraph_embedding(nn::Tape& tape, const EncoderParams& p, Var a, Var h, Aggregator aggregator) {
  if (a.cols() != h.rows()) throw ShapeError("attention columns do not match entity rows");
  Var heads = nn::matmul(a, h);  // m x d_e
  switch (aggregator) {
    case Aggregator::kMean: return nn::mean(heads, nn::Axis::kRows);
    case Aggregator::kMax: return nn::max(heads, nn::Axis::kRows);
    case Aggregator::kAttention: {
      if (p.head_context == nullptr) throw ConfigError("attention pooling needs a head context vector");
      Var scores = nn::transpose(nn::matmul_bt(heads, tape.param(*p.head_context)));  // 1 x m
      return nn::matmul(nn::softmax_rows(scores), heads);
    }
  }
  throw ConfigError("unknown aggregator");
}

}  // namespace hakg::model
