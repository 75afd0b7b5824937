#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "hakg/autodiff.hpp"
#include "hakg/params.hpp"
#include "hakg/subgraph.hpp"
#include "hakg/types.hpp"

namespace hakg::model {

// Model variants. The numeric ids are the on-disk checkpoint encoding.
enum class Variant : std::uint8_t {
  kFull = 0,
  kNoType = 1,         // -t: no type embedding, no init transform
  kNoRelation = 2,     // -r: messages carry no relation embedding
  kNoAttention = 3,    // -a: mean over entity rows instead of self-attention
  kNoSubgraph = 4,     // -g: score from the two anchor rows only
  kMaxPool = 5,        // max over attention heads
  kAttentionPool = 6,  // learned attention over heads
};

Variant parse_variant(std::string_view name);  // full, -t, -r, -a, -g, max, att
std::string_view variant_name(Variant v);
std::span<const Variant> all_variants();

enum class Aggregator { kMean, kMax, kAttention };

struct Dimensions {
  std::size_t entity = 128;     // d_e
  std::size_t type = 32;        // d_t
  std::size_t relation = 32;    // d_r
  std::size_t attention = 128;  // d_a
  std::size_t heads = 5;        // m
  std::size_t layers = 2;       // L

  bool operator==(const Dimensions&) const = default;
};

struct ModelShape {
  std::size_t entities = 0;   // |E|
  std::size_t types = 0;      // |A|
  std::size_t relations = 0;  // |R|
  Dimensions dims;
  Variant variant = Variant::kFull;
};

bool uses_type_embedding(Variant v);
bool uses_relation_embedding(Variant v);
bool uses_self_attention(Variant v);  // false for -a and -g
Aggregator aggregator_for(Variant v);

// Handles into a ParamStore for the encoder tensors. Absent tensors (per
// variant) are null.
struct EncoderParams {
  nn::Parameter* entity = nullptr;    // |E| x d_e
  nn::Parameter* type = nullptr;      // |A| x d_t
  nn::Parameter* relation = nullptr;  // |R| x d_r
  nn::Parameter* init_weight = nullptr;  // d_e x (d_e + d_t)
  nn::Parameter* init_bias = nullptr;    // d_e
  std::vector<nn::Parameter*> neighbor_weight;  // per layer, d_e x (d_e + d_r) or d_e x d_e
  std::vector<nn::Parameter*> self_weight;      // per layer, d_e x d_e
  nn::Parameter* attention_hidden = nullptr;    // d_a x d_e
  nn::Parameter* attention_heads = nullptr;     // m x d_a
  nn::Parameter* head_context = nullptr;        // d_e, attention pooling only
};

// Adds the encoder tensors a variant needs, Xavier for matrices and zero
// biases.
void add_encoder_params(nn::ParamStore& store, const ModelShape& shape, Rng& rng);
EncoderParams bind_encoder(nn::ParamStore& store, const ModelShape& shape);

struct EncodeContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when training with dropout > 0
};

// Symmetric-normalised propagation operators of a subgraph. For local
// entities h, k joined by a link of relation r the coefficient is
// c = 1 / sqrt(deg(h) deg(k)) with degrees counted inside the subgraph;
// laplacian(h, k) sums c over such links and relation_mix(h, r) sums c over
// h's links of relation r.
struct Propagation {
  nn::Matrix laplacian;     // n x n
  nn::Matrix relation_mix;  // n x |R|
  std::vector<std::size_t> degree;
};

Propagation propagation_operator(const subgraph::Subgraph& sg, std::size_t relation_count);

// Layer-0 rows relu(W (e_h ++ t_h) + b); the raw entity rows for -t.
nn::Var init_embeddings(nn::Tape& tape, const EncoderParams& p, const subgraph::Subgraph& sg,
                        std::span<const TypeId> entity_types, Variant variant);

// One propagation layer (1-based `layer`):
//   e_h' = relu(W2 e_h + sum_k c_hk W1 (e_k ++ r_hk))
// evaluated as relu(W2 H + W1 [laplacian H ++ relation_mix Rel]) by linearity.
nn::Var propagate_layer(nn::Tape& tape, const EncoderParams& p, const Propagation& prop, nn::Var h_prev,
                        std::size_t layer, Variant variant);

// init_embeddings followed by L propagation layers, dropout after each layer
// in training mode. Returns the n x d_e matrix of final entity rows.
nn::Var encode_entities(nn::Tape& tape, const EncoderParams& p, const subgraph::Subgraph& sg,
                        std::span<const TypeId> entity_types, const ModelShape& shape, const EncodeContext& ctx);

// A = softmax_rows(W_heads tanh(W_hidden H^T)), m x n; each row is a
// distribution over the subgraph entities.
nn::Var attention_matrix(nn::Tape& tape, const EncoderParams& p, nn::Var h);

// g = f_g(A H). Output is 1 x d_e whatever the subgraph size.
nn::Var subgraph_embedding(nn::Tape& tape, const EncoderParams& p, nn::Var a, nn::Var h, Aggregator aggregator);

}  // namespace hakg::model
