#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hakg/autodiff.hpp"
#include "hakg/encoder.hpp"
#include "hakg/params.hpp"
#include "hakg/subgraph.hpp"

namespace hakg::model {

// Layer widths of the scoring tower, input first and 1 last. The first hidden
// width is the largest power of two <= input / 2 (at least 32), then widths
// halve down to 32: 384 -> 128 -> 64 -> 32 -> 1.
std::vector<std::size_t> tower_sizes(std::size_t input);

std::size_t mlp_input_size(const ModelShape& shape);  // 3 d_e, or 2 d_e for -g

struct MlpParams {
  std::vector<nn::Parameter*> weights;  // out x in
  std::vector<nn::Parameter*> biases;   // out
};

void add_mlp_params(nn::ParamStore& store, std::size_t input, Rng& rng);
MlpParams bind_mlp(nn::ParamStore& store, std::size_t input);

// sigmoid(tower([e_u ++ g ++ e_i])); g is omitted for -g. Returns 1 x 1.
nn::Var predict(nn::Tape& tape, nn::Var e_u, std::optional<nn::Var> g, nn::Var e_i, const MlpParams& mlp,
                const EncodeContext& ctx);

// Training objective: -sum ln p_pos - sum ln(1 - p_neg) + lambda * squared_norm,
// with probabilities clamped to [1e-12, 1 - 1e-12].
double batch_loss(std::span<const double> positive_scores, std::span<const double> negative_scores, double lambda,
                  double squared_norm);

struct ForwardTrace {
  nn::Var entities;                  // final H, n x d_e
  std::optional<nn::Var> attention;  // A, m x n (absent for -a and -g)
  std::optional<nn::Var> pooled;     // g, 1 x d_e (absent for -g)
  nn::Var score;                     // 1 x 1
};

// Parameters plus wiring for one variant.
class HakgModel {
 public:
  // Fresh Xavier initialisation from `seed`.
  HakgModel(const ModelShape& shape, std::uint64_t seed);
  // Adopts existing parameters; throws ShapeError naming the first tensor
  // whose name or shape does not fit `shape`.
  HakgModel(const ModelShape& shape, nn::ParamStore params);

  HakgModel(const HakgModel& other);
  HakgModel& operator=(const HakgModel& other);

  const ModelShape& shape() const { return shape_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }

  ForwardTrace forward(nn::Tape& tape, const subgraph::Subgraph& sg, std::span<const TypeId> entity_types,
                       const EncodeContext& ctx);

  // Evaluation-mode score without recording a tape.
  double score(const subgraph::Subgraph& sg, std::span<const TypeId> entity_types);

 private:
  void bind();

  ModelShape shape_;
  nn::ParamStore params_;
  EncoderParams encoder_;
  MlpParams mlp_;
};

// Creates the full parameter layout of a variant.
nn::ParamStore make_params(const ModelShape& shape, Rng& rng);

// Checks that `params` has exactly the layout of `shape`.
void check_layout(const nn::ParamStore& params, const ModelShape& shape);

struct Example {
  const subgraph::Subgraph* subgraph;
  bool positive;
};

// Adds the gradient of J = sum of example NLLs + lambda * ||theta||^2 into the
// parameter gradients (which are not zeroed first) and returns J.
double accumulate_loss(HakgModel& model, std::span<const Example> batch, std::span<const TypeId> entity_types,
                       double lambda, const EncodeContext& ctx);

}  // namespace hakg::model
