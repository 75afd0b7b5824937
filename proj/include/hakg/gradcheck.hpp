#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "hakg/params.hpp"

namespace hakg::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Tensors with at most this many entries are checked exhaustively; larger
  // ones get `min_coords` random coordinates plus their `min_coords`
  // largest-gradient coordinates.
  std::size_t exhaustive_limit = 256;
  std::size_t min_coords = 64;
  std::uint64_t seed = 0;
};

// Compares the gradients already stored in `params` against central
// differences (f(x + eps) - f(x - eps)) / (2 eps) of `f`, which must read the
// current parameter values and be deterministic. Relative error per
// coordinate is |analytic - numeric| / max(1e-8, |numeric|).
GradCheckResult finite_diff_check(const std::function<double()>& f, ParamStore& params,
                                  const GradCheckOptions& opts = {});

}  // namespace hakg::nn
