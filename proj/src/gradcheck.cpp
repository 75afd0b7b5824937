#include "hakg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "hakg/error.hpp"

namespace hakg::nn {

GradCheckResult finite_diff_check(const std::function<double()>& f, ParamStore& params, const GradCheckOptions& opts) {
  GradCheckResult result;
  Rng rng(opts.seed);
  auto eval = [&] {
    double y = f();
    if (!std::isfinite(y)) throw NumericError("finite_diff_check: objective is not finite");
    return y;
  };
  for (auto& p : params.parameters()) {
    const std::size_t n = p.value.size();
    std::set<std::size_t> coords;
    if (n <= opts.exhaustive_limit) {
      for (std::size_t k = 0; k < n; ++k) coords.insert(k);
    } else {
      while (coords.size() < opts.min_coords) coords.insert(uniform_index(rng, n));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      const double* g = p.grad.data();
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(opts.min_coords), order.end(),
                        [g](std::size_t a, std::size_t b) { return std::abs(g[a]) > std::abs(g[b]); });
      coords.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(opts.min_coords));
    }
    double* x = p.value.matrix().data();
    for (std::size_t k : coords) {
      const double saved = x[k];
      x[k] = saved + opts.eps;
      const double up = eval();
      x[k] = saved - opts.eps;
      const double down = eval();
      x[k] = saved;
      const double numeric = (up - down) / (2.0 * opts.eps);
      const double analytic = p.grad.data()[k];
      const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(numeric));
      ++result.checked;
      if (rel > result.max_rel_error || result.worst_parameter.empty()) {
        result.max_rel_error = rel;
        result.worst_parameter = p.name;
        result.worst_index = k;
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace hakg::nn
