#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>

#include "hakg/params.hpp"
#include "hakg/rng.hpp"
#include "hakg/tensor.hpp"

namespace hakg::nn {

class Tape;

// Handle to a value recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode tape. Every op appends a node holding its value and a closure
// that pushes the node's gradient into its inputs. Parameter leaves write their
// gradient straight into Parameter::grad when backward() reaches them.
//
// A tape built with record = false keeps values only (inference).
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Parameter& p);
  // Rows of an embedding table; the backward pass scatters into table.grad.
  Var lookup(Parameter& table, std::span<const std::uint32_t> rows);

  // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  void backward(Var loss);

  const Matrix& value(Var v) const;
  const Matrix& value(std::uint32_t id) const;
  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  // Op-author interface.
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward, const char* op);
  bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a node, zero-initialised on first use.
  Matrix& grad(std::uint32_t id);

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;  // parameter leaves alias the parameter value
    Matrix grad;
    bool needs_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
  bool record_;
};

enum class Axis { kRows = 0, kCols = 1 };  // reduce over rows -> 1 x cols

Var matmul(Var a, Var b);     // a * b
Var matmul_bt(Var a, Var b);  // a * b^T
Var transpose(Var a);
Var concat_cols(std::initializer_list<Var> parts);
Var sum(Var a, Axis axis);
Var mean(Var a, Axis axis);
Var max(Var a, Axis axis);  // gradient goes to the first maximal entry
Var scale(Var a, double s);
Var add(Var a, Var b);  // b may be a 1 x cols row broadcast over a's rows
Var mul(Var a, Var b);  // elementwise, same shape
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);  // max-subtracted per row
Var gather_rows(Var a, std::span<const std::uint32_t> rows);

// Inverted dropout: zeroes entries with probability `rate` and scales the
// survivors by 1 / (1 - rate) in training mode; identity otherwise.
Var dropout(Var a, double rate, Rng& rng, bool training);

inline constexpr double kProbabilityClamp = 1e-12;

// -ln(p) for a positive target, -ln(1 - p) for a negative one, with p clamped
// to [1e-12, 1 - 1e-12]. `score` must be 1 x 1.
Var binary_nll(Var score, bool positive);

}  // namespace hakg::nn
