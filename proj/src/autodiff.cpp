#include "hakg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hakg/error.hpp"

namespace hakg::nn {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + dims(a) + " and " + dims(b));
}

Tape& same_tape(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw ContractError("operands recorded on different tapes");
  return *a.tape;
}

}  // namespace

const Matrix& Var::value() const { return tape->value(id); }

const Matrix& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.ref ? *n.ref : n.value;
}

const Matrix& Tape::value(Var v) const { return value(v.id); }

Matrix& Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, Backward backward, const char* op) {
  check_finite(value, op);
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (Var in : inputs) n.needs_grad = n.needs_grad || nodes_[in.id].needs_grad;
    if (n.needs_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix value) {
  check_finite(value, "constant");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  Node n;
  n.ref = &p.value.matrix();
  if (record_) {
    n.needs_grad = true;
    n.backward = [&p](Tape& t, std::uint32_t self) { p.grad += t.grad(self); };
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::lookup(Parameter& table, std::span<const std::uint32_t> rows) {
  const Matrix& src = table.value.matrix();
  Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= src.rows()) {
      throw std::out_of_range("lookup row " + std::to_string(rows[k]) + " out of range for '" + table.name + "'");
    }
    out.row(static_cast<Eigen::Index>(k)) = src.row(rows[k]);
  }
  Node n;
  n.value = std::move(out);
  if (record_) {
    n.needs_grad = true;
    std::vector<std::uint32_t> idx(rows.begin(), rows.end());
    n.backward = [&table, idx = std::move(idx)](Tape& t, std::uint32_t self) {
      const Matrix& g = t.grad(self);
      for (std::size_t k = 0; k < idx.size(); ++k) table.grad.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
    };
  }
  nodes_.push_back(std::move(n));
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  const Matrix& lv = value(loss.id);
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward: loss must be scalar, got " + dims(lv));
  if (!record_) throw ContractError("backward: tape was not recording");
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss.id)(0, 0) += 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.needs_grad && n.backward && n.grad.size() != 0) n.backward(*this, id);
  }
}

// ---------------------------------------------------------------------------
// Ops

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
  Matrix out = av * bv;
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.needs_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  }, "matmul");
}

Var matmul_bt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) shape_mismatch("matmul_bt", av, bv);
  Matrix out = av * bv.transpose();
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b);
    if (t.needs_grad(b)) t.grad(b).noalias() += g.transpose() * t.value(a);
  }, "matmul_bt");
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  return a.tape->push(std::move(out), {a}, [a = a.id](Tape& t, std::uint32_t self) {
    t.grad(a) += t.grad(self).transpose();
  }, "transpose");
}

Var concat_cols(std::initializer_list<Var> parts) {
  if (parts.size() == 0) throw ContractError("concat_cols: no operands");
  Tape& t = *parts.begin()->tape;
  const Eigen::Index rows = parts.begin()->rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (p.tape != &t) throw ContractError("operands recorded on different tapes");
    if (p.rows() != rows) shape_mismatch("concat_cols", parts.begin()->value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<std::uint32_t, Eigen::Index>> layout;  // (id, first column)
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    layout.emplace_back(p.id, c);
    c += p.cols();
  }
  return t.push(std::move(out), parts, [layout = std::move(layout)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    for (auto [id, start] : layout) {
      if (t.needs_grad(id)) t.grad(id) += g.middleCols(start, t.value(id).cols());
    }
  }, "concat_cols");
}

Var sum(Var a, Axis axis) {
  const Matrix& av = a.value();
  Matrix out = axis == Axis::kRows ? Matrix(av.colwise().sum()) : Matrix(av.rowwise().sum());
  return a.tape->push(std::move(out), {a}, [a = a.id, axis](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    if (axis == Axis::kRows) {
      ga.rowwise() += g.row(0);
    } else {
      ga.colwise() += g.col(0);
    }
  }, "sum");
}

Var mean(Var a, Axis axis) {
  const Eigen::Index n = axis == Axis::kRows ? a.rows() : a.cols();
  if (n == 0) throw ShapeError("mean over an empty axis");
  return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Var max(Var a, Axis axis) {
  const Matrix& av = a.value();
  if (av.size() == 0) throw ShapeError("max over an empty tensor");
  const bool over_rows = axis == Axis::kRows;
  const Eigen::Index outer = over_rows ? av.cols() : av.rows();
  const Eigen::Index inner = over_rows ? av.rows() : av.cols();
  Matrix out = over_rows ? Matrix(1, outer) : Matrix(outer, 1);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(outer));
  for (Eigen::Index o = 0; o < outer; ++o) {
    Eigen::Index best = 0;
    double best_v = over_rows ? av(0, o) : av(o, 0);
    for (Eigen::Index k = 1; k < inner; ++k) {
      double v = over_rows ? av(k, o) : av(o, k);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    arg[static_cast<std::size_t>(o)] = best;
    if (over_rows) {
      out(0, o) = best_v;
    } else {
      out(o, 0) = best_v;
    }
  }
  return a.tape->push(std::move(out), {a}, [a = a.id, over_rows, arg = std::move(arg)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t o = 0; o < arg.size(); ++o) {
      auto oi = static_cast<Eigen::Index>(o);
      if (over_rows) {
        ga(arg[o], oi) += g(0, oi);
      } else {
        ga(oi, arg[o]) += g(oi, 0);
      }
    }
  }, "max");
}

Var scale(Var a, double s) {
  Matrix out = a.value() * s;
  return a.tape->push(std::move(out), {a}, [a = a.id, s](Tape& t, std::uint32_t self) {
    t.grad(a) += s * t.grad(self);
  }, "scale");
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool same = av.rows() == bv.rows() && av.cols() == bv.cols();
  const bool broadcast = !same && bv.rows() == 1 && bv.cols() == av.cols();
  if (!same && !broadcast) shape_mismatch("add", av, bv);
  Matrix out = av;
  if (same) {
    out += bv;
  } else {
    out.rowwise() += bv.row(0);
  }
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id, broadcast](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) {
      if (broadcast) {
        t.grad(b) += g.colwise().sum();
      } else {
        t.grad(b) += g;
      }
    }
  }, "add");
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_mismatch("mul", av, bv);
  Matrix out = av.cwiseProduct(bv);
  return t.push(std::move(out), {a, b}, [a = a.id, b = b.id](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a) += g.cwiseProduct(t.value(b));
    if (t.needs_grad(b)) t.grad(b) += g.cwiseProduct(t.value(a));
  }, "mul");
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape->push(std::move(out), {a}, [a = a.id](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    t.grad(a).array() += (t.value(a).array() > 0.0).select(g.array(), 0.0);
  }, "relu");
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  return a.tape->push(std::move(out), {a}, [a = a.id](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    t.grad(a).array() += t.grad(self).array() * (1.0 - y.array().square());
  }, "tanh");
}

Var sigmoid(Var a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->push(std::move(out), {a}, [a = a.id](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    t.grad(a).array() += t.grad(self).array() * y.array() * (1.0 - y.array());
  }, "sigmoid");
}

Var softmax_rows(Var a) {
  const Matrix& av = a.value();
  if (av.cols() == 0) throw ShapeError("softmax over an empty row");
  Matrix out(av.rows(), av.cols());
  for (Eigen::Index r = 0; r < av.rows(); ++r) {
    const double m = av.row(r).maxCoeff();
    out.row(r) = (av.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return a.tape->push(std::move(out), {a}, [a = a.id](Tape& t, std::uint32_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  }, "softmax_rows");
}

Var gather_rows(Var a, std::span<const std::uint32_t> rows) {
  const Matrix& av = a.value();
  Matrix out(static_cast<Eigen::Index>(rows.size()), av.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= av.rows()) throw std::out_of_range("gather_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(k)) = av.row(rows[k]);
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  return a.tape->push(std::move(out), {a}, [a = a.id, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad(a);
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
  }, "gather_rows");
}

Var dropout(Var a, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("dropout rate must lie in [0, 1)");
  if (!training || rate == 0.0) return a;
  const Matrix& av = a.value();
  Matrix mask(av.rows(), av.cols());
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution drop(rate);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = drop(rng) ? 0.0 : keep_scale;
  return mul(a, a.tape->constant(std::move(mask)));
}

Var binary_nll(Var score, bool positive) {
  const Matrix& sv = score.value();
  if (sv.rows() != 1 || sv.cols() != 1) throw ShapeError("binary_nll expects a 1x1 score, got " + dims(sv));
  const double s = sv(0, 0);
  const double p = std::clamp(s, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const bool clamped = p != s;
  Matrix out(1, 1);
  out(0, 0) = positive ? -std::log(p) : -std::log1p(-p);
  return score.tape->push(std::move(out), {score}, [a = score.id, p, positive, clamped](Tape& t, std::uint32_t self) {
    if (clamped) return;
    const double g = t.grad(self)(0, 0);
    t.grad(a)(0, 0) += positive ? -g / p : g / (1.0 - p);
  }, "binary_nll");
}

}  // namespace hakg::nn
