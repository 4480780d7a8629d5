// Copyright 2026 The fbsde-control Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense row-major matrices and a define-by-run reverse-mode tape.
//
// Every value handled by the solver is a 2-D tensor (scalars are 1x1, a batch
// of M vectors is M x k). Operations append nodes to a Tape; a single backward
// sweep in reverse insertion order yields exact gradients of a scalar loss with
// respect to every registered parameter, through the whole unrolled rollout.

#ifndef FBSDE_TENSOR_HPP_
#define FBSDE_TENSOR_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbsde/dual.hpp"

namespace fbsde {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> v);

  static Tensor scalar(double x) { return Tensor(1, 1, x); }
  static Tensor identity(std::size_t n);
  // Builds a 1 x k row vector.
  static Tensor row(std::vector<double> v);

  std::array<std::size_t, 2> shape() const { return {rows, cols}; }
  std::size_t size() const { return values.size(); }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double item() const;
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;
};

enum class Op {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kScale,
  kNeg,
  kTanh,
  kSquare,
  kLogistic,
  kSig,
  kSumSquares,
  kSum,
  kMatMul,
  kAddBias,
  kRepeatRows,
  kSliceCols,
  kConcatCols,
  kRowMap,
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Adjoints of every node after one backward sweep.
class Adjoints {
 public:
  explicit Adjoints(std::vector<Tensor> grads) : grads_(std::move(grads)) {}
  // Zero tensor of the right shape if the node did not influence the loss.
  const Tensor& operator[](const Var& v) const;

 private:
  std::vector<Tensor> grads_;
  friend class Tape;
};

class Tape {
 public:
  struct Node {
    Op op = Op::kLeaf;
    std::vector<int> inputs;
    Tensor value;
    double scalar = 0.0;       // kScale factor
    std::size_t offset = 0;    // kSliceCols start column
    std::vector<double> jac;   // kRowMap: rows x out x in
    std::size_t jac_in = 0;    // kRowMap: total input columns
    int param = -1;            // trainable parameter index for leaves
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  // Registers a trainable leaf; `index` is its slot in the gradient map.
  Var parameter(Tensor t, int index);

  const Tensor& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  Adjoints backward(const Var& loss) const;
  // Gradient per parameter index in [0, param_slots); unused slots get zeros
  // of their registered shape (or an empty tensor if never registered).
  std::vector<Tensor> gradients(const Var& loss, std::size_t param_slots) const;

  // Applies `fn` independently to every row of the column-concatenated inputs.
  // `fn(row, in, out)` receives Dual numbers seeded on the input columns and
  // must fill `out`; the per-row Jacobian is stored for the backward sweep.
  template <class F>
  Var row_map(std::span<const Var> inputs, std::size_t out_cols, F&& fn);

  Var push(Node node);

 private:
  template <std::size_t N, class F>
  void fill_row_map(Node& node, std::size_t rows, F& fn) const;

  std::vector<Node> nodes_;
};

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var neg(const Var& a);
Var tanh(const Var& a);
Var square(const Var& a);
// Logistic function 1/(1+e^-x), used by recurrent gates.
Var logistic(const Var& a);
// Symmetric sigmoid 2/(1+e^-x) - 1 with range (-1, 1).
Var sig(const Var& a);
Var sum_squares(const Var& a);
Var sum(const Var& a);
Var matmul(const Var& a, const Var& b);
// a: M x k plus bias: 1 x k added to every row.
Var add_bias(const Var& a, const Var& bias);
// 1 x k row repeated into rows x k.
Var repeat_rows(const Var& a, std::size_t rows);
Var slice_cols(const Var& a, std::size_t begin, std::size_t count);
Var concat_cols(const Var& a, const Var& b);

inline double sig(double v) { return 2.0 / (1.0 + std::exp(-v)) - 1.0; }
inline double sig_inverse(double mu) { return std::log((1.0 + mu) / (1.0 - mu)); }
template <std::size_t N>
Dual<N> sig(const Dual<N>& x) {
  const double s = sig(x.v);
  return detail::chain(x, s, 0.5 * (1.0 - s * s));
}

// ---------------------------------------------------------------------------

template <std::size_t N, class F>
void Tape::fill_row_map(Node& node, std::size_t rows, F& fn) const {
  const std::size_t in_cols = node.jac_in;
  const std::size_t out_cols = node.value.cols;
  std::vector<Dual<N>> in(in_cols);
  std::vector<Dual<N>> out(out_cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t c = 0;
    for (int id : node.inputs) {
      const Tensor& t = value(id);
      for (std::size_t k = 0; k < t.cols; ++k, ++c) in[c] = Dual<N>::variable(t(r, k), c);
    }
    for (auto& o : out) o = Dual<N>();
    fn(r, std::span<const Dual<N>>(in), std::span<Dual<N>>(out));
    double* jac = node.jac.data() + r * out_cols * in_cols;
    for (std::size_t o = 0; o < out_cols; ++o) {
      node.value(r, o) = out[o].v;
      for (std::size_t i = 0; i < in_cols; ++i) jac[o * in_cols + i] = out[o].d[i];
    }
  }
}

template <class F>
Var Tape::row_map(std::span<const Var> inputs, std::size_t out_cols, F&& fn) {
  if (inputs.empty()) throw ContractError("row_map needs at least one input");
  Node node;
  node.op = Op::kRowMap;
  const std::size_t rows = inputs.front().rows();
  std::size_t in_cols = 0;
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ContractError("row_map input belongs to another tape");
    if (v.rows() != rows) {
      throw DimensionError("row_map inputs disagree on row count: " + std::to_string(rows) +
                           " vs " + std::to_string(v.rows()));
    }
    node.inputs.push_back(v.id());
    in_cols += v.cols();
  }
  node.jac_in = in_cols;
  node.value = Tensor(rows, out_cols);
  node.jac.assign(rows * out_cols * in_cols, 0.0);
  if (in_cols <= 4) {
    fill_row_map<4>(node, rows, fn);
  } else if (in_cols <= 8) {
    fill_row_map<8>(node, rows, fn);
  } else if (in_cols <= 16) {
    fill_row_map<16>(node, rows, fn);
  } else if (in_cols <= 32) {
    fill_row_map<32>(node, rows, fn);
  } else {
    throw DimensionError("row_map supports at most 32 input columns, got " +
                         std::to_string(in_cols));
  }
  return push(std::move(node));
}

}  // namespace fbsde

#endif  // FBSDE_TENSOR_HPP_
