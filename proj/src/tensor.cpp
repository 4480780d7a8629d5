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

#include "fbsde/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fbsde {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) {
    throw DimensionError("tensor " + shape_str() + " given " + std::to_string(values.size()) +
                         " values");
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(1, n, std::move(v));
}

double Tensor::item() const {
  if (values.size() != 1) throw DimensionError("item() on non-scalar " + shape_str());
  return values[0];
}

std::string Tensor::shape_str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

const Tensor& Var::value() const {
  if (!valid()) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

const Tensor& Adjoints::operator[](const Var& v) const {
  return grads_.at(static_cast<std::size_t>(v.id()));
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  return push(std::move(n));
}

Var Tape::parameter(Tensor t, int index) {
  if (index < 0) throw ContractError("parameter index must be non-negative");
  Node n;
  n.value = std::move(t);
  n.param = index;
  return push(std::move(n));
}

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ContractError("use of an unbound Var");
  if (a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
  }
}

Tape::Node unary(Op op, const Var& a) {
  if (!a.valid()) throw ContractError("use of an unbound Var");
  Tape::Node n;
  n.op = op;
  n.inputs = {a.id()};
  n.value = a.value();
  return n;
}

// out += a * b for row-major a (p x q), b (q x r).
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t p = a.rows, q = a.cols, r = b.cols;
  for (std::size_t i = 0; i < p; ++i) {
    double* o = out.values.data() + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a.values[i * q + k];
      if (aik == 0.0) continue;
      const double* brow = b.values.data() + k * r;
      for (std::size_t j = 0; j < r; ++j) o[j] += aik * brow[j];
    }
  }
}

// out += g * b^T, g: p x r, b: q x r. Works on a transposed copy of b so the
// inner loop is a contiguous axpy.
void gemm_acc_bt(const Tensor& g, const Tensor& b, Tensor& out) {
  const std::size_t p = g.rows, r = g.cols, q = b.rows;
  std::vector<double> bt(r * q);
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t j = 0; j < r; ++j) bt[j * q + k] = b.values[k * r + j];
  }
  for (std::size_t i = 0; i < p; ++i) {
    const double* grow = g.values.data() + i * r;
    double* o = out.values.data() + i * q;
    for (std::size_t j = 0; j < r; ++j) {
      const double gij = grow[j];
      if (gij == 0.0) continue;
      const double* brow = bt.data() + j * q;
      for (std::size_t k = 0; k < q; ++k) o[k] += gij * brow[k];
    }
  }
}

// out += a^T * g, a: p x q, g: p x r.
void gemm_acc_at(const Tensor& a, const Tensor& g, Tensor& out) {
  const std::size_t p = a.rows, q = a.cols, r = g.cols;
  for (std::size_t i = 0; i < p; ++i) {
    const double* grow = g.values.data() + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a.values[i * q + k];
      if (aik == 0.0) continue;
      double* o = out.values.data() + k * r;
      for (std::size_t j = 0; j < r; ++j) o[j] += aik * grow[j];
    }
  }
}

}  // namespace

Var add(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tape::Node n;
  n.op = Op::kAdd;
  n.inputs = {a.id(), b.id()};
  n.value = a.value();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value.values[i] += bv[i];
  return tape.push(std::move(n));
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tape::Node n;
  n.op = Op::kSub;
  n.inputs = {a.id(), b.id()};
  n.value = a.value();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < bv.size(); ++i) n.value.values[i] -= bv[i];
  return tape.push(std::move(n));
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  // A 1x1 operand broadcasts; otherwise shapes must agree exactly.
  if (!av.same_shape(bv) && av.size() != 1 && bv.size() != 1) {
    throw DimensionError("mul: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tape::Node n;
  n.op = Op::kMul;
  n.inputs = {a.id(), b.id()};
  if (av.size() == 1 && bv.size() != 1) {
    n.value = bv;
    for (double& x : n.value.values) x *= av.values[0];
  } else if (bv.size() == 1) {
    n.value = av;
    for (double& x : n.value.values) x *= bv.values[0];
  } else {
    n.value = av;
    for (std::size_t i = 0; i < bv.size(); ++i) n.value.values[i] *= bv.values[i];
  }
  return tape.push(std::move(n));
}

Var scale(const Var& a, double s) {
  Tape::Node n = unary(Op::kScale, a);
  n.scalar = s;
  for (double& x : n.value.values) x *= s;
  return a.tape()->push(std::move(n));
}

Var neg(const Var& a) {
  Tape::Node n = unary(Op::kNeg, a);
  for (double& x : n.value.values) x = -x;
  return a.tape()->push(std::move(n));
}

Var tanh(const Var& a) {
  Tape::Node n = unary(Op::kTanh, a);
  for (double& x : n.value.values) x = std::tanh(x);
  return a.tape()->push(std::move(n));
}

Var square(const Var& a) {
  Tape::Node n = unary(Op::kSquare, a);
  for (double& x : n.value.values) x *= x;
  return a.tape()->push(std::move(n));
}

Var logistic(const Var& a) {
  Tape::Node n = unary(Op::kLogistic, a);
  for (double& x : n.value.values) x = 1.0 / (1.0 + std::exp(-x));
  return a.tape()->push(std::move(n));
}

Var sig(const Var& a) {
  Tape::Node n = unary(Op::kSig, a);
  for (double& x : n.value.values) x = sig(x);
  return a.tape()->push(std::move(n));
}

Var sum_squares(const Var& a) {
  Tape::Node n = unary(Op::kSumSquares, a);
  double acc = 0.0;
  for (double x : a.value().values) acc += x * x;
  n.value = Tensor::scalar(acc);
  return a.tape()->push(std::move(n));
}

Var sum(const Var& a) {
  Tape::Node n = unary(Op::kSum, a);
  double acc = 0.0;
  for (double x : a.value().values) acc += x;
  n.value = Tensor::scalar(acc);
  return a.tape()->push(std::move(n));
}

Var matmul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows) {
    throw DimensionError("matmul: inner dimensions disagree " + av.shape_str() + " x " +
                         bv.shape_str());
  }
  Tape::Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.id(), b.id()};
  n.value = Tensor(av.rows, bv.cols);
  gemm_acc(av, bv, n.value);
  return tape.push(std::move(n));
}

Var add_bias(const Var& a, const Var& bias) {
  Tape& tape = same_tape(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows != 1 || bv.cols != av.cols) {
    throw DimensionError("add_bias: bias " + bv.shape_str() + " does not fit " + av.shape_str());
  }
  Tape::Node n;
  n.op = Op::kAddBias;
  n.inputs = {a.id(), bias.id()};
  n.value = av;
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) n.value(r, c) += bv.values[c];
  }
  return tape.push(std::move(n));
}

Var repeat_rows(const Var& a, std::size_t rows) {
  Tape::Node n = unary(Op::kRepeatRows, a);
  const Tensor& av = a.value();
  if (av.rows != 1) throw DimensionError("repeat_rows expects a row vector, got " + av.shape_str());
  n.value = Tensor(rows, av.cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) n.value(r, c) = av.values[c];
  }
  return a.tape()->push(std::move(n));
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t count) {
  Tape::Node n = unary(Op::kSliceCols, a);
  const Tensor& av = a.value();
  if (begin + count > av.cols) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + av.shape_str());
  }
  n.offset = begin;
  n.value = Tensor(av.rows, count);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < count; ++c) n.value(r, c) = av(r, begin + c);
  }
  return a.tape()->push(std::move(n));
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows != bv.rows) {
    throw DimensionError("concat_cols: row mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tape::Node n;
  n.op = Op::kConcatCols;
  n.inputs = {a.id(), b.id()};
  n.value = Tensor(av.rows, av.cols + bv.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) n.value(r, c) = av(r, c);
    for (std::size_t c = 0; c < bv.cols; ++c) n.value(r, av.cols + c) = bv(r, c);
  }
  return tape.push(std::move(n));
}

Adjoints Tape::backward(const Var& loss) const {
  if (loss.tape() != this) throw ContractError("loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got " + loss.value().shape_str());
  }
  std::vector<Tensor> g(nodes_.size());
  auto grad_of = [&](int id) -> Tensor& {
    Tensor& t = g[static_cast<std::size_t>(id)];
    if (t.values.empty()) {
      const Tensor& v = nodes_[static_cast<std::size_t>(id)].value;
      t = Tensor(v.rows, v.cols);
    }
    return t;
  };
  grad_of(loss.id()).values[0] = 1.0;

  for (int id = loss.id(); id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (g[static_cast<std::size_t>(id)].values.empty() || n.op == Op::kLeaf) continue;
    // Inputs always precede the node, so `go` never aliases an input gradient.
    const Tensor& go = g[static_cast<std::size_t>(id)];
    const auto& out = n.value.values;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] += go.values[i];
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < go.size(); ++i) gb.values[i] += go.values[i];
        break;
      }
      case Op::kSub: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] += go.values[i];
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < go.size(); ++i) gb.values[i] -= go.values[i];
        break;
      }
      case Op::kMul: {
        const Tensor& av = value(n.inputs[0]);
        const Tensor& bv = value(n.inputs[1]);
        Tensor& ga = grad_of(n.inputs[0]);
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < go.size(); ++i) {
          const double a = av.size() == 1 ? av.values[0] : av.values[i];
          const double b = bv.size() == 1 ? bv.values[0] : bv.values[i];
          ga.values[av.size() == 1 ? 0 : i] += go.values[i] * b;
          gb.values[bv.size() == 1 ? 0 : i] += go.values[i] * a;
        }
        break;
      }
      case Op::kScale: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] += n.scalar * go.values[i];
        break;
      }
      case Op::kNeg: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] -= go.values[i];
        break;
      }
      case Op::kTanh: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.values[i] += go.values[i] * (1.0 - out[i] * out[i]);
        }
        break;
      }
      case Op::kSquare: {
        const Tensor& av = value(n.inputs[0]);
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] += 2.0 * av.values[i] * go.values[i];
        break;
      }
      case Op::kLogistic: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.values[i] += go.values[i] * out[i] * (1.0 - out[i]);
        }
        break;
      }
      case Op::kSig: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) {
          ga.values[i] += go.values[i] * 0.5 * (1.0 - out[i] * out[i]);
        }
        break;
      }
      case Op::kSumSquares: {
        const Tensor& av = value(n.inputs[0]);
        Tensor& ga = grad_of(n.inputs[0]);
        const double s = go.values[0];
        for (std::size_t i = 0; i < av.size(); ++i) ga.values[i] += 2.0 * av.values[i] * s;
        break;
      }
      case Op::kSum: {
        Tensor& ga = grad_of(n.inputs[0]);
        const double s = go.values[0];
        for (double& x : ga.values) x += s;
        break;
      }
      case Op::kMatMul: {
        const Tensor& av = value(n.inputs[0]);
        const Tensor& bv = value(n.inputs[1]);
        gemm_acc_bt(go, bv, grad_of(n.inputs[0]));
        gemm_acc_at(av, go, grad_of(n.inputs[1]));
        break;
      }
      case Op::kAddBias: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t i = 0; i < go.size(); ++i) ga.values[i] += go.values[i];
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t r = 0; r < go.rows; ++r) {
          for (std::size_t c = 0; c < go.cols; ++c) gb.values[c] += go(r, c);
        }
        break;
      }
      case Op::kRepeatRows: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t r = 0; r < go.rows; ++r) {
          for (std::size_t c = 0; c < go.cols; ++c) ga.values[c] += go(r, c);
        }
        break;
      }
      case Op::kSliceCols: {
        Tensor& ga = grad_of(n.inputs[0]);
        for (std::size_t r = 0; r < go.rows; ++r) {
          for (std::size_t c = 0; c < go.cols; ++c) ga(r, n.offset + c) += go(r, c);
        }
        break;
      }
      case Op::kConcatCols: {
        Tensor& ga = grad_of(n.inputs[0]);
        const std::size_t split = ga.cols;
        for (std::size_t r = 0; r < go.rows; ++r) {
          for (std::size_t c = 0; c < split; ++c) ga(r, c) += go(r, c);
        }
        Tensor& gb = grad_of(n.inputs[1]);
        for (std::size_t r = 0; r < go.rows; ++r) {
          for (std::size_t c = 0; c < gb.cols; ++c) gb(r, c) += go(r, split + c);
        }
        break;
      }
      case Op::kRowMap: {
        const std::size_t in_cols = n.jac_in;
        const std::size_t out_cols = go.cols;
        std::vector<Tensor*> targets;
        for (int in : n.inputs) targets.push_back(&grad_of(in));
        std::vector<double> acc(in_cols);
        for (std::size_t r = 0; r < go.rows; ++r) {
          std::fill(acc.begin(), acc.end(), 0.0);
          const double* jac = n.jac.data() + r * out_cols * in_cols;
          for (std::size_t o = 0; o < out_cols; ++o) {
            const double w = go(r, o);
            if (w == 0.0) continue;
            for (std::size_t i = 0; i < in_cols; ++i) acc[i] += w * jac[o * in_cols + i];
          }
          std::size_t c = 0;
          for (Tensor* t : targets) {
            for (std::size_t k = 0; k < t->cols; ++k, ++c) (*t)(r, k) += acc[c];
          }
        }
        break;
      }
    }
  }
  // Fill untouched nodes with zeros so lookups always succeed.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].values.empty()) g[i] = Tensor(nodes_[i].value.rows, nodes_[i].value.cols);
  }
  return Adjoints(std::move(g));
}

std::vector<Tensor> Tape::gradients(const Var& loss, std::size_t param_slots) const {
  Adjoints adj = backward(loss);
  std::vector<Tensor> out(param_slots);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.param < 0) continue;
    if (static_cast<std::size_t>(n.param) >= param_slots) {
      throw ContractError("parameter index " + std::to_string(n.param) + " exceeds slot count");
    }
    Tensor& slot = out[static_cast<std::size_t>(n.param)];
    const Tensor& gi = adj.grads_[i];
    if (slot.values.empty()) {
      slot = gi;
    } else {
      for (std::size_t k = 0; k < gi.size(); ++k) slot.values[k] += gi.values[k];
    }
  }
  return out;
}

}  // namespace fbsde
