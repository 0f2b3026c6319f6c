// Copyright 2026 The Apprentice Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apprentice/diffcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "apprentice/diffcore/loss.hpp"

namespace apprentice::diffcore {

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParameter: return "parameter";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kMax: return "max";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
  }
  return "?";
}

Var Tape::push(Op op, std::uint32_t a, std::uint32_t b) {
  if (nodes_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw std::length_error("tape: too many nodes");
  }
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  nodes_.push_back(n);
  forward_done_ = false;
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::check_operand(Var v) const {
  if (v.index >= nodes_.size()) {
    std::ostringstream os;
    os << "tape: operand " << v.index << " does not exist (size "
       << nodes_.size() << ")";
    throw std::out_of_range(os.str());
  }
}

Var Tape::input() {
  Var v = push(Op::kInput, 0, 0);
  nodes_.back().slot = static_cast<std::uint32_t>(inputs_.size());
  inputs_.push_back(v.index);
  return v;
}

Var Tape::parameter(double initial, bool trainable) {
  Var v = push(Op::kParameter, 0, 0);
  nodes_.back().slot = static_cast<std::uint32_t>(params_.size());
  params_.resize(params_.size() + 1);
  params_.value.back() = initial;
  param_trainable_.push_back(trainable);
  return v;
}

Var Tape::constant(double value) {
  Var v = push(Op::kConstant, 0, 0);
  nodes_.back().value = value;
  return v;
}

#define APPRENTICE_BINARY(name, op)        \
  Var Tape::name(Var a, Var b) {          \
    check_operand(a);                     \
    check_operand(b);                     \
    return push(op, a.index, b.index);    \
  }
#define APPRENTICE_UNARY(name, op)         \
  Var Tape::name(Var a) {                 \
    check_operand(a);                     \
    return push(op, a.index, a.index);    \
  }

APPRENTICE_BINARY(add, Op::kAdd)
APPRENTICE_BINARY(sub, Op::kSub)
APPRENTICE_BINARY(mul, Op::kMul)
APPRENTICE_BINARY(div, Op::kDiv)
APPRENTICE_BINARY(max, Op::kMax)
APPRENTICE_UNARY(neg, Op::kNeg)
APPRENTICE_UNARY(exp, Op::kExp)
APPRENTICE_UNARY(log, Op::kLog)
APPRENTICE_UNARY(sigmoid, Op::kSigmoid)
APPRENTICE_UNARY(tanh, Op::kTanh)
APPRENTICE_UNARY(relu, Op::kRelu)

#undef APPRENTICE_BINARY
#undef APPRENTICE_UNARY

void Tape::mark_output(Var v) {
  check_operand(v);
  outputs_.push_back(v.index);
}

void Tape::domain_failure(std::size_t i, const std::string& what) const {
  std::ostringstream os;
  os << "tape: node " << i << " (" << op_name(nodes_[i].op) << "): " << what;
  throw DomainError(os.str());
}

void Tape::evaluate(std::size_t i) {
  Node& n = nodes_[i];
  const double x = nodes_[n.a].value;
  const double y = nodes_[n.b].value;
  switch (n.op) {
    case Op::kInput:
      n.value = input_values_[n.slot];
      break;
    case Op::kParameter:
      n.value = params_.value[n.slot];
      break;
    case Op::kConstant:
      break;
    case Op::kAdd:
      n.value = x + y;
      n.da = 1.0;
      n.db = 1.0;
      break;
    case Op::kSub:
      n.value = x - y;
      n.da = 1.0;
      n.db = -1.0;
      break;
    case Op::kMul:
      n.value = x * y;
      n.da = y;
      n.db = x;
      break;
    case Op::kDiv:
      if (y == 0.0) domain_failure(i, "division by zero");
      n.value = x / y;
      n.da = 1.0 / y;
      n.db = -x / (y * y);
      break;
    case Op::kNeg:
      n.value = -x;
      n.da = -1.0;
      break;
    case Op::kExp:
      n.value = std::exp(x);
      n.da = n.value;
      break;
    case Op::kLog: {
      if (!(x > 0.0)) {
        std::ostringstream os;
        os << "log of non-positive value " << x;
        domain_failure(i, os.str());
      }
      n.value = std::log(x);
      n.da = 1.0 / x;
      break;
    }
    case Op::kMax:
      // Ties route the gradient to the first operand.
      n.value = x >= y ? x : y;
      n.da = x >= y ? 1.0 : 0.0;
      n.db = x >= y ? 0.0 : 1.0;
      break;
    case Op::kSigmoid:
      n.value = diffcore::sigmoid(x);
      n.da = n.value * (1.0 - n.value);
      break;
    case Op::kTanh:
      n.value = std::tanh(x);
      n.da = 1.0 - n.value * n.value;
      break;
    case Op::kRelu:
      n.value = x > 0.0 ? x : 0.0;
      n.da = x > 0.0 ? 1.0 : 0.0;
      break;
  }
}

std::vector<double> Tape::forward(std::span<const double> inputs) {
  if (inputs.size() != inputs_.size()) {
    std::ostringstream os;
    os << "tape: expected " << inputs_.size() << " inputs, got "
       << inputs.size();
    throw std::invalid_argument(os.str());
  }
  input_values_.assign(inputs.begin(), inputs.end());
  forward_done_ = false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) evaluate(i);
  forward_done_ = true;
  std::vector<double> out;
  out.reserve(outputs_.size());
  for (auto o : outputs_) out.push_back(nodes_[o].value);
  return out;
}

void Tape::backward(std::span<const double> upstream) {
  if (!forward_done_) {
    throw std::logic_error("tape: backward called before forward");
  }
  if (upstream.size() != outputs_.size()) {
    std::ostringstream os;
    os << "tape: expected " << outputs_.size() << " upstream values, got "
       << upstream.size();
    throw std::invalid_argument(os.str());
  }
  adjoints_.assign(nodes_.size(), 0.0);
  for (std::size_t k = 0; k < outputs_.size(); ++k) {
    adjoints_[outputs_[k]] += upstream[k];
  }
  last_visits_ = 0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    ++last_visits_;
    const Node& n = nodes_[i];
    const double g = adjoints_[i];
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kParameter:
        if (param_trainable_[n.slot]) params_.gradient[n.slot] += g;
        break;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv:
      case Op::kMax:
        adjoints_[n.a] += g * n.da;
        adjoints_[n.b] += g * n.db;
        break;
      default:
        adjoints_[n.a] += g * n.da;
        break;
    }
  }
}

std::vector<double> Tape::input_gradients() const {
  std::vector<double> out(inputs_.size(), 0.0);
  if (adjoints_.size() != nodes_.size()) return out;
  for (std::size_t k = 0; k < inputs_.size(); ++k) {
    out[k] = adjoints_[inputs_[k]];
  }
  return out;
}

std::vector<Var> softmax(Tape& tape, std::span<const Var> logits) {
  if (logits.empty()) return {};
  Var m = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) m = tape.max(m, logits[i]);
  std::vector<Var> e;
  e.reserve(logits.size());
  for (Var z : logits) e.push_back(tape.exp(tape.sub(z, m)));
  Var total = e[0];
  for (std::size_t i = 1; i < e.size(); ++i) total = tape.add(total, e[i]);
  std::vector<Var> out;
  out.reserve(e.size());
  for (Var v : e) out.push_back(tape.div(v, total));
  return out;
}

}  // namespace apprentice::diffcore
