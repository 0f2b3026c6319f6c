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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "apprentice/diffcore/parameter.hpp"

namespace apprentice::diffcore {

/// Raised when a forward pass hits log of a non-positive value or a division
/// by zero. The message names the offending node.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Op : std::uint8_t {
  kInput,
  kParameter,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kExp,
  kLog,
  kMax,
  kSigmoid,
  kTanh,
  kRelu,
};

const char* op_name(Op op);

/// Handle to a node on a Tape.
struct Var {
  std::uint32_t index = 0;
};

/// Append-only scalar computation graph with reverse-mode differentiation.
///
/// A tape is recorded once (inputs are placeholders) and can then be
/// re-evaluated with forward() for any input vector. Operands always precede
/// the node that reads them, so forward is a single in-order sweep and
/// backward a single reverse sweep.
class Tape {
 public:
  Var input();
  Var parameter(double initial, bool trainable = true);
  Var constant(double value);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var max(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  void mark_output(Var v);

  /// Evaluates every node; returns the values of the marked outputs.
  std::vector<double> forward(std::span<const double> inputs);

  /// Propagates `upstream` (one entry per marked output) back through the
  /// tape. Trainable parameter gradients are accumulated into parameters();
  /// input gradients are available from input_gradients().
  void backward(std::span<const double> upstream);

  double value(Var v) const { return nodes_.at(v.index).value; }
  double adjoint(Var v) const { return adjoints_.at(v.index); }

  std::vector<double> input_gradients() const;
  ParameterBlock& parameters() { return params_; }
  bool parameter_trainable(std::size_t slot) const {
    return param_trainable_.at(slot);
  }
  const ParameterBlock& parameters() const { return params_; }

  std::size_t size() const { return nodes_.size(); }
  std::size_t input_count() const { return inputs_.size(); }
  std::size_t output_count() const { return outputs_.size(); }
  /// Number of nodes visited by the most recent backward().
  std::size_t last_backward_visits() const { return last_visits_; }

 private:
  struct Node {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t slot = 0;
    double value = 0.0;
    double da = 0.0;
    double db = 0.0;
  };

  Var push(Op op, std::uint32_t a, std::uint32_t b);
  void check_operand(Var v) const;
  void evaluate(std::size_t i);
  [[noreturn]] void domain_failure(std::size_t i, const std::string& what) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> inputs_;
  std::vector<std::uint32_t> outputs_;
  std::vector<double> input_values_;
  std::vector<double> adjoints_;
  ParameterBlock params_;
  std::vector<bool> param_trainable_;
  bool forward_done_ = false;
  std::size_t last_visits_ = 0;
};

/// Numerically stable softmax recorded onto the tape.
std::vector<Var> softmax(Tape& tape, std::span<const Var> logits);

}  // namespace apprentice::diffcore
