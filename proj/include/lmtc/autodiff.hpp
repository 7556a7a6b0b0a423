// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmtc/rng.hpp"
#include "lmtc/types.hpp"

namespace lmtc::autodiff {

// A named trainable tensor. Gradients accumulate across backward passes
// until zero_grads() is called.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class ParamStore {
 public:
  // init_scale > 0 draws entries from U(-init_scale, init_scale); 0 zeros.
  Param& create(const std::string& name, Index rows, Index cols,
                double init_scale, Rng& rng);
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  size_t size() const { return params_.size(); }
  Param& at(size_t i) { return *params_[i]; }
  const Param& at(size_t i) const { return *params_[i]; }

  void zero_grads();
  double grad_norm() const;
  void clip_grad_norm(double max_norm);

  std::vector<Matrix> snapshot_values() const;
  void restore_values(const std::vector<Matrix>& values);

 private:
  std::vector<std::unique_ptr<Param>> params_;
};

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, int i) : tape_(t), index_(i) {}
  Tape* tape_ = nullptr;
  int index_ = -1;
};

// Reverse-mode tape over dense matrices. Build a fresh tape per forward pass;
// backward() pushes gradients into the Params referenced via param().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Param& p);  // cached: the same Param maps to one node per tape

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var affine(Var a, double scale, double shift);  // scale*a + shift
  Var add_rowvec(Var a, Var row);                 // a: [n,d], row: [1,d]

  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);

  Var concat_cols(Var a, Var b);
  Var concat_rows(const std::vector<Var>& parts);
  Var scale_rows(Var a, const Vector& coeffs);     // row i scaled by coeffs[i]
  Var scale_cols(Var a, const RowVector& coeffs);  // col j scaled by coeffs[j]

  // Softmax per row over positions with mask[j] != 0; masked columns get
  // exactly zero. Throws when every position is masked.
  Var masked_softmax_rows(Var scores, const std::vector<char>& mask);

  Var rowwise_dot(Var a, Var b);  // [n,d] x [n,d] -> [n,1]
  Var sum_all(Var a);             // [1,1]

  // Seeds d(loss)=1 and accumulates into every reachable Param's grad.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }
  const Matrix& value(int i) const { return nodes_[static_cast<size_t>(i)].value; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // lazily sized
    bool requires_grad = false;
    Param* external = nullptr;
    std::function<void(Tape&)> backprop;
  };

  int push(Matrix value, bool requires_grad, std::function<void(Tape&)> fn);
  Matrix& grad_ref(int i);
  bool has_grad(int i) const;
  bool needs_grad(Var v) const {
    return nodes_[static_cast<size_t>(v.index_)].requires_grad;
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, int> param_nodes_;

  friend class Var;
};

}  // namespace lmtc::autodiff
