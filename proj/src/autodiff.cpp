// SPDX-License-Identifier: Apache-2.0
#include "lmtc/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lmtc/error.hpp"

namespace lmtc::autodiff {

// --- ParamStore -----------------------------------------------------------

Param& ParamStore::create(const std::string& name, Index rows, Index cols,
                          double init_scale, Rng& rng) {
  if (find(name)) throw Error("duplicate parameter '" + name + "'");
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = init_scale > 0 ? rng.uniform_matrix(rows, cols, -init_scale, init_scale)
                            : Matrix::Zero(rows, cols);
  p->grad = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p->zero_grad();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& p : params_) p->grad *= scale;
  }
}

std::vector<Matrix> ParamStore::snapshot_values() const {
  std::vector<Matrix> values;
  values.reserve(params_.size());
  for (const auto& p : params_) values.push_back(p->value);
  return values;
}

void ParamStore::restore_values(const std::vector<Matrix>& values) {
  if (values.size() != params_.size())
    throw Error("parameter snapshot size mismatch");
  for (size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
}

// --- Tape -------------------------------------------------------------------

const Matrix& Var::value() const {
  return tape_->value(index_);
}

int Tape::push(Matrix value, bool requires_grad, std::function<void(Tape&)> fn) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backprop = std::move(fn);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

Matrix& Tape::grad_ref(int i) {
  Node& n = nodes_[static_cast<size_t>(i)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

bool Tape::has_grad(int i) const {
  return nodes_[static_cast<size_t>(i)].grad.size() != 0;
}

Var Tape::constant(Matrix value) {
  return Var(this, push(std::move(value), false, nullptr));
}

Var Tape::param(Param& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.requires_grad = true;
  node.external = &p;
  nodes_.push_back(std::move(node));
  const int idx = static_cast<int>(nodes_.size()) - 1;
  param_nodes_[&p] = idx;
  return Var(this, idx);
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  const int ia = a.index_, ib = b.index_;
  const bool req = needs_grad(a) || needs_grad(b);
  const int out = push(a.value() + b.value(), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad) t.grad_ref(ia) += g;
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad) t.grad_ref(ib) += g;
    };
  return Var(this, out);
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "sub");
  const int ia = a.index_, ib = b.index_;
  const bool req = needs_grad(a) || needs_grad(b);
  const int out = push(a.value() - b.value(), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad) t.grad_ref(ia) += g;
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad) t.grad_ref(ib) -= g;
    };
  return Var(this, out);
}

Var Tape::cmul(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "cmul");
  const int ia = a.index_, ib = b.index_;
  const bool req = needs_grad(a) || needs_grad(b);
  const int out = push(a.value().cwiseProduct(b.value()), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad)
        t.grad_ref(ia) += g.cwiseProduct(t.value(ib));
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad)
        t.grad_ref(ib) += g.cwiseProduct(t.value(ia));
    };
  return Var(this, out);
}

Var Tape::matmul(Var a, Var b) {
  if (a.value().cols() != b.value().rows()) throw Error("matmul: shape mismatch");
  const int ia = a.index_, ib = b.index_;
  const bool req = needs_grad(a) || needs_grad(b);
  const int out = push(a.value() * b.value(), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad)
        t.grad_ref(ia) += g * t.value(ib).transpose();
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad)
        t.grad_ref(ib) += t.value(ia).transpose() * g;
    };
  return Var(this, out);
}

Var Tape::transpose(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  const int out = push(a.value().transpose(), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      t.grad_ref(ia) += t.grad_ref(out).transpose();
    };
  return Var(this, out);
}

Var Tape::affine(Var a, double scale, double shift) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  const int out =
      push((a.value().array() * scale + shift).matrix(), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out, scale](Tape& t) {
      t.grad_ref(ia) += scale * t.grad_ref(out);
    };
  return Var(this, out);
}

Var Tape::add_rowvec(Var a, Var row) {
  if (row.value().rows() != 1 || row.value().cols() != a.value().cols())
    throw Error("add_rowvec: shape mismatch");
  const int ia = a.index_, ir = row.index_;
  const bool req = needs_grad(a) || needs_grad(row);
  Matrix v = a.value();
  v.rowwise() += RowVector(row.value().row(0));
  const int out = push(std::move(v), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ir, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad) t.grad_ref(ia) += g;
      if (t.nodes_[static_cast<size_t>(ir)].requires_grad)
        t.grad_ref(ir) += g.colwise().sum();
    };
  return Var(this, out);
}

Var Tape::sigmoid(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix y = a.value().unaryExpr(
      [](Scalar x) { return Scalar(1) / (Scalar(1) + std::exp(-x)); });
  const int out = push(std::move(y), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      const Matrix& y = t.value(out);
      t.grad_ref(ia) += t.grad_ref(out)
                            .cwiseProduct(y)
                            .cwiseProduct((1.0 - y.array()).matrix());
    };
  return Var(this, out);
}

Var Tape::tanh(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix y = a.value().unaryExpr([](Scalar x) { return std::tanh(x); });
  const int out = push(std::move(y), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      const Matrix& y = t.value(out);
      t.grad_ref(ia) +=
          t.grad_ref(out).cwiseProduct((1.0 - y.array().square()).matrix());
    };
  return Var(this, out);
}

Var Tape::relu(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix y = a.value().cwiseMax(0.0);
  const int out = push(std::move(y), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      const Matrix& x = t.value(ia);
      t.grad_ref(ia) += t.grad_ref(out).cwiseProduct(
          (x.array() > 0.0).cast<Scalar>().matrix());
    };
  return Var(this, out);
}

Var Tape::log(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix y = a.value().array().log().matrix();
  const int out = push(std::move(y), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      t.grad_ref(ia) +=
          t.grad_ref(out).cwiseQuotient(t.value(ia));
    };
  return Var(this, out);
}

Var Tape::clamp(Var a, double lo, double hi) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  const int out = push(std::move(y), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out, lo, hi](Tape& t) {
      const Matrix& x = t.value(ia);
      Matrix inside =
          ((x.array() > lo) && (x.array() < hi)).cast<Scalar>().matrix();
      t.grad_ref(ia) += t.grad_ref(out).cwiseProduct(inside);
    };
  return Var(this, out);
}

Var Tape::concat_cols(Var a, Var b) {
  if (a.value().rows() != b.value().rows())
    throw Error("concat_cols: row mismatch");
  const int ia = a.index_, ib = b.index_;
  const Index ca = a.value().cols(), cb = b.value().cols();
  const bool req = needs_grad(a) || needs_grad(b);
  Matrix v(a.value().rows(), ca + cb);
  v << a.value(), b.value();
  const int out = push(std::move(v), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, ca, cb, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad)
        t.grad_ref(ia) += g.leftCols(ca);
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad)
        t.grad_ref(ib) += g.rightCols(cb);
    };
  return Var(this, out);
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("concat_rows: nothing to concatenate");
  Index rows = 0;
  const Index cols = parts.front().value().cols();
  bool req = false;
  std::vector<int> idx;
  std::vector<Index> heights;
  for (const Var& p : parts) {
    if (p.value().cols() != cols) throw Error("concat_rows: column mismatch");
    rows += p.value().rows();
    heights.push_back(p.value().rows());
    idx.push_back(p.index_);
    req = req || needs_grad(p);
  }
  Matrix v(rows, cols);
  Index at = 0;
  for (const Var& p : parts) {
    v.middleRows(at, p.value().rows()) = p.value();
    at += p.value().rows();
  }
  const int out = push(std::move(v), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [idx, heights, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);
      Index at = 0;
      for (size_t i = 0; i < idx.size(); ++i) {
        if (t.nodes_[static_cast<size_t>(idx[i])].requires_grad)
          t.grad_ref(idx[i]) += g.middleRows(at, heights[i]);
        at += heights[i];
      }
    };
  return Var(this, out);
}

Var Tape::scale_rows(Var a, const Vector& coeffs) {
  if (coeffs.size() != a.value().rows()) throw Error("scale_rows: size mismatch");
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix v = coeffs.asDiagonal() * a.value();
  const int out = push(std::move(v), req, nullptr);
  if (req) {
    Vector c = coeffs;
    nodes_[static_cast<size_t>(out)].backprop = [ia, out, c](Tape& t) {
      t.grad_ref(ia) += c.asDiagonal() * t.grad_ref(out);
    };
  }
  return Var(this, out);
}

Var Tape::scale_cols(Var a, const RowVector& coeffs) {
  if (coeffs.size() != a.value().cols()) throw Error("scale_cols: size mismatch");
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix v = a.value() * coeffs.transpose().asDiagonal();
  const int out = push(std::move(v), req, nullptr);
  if (req) {
    RowVector c = coeffs;
    nodes_[static_cast<size_t>(out)].backprop = [ia, out, c](Tape& t) {
      t.grad_ref(ia) += t.grad_ref(out) * c.transpose().asDiagonal();
    };
  }
  return Var(this, out);
}

Var Tape::masked_softmax_rows(Var scores, const std::vector<char>& mask) {
  if (static_cast<Index>(mask.size()) != scores.value().cols())
    throw Error("masked_softmax_rows: mask size mismatch");
  bool any = false;
  for (char m : mask) any = any || (m != 0);
  if (!any) throw Error("masked_softmax_rows: every position is masked");

  const int is = scores.index_;
  const bool req = needs_grad(scores);
  const Matrix& s = scores.value();
  Matrix y = Matrix::Zero(s.rows(), s.cols());
  for (Index r = 0; r < s.rows(); ++r) {
    Scalar mx = -std::numeric_limits<Scalar>::infinity();
    for (Index c = 0; c < s.cols(); ++c)
      if (mask[static_cast<size_t>(c)]) mx = std::max(mx, s(r, c));
    Scalar z = 0;
    for (Index c = 0; c < s.cols(); ++c)
      if (mask[static_cast<size_t>(c)]) {
        y(r, c) = std::exp(s(r, c) - mx);
        z += y(r, c);
      }
    for (Index c = 0; c < s.cols(); ++c)
      if (mask[static_cast<size_t>(c)]) y(r, c) /= z;
  }
  const int out = push(std::move(y), req, nullptr);
  if (req) {
    std::vector<char> m = mask;
    nodes_[static_cast<size_t>(out)].backprop = [is, out, m](Tape& t) {
      const Matrix& y = t.value(out);
      const Matrix& g = t.grad_ref(out);
      Matrix& gs = t.grad_ref(is);
      for (Index r = 0; r < y.rows(); ++r) {
        Scalar dot = 0;
        for (Index c = 0; c < y.cols(); ++c)
          if (m[static_cast<size_t>(c)]) dot += g(r, c) * y(r, c);
        for (Index c = 0; c < y.cols(); ++c)
          if (m[static_cast<size_t>(c)]) gs(r, c) += y(r, c) * (g(r, c) - dot);
      }
    };
  }
  return Var(this, out);
}

Var Tape::rowwise_dot(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "rowwise_dot");
  const int ia = a.index_, ib = b.index_;
  const bool req = needs_grad(a) || needs_grad(b);
  Matrix v = a.value().cwiseProduct(b.value()).rowwise().sum();
  const int out = push(std::move(v), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, ib, out](Tape& t) {
      const Matrix& g = t.grad_ref(out);  // [n, 1]
      if (t.nodes_[static_cast<size_t>(ia)].requires_grad)
        t.grad_ref(ia) += g.col(0).asDiagonal() * t.value(ib);
      if (t.nodes_[static_cast<size_t>(ib)].requires_grad)
        t.grad_ref(ib) += g.col(0).asDiagonal() * t.value(ia);
    };
  return Var(this, out);
}

Var Tape::sum_all(Var a) {
  const int ia = a.index_;
  const bool req = needs_grad(a);
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  const int out = push(std::move(v), req, nullptr);
  if (req)
    nodes_[static_cast<size_t>(out)].backprop = [ia, out](Tape& t) {
      const Scalar g = t.grad_ref(out)(0, 0);
      t.grad_ref(ia).array() += g;
    };
  return Var(this, out);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw Error("backward: loss from another tape");
  if (loss.value().rows() != 1 || loss.value().cols() != 1)
    throw Error("backward: loss must be 1x1");
  grad_ref(loss.index_)(0, 0) = 1.0;
  for (int i = loss.index_; i >= 0; --i) {
    Node& node = nodes_[static_cast<size_t>(i)];
    if (!node.requires_grad || node.grad.size() == 0) continue;
    if (node.backprop) node.backprop(*this);
    if (node.external) node.external->grad += node.grad;
  }
}

}  // namespace lmtc::autodiff
