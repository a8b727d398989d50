// Copyright 2026 The Emformer Stream Authors. All Rights Reserved.
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

#include "emformer/autograd.h"

#include <cmath>
#include <stdexcept>

#include "emformer/errors.h"

namespace emformer {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: value of an unbound variable");
  return tape_->value(id_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::param(const Param& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node node;
  node.value = p.value;
  node.requires_grad = true;
  node.param = &p;
  Var v = push(std::move(node));
  param_ids_.emplace(&p, v.id());
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw std::logic_error("Tape: input recorded on a different tape");
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

void Tape::accumulate(std::size_t id, const Matrix& delta) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    if (!delta.same_shape(node.value)) {
      throw ShapeError("Tape: gradient " + delta.shape_string() + " for value " +
                       node.value.shape_string());
    }
    node.grad = delta;
    node.has_grad = true;
    return;
  }
  auto dst = node.grad.data();
  const auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::accumulate_row(std::size_t id, std::size_t row, std::span<const double> delta) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.has_grad) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
    node.has_grad = true;
  }
  auto dst = node.grad.row(row);
  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += delta[j];
}

Gradients Tape::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward: nothing was recorded");
  if (loss.tape() != this || loss.id() >= nodes_.size()) {
    throw std::logic_error("backward: loss was not recorded on this tape");
  }
  const Matrix& loss_value = nodes_[loss.id()].value;
  if (loss_value.rows() != 1 || loss_value.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1, got " + loss_value.shape_string());
  }

  accumulate(loss.id(), Matrix(1, 1, 1.0));
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) continue;
    // The closure may append to other nodes' grads but never to this one.
    const Matrix grad = std::move(node.grad);
    node.has_grad = false;
    node.backward(*this, grad, node.value);
  }

  Gradients grads;
  for (const auto& [param, id] : param_ids_) {
    Node& node = nodes_[id];
    grads.emplace(param, node.has_grad ? std::move(node.grad)
                                       : Matrix(node.value.rows(), node.value.cols()));
  }
  nodes_.clear();
  param_ids_.clear();
  return grads;
}

void apply_gradients(std::span<Param* const> params, const Gradients& grads) {
  for (Param* p : params) {
    if (auto it = grads.find(p); it != grads.end()) {
      p->grad = it->second;
    } else {
      p->grad = Matrix(p->value.rows(), p->value.cols());
    }
  }
}

namespace ag {
namespace {

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw std::logic_error("ag: unbound variable");
  return *v.tape();
}

Matrix column_sums(const Matrix& g) {
  Matrix out(1, g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const auto src = g.row(i);
    for (std::size_t j = 0; j < g.cols(); ++j) out(0, j) += src[j];
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(emformer::matmul(a.value(), b.value()), {a, b},
                  [ia, ib](Tape& tape, const Matrix& g, const Matrix&) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, matmul_nt(g, tape.value(ib)));
                    if (tape.requires_grad(ib)) tape.accumulate(ib, matmul_tn(tape.value(ia), g));
                  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(emformer::matmul_nt(a.value(), b.value()), {a, b},
                  [ia, ib](Tape& tape, const Matrix& g, const Matrix&) {
                    if (tape.requires_grad(ia)) {
                      tape.accumulate(ia, emformer::matmul(g, tape.value(ib)));
                    }
                    if (tape.requires_grad(ib)) tape.accumulate(ib, matmul_tn(g, tape.value(ia)));
                  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return t.record(emformer::add(a.value(), b.value()), {a, b},
                  [ia, ib](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(ia, g);
                    tape.accumulate(ib, g);
                  });
}

Var add_row(Var m, Var row) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  const std::size_t ir = row.id();
  return t.record(emformer::add_row(m.value(), row.value()), {m, row},
                  [im, ir](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(im, g);
                    if (tape.requires_grad(ir)) tape.accumulate(ir, column_sums(g));
                  });
}

Var scale(Var m, double factor) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::scale(m.value(), factor), {m},
                  [im, factor](Tape& tape, const Matrix& g, const Matrix&) {
                    tape.accumulate(im, emformer::scale(g, factor));
                  });
}

Var relu(Var m) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::relu(m.value()), {m},
                  [im](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& x = tape.value(im);
                    Matrix dx(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) {
                      dx.data()[i] = x.data()[i] > 0.0 ? g.data()[i] : 0.0;
                    }
                    tape.accumulate(im, dx);
                  });
}

Var softmax_rows(Var m, const Mask* mask) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::softmax_rows(m.value(), mask), {m},
                  [im](Tape& tape, const Matrix& g, const Matrix& y) {
                    Matrix dx(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      const auto gi = g.row(i);
                      const auto yi = y.row(i);
                      double dot = 0.0;
                      for (std::size_t j = 0; j < gi.size(); ++j) dot += gi[j] * yi[j];
                      auto dst = dx.row(i);
                      for (std::size_t j = 0; j < gi.size(); ++j) dst[j] = yi[j] * (gi[j] - dot);
                    }
                    tape.accumulate(im, dx);
                  });
}

Var log_softmax_rows(Var m) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::log_softmax_rows(m.value()), {m},
                  [im](Tape& tape, const Matrix& g, const Matrix& y) {
                    Matrix dx(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      const auto gi = g.row(i);
                      const auto yi = y.row(i);
                      double total = 0.0;
                      for (double v : gi) total += v;
                      auto dst = dx.row(i);
                      for (std::size_t j = 0; j < gi.size(); ++j) {
                        dst[j] = gi[j] - std::exp(yi[j]) * total;
                      }
                    }
                    tape.accumulate(im, dx);
                  });
}

Var layer_norm(Var m, Var gain, Var bias, double eps) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  const std::size_t ig = gain.id();
  const std::size_t ib = bias.id();
  return t.record(
      emformer::layer_norm(m.value(), gain.value(), bias.value(), eps), {m, gain, bias},
      [im, ig, ib, eps](Tape& tape, const Matrix& g, const Matrix&) {
        const Matrix& x = tape.value(im);
        const Matrix& gamma = tape.value(ig);
        const std::size_t n = x.cols();
        const double nd = static_cast<double>(n);
        Matrix dx(x.rows(), n);
        Matrix dgain(1, n);
        Matrix dbias(1, n);
        std::vector<double> xhat(n);
        std::vector<double> dxhat(n);
        for (std::size_t i = 0; i < x.rows(); ++i) {
          const auto xi = x.row(i);
          const auto gi = g.row(i);
          double mean = 0.0;
          for (double v : xi) mean += v;
          mean /= nd;
          double var = 0.0;
          for (double v : xi) var += (v - mean) * (v - mean);
          var /= nd;
          const double inv_std = 1.0 / std::sqrt(var + eps);
          double sum_dxhat = 0.0;
          double sum_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            xhat[j] = (xi[j] - mean) * inv_std;
            dxhat[j] = gi[j] * gamma(0, j);
            dgain(0, j) += gi[j] * xhat[j];
            dbias(0, j) += gi[j];
            sum_dxhat += dxhat[j];
            sum_dxhat_xhat += dxhat[j] * xhat[j];
          }
          auto dst = dx.row(i);
          for (std::size_t j = 0; j < n; ++j) {
            dst[j] = inv_std / nd * (nd * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
          }
        }
        tape.accumulate(im, dx);
        tape.accumulate(ig, dgain);
        tape.accumulate(ib, dbias);
      });
}

Var linear(Var x, Var w, const Var* b) {
  Var out = matmul(x, w);
  return b != nullptr ? add_row(out, *b) : out;
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::logic_error("ag::concat_rows: no parts");
  Tape& t = tape_of(parts.front());
  std::vector<const Matrix*> values;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    values.push_back(&p.value());
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.rows();
  }
  return t.record(emformer::concat_rows(values), parts,
                  [ids, offsets](Tape& tape, const Matrix& g, const Matrix&) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!tape.requires_grad(ids[k])) continue;
                      const std::size_t rows = tape.value(ids[k]).rows();
                      if (rows == 0) continue;
                      tape.accumulate(ids[k], slice_rows(g, offsets[k], offsets[k] + rows));
                    }
                  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::logic_error("ag::concat_cols: no parts");
  Tape& t = tape_of(parts.front());
  std::vector<const Matrix*> values;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    values.push_back(&p.value());
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.cols();
  }
  return t.record(emformer::concat_cols(values), parts,
                  [ids, offsets](Tape& tape, const Matrix& g, const Matrix&) {
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!tape.requires_grad(ids[k])) continue;
                      const std::size_t cols = tape.value(ids[k]).cols();
                      tape.accumulate(ids[k], emformer::slice_cols(g, offsets[k], offsets[k] + cols));
                    }
                  });
}

Var slice_rows(Var m, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::slice_rows(m.value(), begin, end), {m},
                  [im, begin](Tape& tape, const Matrix& g, const Matrix&) {
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      tape.accumulate_row(im, begin + i, g.row(i));
                    }
                  });
}

Var slice_cols(Var m, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  return t.record(emformer::slice_cols(m.value(), begin, end), {m},
                  [im, begin](Tape& tape, const Matrix& g, const Matrix&) {
                    const Matrix& x = tape.value(im);
                    Matrix dx(x.rows(), x.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < g.cols(); ++j) dx(i, begin + j) = g(i, j);
                    tape.accumulate(im, dx);
                  });
}

Var gather_rows(Var m, std::span<const std::size_t> rows) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return t.record(emformer::gather_rows(m.value(), rows), {m},
                  [im, index](Tape& tape, const Matrix& g, const Matrix&) {
                    for (std::size_t i = 0; i < index.size(); ++i) {
                      tape.accumulate_row(im, index[i], g.row(i));
                    }
                  });
}

Var mean_rows(Var m, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(m);
  if (begin >= end || end > m.rows()) {
    throw ShapeError("ag::mean_rows: empty or out-of-range row span");
  }
  const std::size_t im = m.id();
  const std::vector<double> mean = mean_pool_rows(emformer::slice_rows(m.value(), begin, end));
  return t.record(Matrix::row_vector(mean), {m},
                  [im, begin, end](Tape& tape, const Matrix& g, const Matrix&) {
                    const double inv = 1.0 / static_cast<double>(end - begin);
                    std::vector<double> share(g.cols());
                    for (std::size_t j = 0; j < g.cols(); ++j) share[j] = g(0, j) * inv;
                    for (std::size_t r = begin; r < end; ++r) tape.accumulate_row(im, r, share);
                  });
}

Var sum(Var m) {
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  double total = 0.0;
  for (double v : m.value().data()) total += v;
  return t.record(Matrix(1, 1, total), {m}, [im](Tape& tape, const Matrix& g, const Matrix&) {
    const Matrix& x = tape.value(im);
    tape.accumulate(im, Matrix(x.rows(), x.cols(), g(0, 0)));
  });
}

Var dropout(Var m, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return m;
  if (p >= 1.0) throw std::invalid_argument("ag::dropout: p must be < 1");
  Tape& t = tape_of(m);
  const std::size_t im = m.id();
  std::bernoulli_distribution keep(1.0 - p);
  Matrix factors(m.rows(), m.cols());
  const double inv_keep = 1.0 / (1.0 - p);
  for (double& f : factors.data()) f = keep(rng) ? inv_keep : 0.0;
  Matrix out = m.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factors.data()[i];
  return t.record(std::move(out), {m},
                  [im, factors = std::move(factors)](Tape& tape, const Matrix& g, const Matrix&) {
                    Matrix dx = g;
                    for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] *= factors.data()[i];
                    tape.accumulate(im, dx);
                  });
}

}  // namespace ag
}  // namespace emformer
