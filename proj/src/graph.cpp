// Copyright 2026 The lamda Authors.
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

#include "lamda/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <set>

#include "lamda/error.hpp"

namespace lamda {
namespace {

Graph& common_graph(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw ContractError(std::string(op) + ": operands belong to different graphs");
  }
  return a.graph();
}

Tensor finalize(Tensor t, std::string_view op) {
  t.round_to_mode();
  t.check_finite(op);
  return t;
}

void accumulate(Tensor& into, const Tensor& g) {
  if (into.is_null()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

}  // namespace

const Tensor& Var::value() const { return graph_->value(id_); }

bool Var::requires_grad() const { return graph_->requires_grad(id_); }

bool GradientMap::contains(Var v) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.id == v.id(); });
}

const Tensor& GradientMap::at(Var v) const {
  for (const auto& e : entries_)
    if (e.id == v.id()) return e.grad;
  throw ContractError("no gradient recorded for node " + std::to_string(v.id()));
}

const Tensor& GradientMap::at(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.grad;
  throw ContractError("no gradient recorded for '" + std::string(name) + "'");
}

Var Graph::add_leaf(NodeKind kind, Tensor value, std::string name, bool requires_grad) {
  if (value.is_null()) throw ContractError("graph leaf '" + name + "' has no value");
  Node node;
  node.kind = kind;
  node.name = std::move(name);
  node.tag = current_tag_;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(Tensor value, std::string name) {
  return add_leaf(NodeKind::parameter, std::move(value), std::move(name), true);
}

Var Graph::frozen(Tensor value, std::string name) {
  return add_leaf(NodeKind::frozen, std::move(value), std::move(name), false);
}

Var Graph::input(Tensor value, std::string name) {
  return add_leaf(NodeKind::input, std::move(value), std::move(name), false);
}

Var Graph::record(std::string_view op, Tensor value, std::vector<Var> inputs,
                  std::vector<Var> saved, BackwardRule rule) {
  Node node;
  node.kind = NodeKind::op;
  node.name = std::string(op);
  node.tag = current_tag_;
  node.value = finalize(std::move(value), op);
  for (const Var& v : inputs) {
    if (&v.graph() != this) throw ContractError(node.name + ": input from another graph");
    node.inputs.push_back(v.id());
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  for (const Var& v : saved) node.saved.push_back(v.id());
  node.rule = std::move(rule);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Graph::TagScope::TagScope(Graph& graph, std::string tag)
    : graph_(graph), saved_(std::exchange(graph.current_tag_, std::move(tag))) {}

Graph::TagScope::~TagScope() { graph_.current_tag_ = std::move(saved_); }

GradientMap Graph::backward(Var loss) {
  if (!loss.valid() || &loss.graph() != this) {
    throw ContractError("backward: loss does not belong to this graph");
  }
  if (loss.value().size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " +
                        shape_string(loss.value().shape()));
  }
  std::vector<Tensor> grads(nodes_.size());
  grads[loss.id()] = Tensor(loss.value().shape(), {1.0});

  std::vector<Tensor> input_grads;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.kind != NodeKind::op || !node.requires_grad || grads[id].is_null()) continue;
    input_grads.assign(node.inputs.size(), Tensor());
    node.rule(grads[id], input_grads);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k];
      if (!nodes_[in].requires_grad || input_grads[k].is_null()) continue;
      if (input_grads[k].shape() != nodes_[in].value.shape()) {
        throw ContractError("backward rule of '" + node.name + "' produced gradient of shape " +
                            shape_string(input_grads[k].shape()) + " for input of shape " +
                            shape_string(nodes_[in].value.shape()));
      }
      input_grads[k].round_to_mode();
      accumulate(grads[in], input_grads[k]);
    }
    // Intermediate gradients are no longer needed once propagated.
    grads[id] = Tensor();
  }

  GradientMap out;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& node = nodes_[id];
    if (node.kind != NodeKind::parameter) continue;
    Tensor g = grads[id].is_null() ? Tensor(node.value.shape()) : std::move(grads[id]);
    g.check_finite("gradient of " + node.name);
    out.entries_.push_back({id, node.name, std::move(g)});
  }
  return out;
}

std::vector<RetainedActivation> Graph::retained_activations(
    std::string_view tag_prefix) const {
  std::vector<RetainedActivation> out;
  std::set<std::size_t> seen;
  for (const Node& node : nodes_) {
    if (node.kind != NodeKind::op || !node.tag.starts_with(tag_prefix)) continue;
    for (std::size_t id : node.saved) {
      const NodeKind kind = nodes_[id].kind;
      if (kind == NodeKind::parameter || kind == NodeKind::frozen) continue;
      if (!seen.insert(id).second) continue;
      out.push_back({id, node.tag, nodes_[id].value.shape()});
    }
  }
  return out;
}

std::size_t Graph::retained_activation_floats(std::string_view tag_prefix) const {
  std::size_t total = 0;
  for (const auto& r : retained_activations(tag_prefix)) total += value(r.id).size();
  return total;
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b, "matmul");
  std::vector<Var> saved;
  if (b.requires_grad()) saved.push_back(a);
  if (a.requires_grad()) saved.push_back(b);
  return g.record("matmul", lamda::matmul(a.value(), b.value()), {a, b}, std::move(saved),
                  [a, b](const Tensor& dy, std::vector<Tensor>& dx) {
                    if (a.requires_grad()) dx[0] = matmul_nt(dy, b.value());
                    if (b.requires_grad()) dx[1] = matmul_tn(a.value(), dy);
                  });
}

Var add(Var a, Var b) {
  Graph& g = common_graph(a, b, "add");
  return g.record("add", lamda::add(a.value(), b.value()), {a, b}, {},
                  [](const Tensor& dy, std::vector<Tensor>& dx) {
                    dx[0] = dy;
                    dx[1] = dy;
                  });
}

Var sub(Var a, Var b) {
  Graph& g = common_graph(a, b, "sub");
  return g.record("sub", lamda::sub(a.value(), b.value()), {a, b}, {},
                  [](const Tensor& dy, std::vector<Tensor>& dx) {
                    dx[0] = dy;
                    dx[1] = scaled(dy, -1.0);
                  });
}

Var mul(Var a, Var b) {
  Graph& g = common_graph(a, b, "mul");
  std::vector<Var> saved;
  if (b.requires_grad()) saved.push_back(a);
  if (a.requires_grad()) saved.push_back(b);
  return g.record("mul", hadamard(a.value(), b.value()), {a, b}, std::move(saved),
                  [a, b](const Tensor& dy, std::vector<Tensor>& dx) {
                    if (a.requires_grad()) dx[0] = hadamard(dy, b.value());
                    if (b.requires_grad()) dx[1] = hadamard(dy, a.value());
                  });
}

Var scale(Var a, double factor) {
  return a.graph().record("scale", scaled(a.value(), factor), {a}, {},
                          [factor](const Tensor& dy, std::vector<Tensor>& dx) {
                            dx[0] = scaled(dy, factor);
                          });
}

Var transpose(Var a) {
  return a.graph().record("transpose", lamda::transpose(a.value()), {a}, {},
                          [](const Tensor& dy, std::vector<Tensor>& dx) {
                            dx[0] = lamda::transpose(dy);
                          });
}

Var add_bias(Var a, Var bias) {
  Graph& g = common_graph(a, bias, "add_bias");
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  if (b.size() != x.cols()) {
    throw DimensionError("add_bias: bias of shape " + shape_string(b.shape()) +
                         " does not match " + shape_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += b[j];
  const Shape bias_shape = b.shape();
  return g.record("add_bias", std::move(out), {a, bias}, {},
                  [bias_shape](const Tensor& dy, std::vector<Tensor>& dx) {
                    dx[0] = dy;
                    Tensor db(bias_shape);
                    for (std::size_t i = 0; i < dy.rows(); ++i)
                      for (std::size_t j = 0; j < dy.cols(); ++j) db[j] += dy(i, j);
                    dx[1] = std::move(db);
                  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // √(2/π)
constexpr double kGeluK = 0.044715;
}  // namespace

Var gelu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) {
    const double x = v;
    v = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluK * x * x * x)));
  }
  return a.graph().record("gelu", std::move(out), {a}, {a},
                          [a](const Tensor& dy, std::vector<Tensor>& dx) {
                            const Tensor& xin = a.value();
                            Tensor d = dy;
                            for (std::size_t i = 0; i < d.size(); ++i) {
                              const double x = xin[i];
                              const double t = std::tanh(kGeluC * (x + kGeluK * x * x * x));
                              const double dt = (1.0 - t * t) * kGeluC *
                                                (1.0 + 3.0 * kGeluK * x * x);
                              d[i] *= 0.5 * (1.0 + t) + 0.5 * x * dt;
                            }
                            dx[0] = std::move(d);
                          });
}

Var softmax_rows(Var a, bool causal) {
  const Tensor& x = a.value();
  if (x.ndim() != 2) throw DimensionError("softmax_rows: expected a matrix");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  Tensor p({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t live = causal ? std::min(n, i + 1) : n;
    double mx = x(i, 0);
    for (std::size_t j = 1; j < live; ++j) mx = std::max(mx, x(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < live; ++j) {
      p(i, j) = std::exp(x(i, j) - mx);
      s += p(i, j);
    }
    for (std::size_t j = 0; j < live; ++j) p(i, j) /= s;
  }
  Graph& g = a.graph();
  // The rule reads the output; it is referenced through the node recorded
  // below, so capture a slot to fill in after recording.
  auto self = std::make_shared<Var>();
  Var out = g.record("softmax_rows", std::move(p), {a}, {},
                     [self](const Tensor& dy, std::vector<Tensor>& dx) {
                       const Tensor& y = self->value();
                       Tensor d({y.rows(), y.cols()});
                       for (std::size_t i = 0; i < y.rows(); ++i) {
                         double dot = 0.0;
                         for (std::size_t j = 0; j < y.cols(); ++j) dot += dy(i, j) * y(i, j);
                         for (std::size_t j = 0; j < y.cols(); ++j)
                           d(i, j) = y(i, j) * (dy(i, j) - dot);
                       }
                       dx[0] = std::move(d);
                     });
  *self = out;
  return out;
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  Graph& g = common_graph(a, gain, "layer_norm");
  common_graph(a, bias, "layer_norm");
  const Tensor& x = a.value();
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  if (x.ndim() != 2) throw DimensionError("layer_norm: expected a matrix");
  if (d == 1 && eps == 0.0) {
    throw ConfigError("layer_norm: a single feature with eps = 0 has zero variance");
  }
  if (gain.value().size() != d || bias.value().size() != d) {
    throw DimensionError("layer_norm: gain/bias of shape " + shape_string(gain.value().shape()) +
                         "/" + shape_string(bias.value().shape()) + " for input " +
                         shape_string(x.shape()));
  }
  Tensor xhat({m, d});
  std::vector<double> inv_std(m);
  Tensor out({m, d});
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (std::size_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    if (!std::isfinite(inv_std[i])) {
      throw NumericalError("layer_norm: zero variance row with eps = 0");
    }
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (x(i, j) - mean) * inv_std[i];
      out(i, j) = xhat(i, j) * gv[j] + bv[j];
    }
  }
  const Shape gshape = gv.shape();
  return g.record(
      "layer_norm", std::move(out), {a, gain, bias}, {a, gain},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), gain, gshape](
          const Tensor& dy, std::vector<Tensor>& dx) {
        const std::size_t m = xhat.rows();
        const std::size_t d = xhat.cols();
        const Tensor& gv = gain.value();
        Tensor dgain(gshape);
        Tensor dbias(gshape);
        Tensor dxv({m, d});
        for (std::size_t i = 0; i < m; ++i) {
          double sum_dh = 0.0;
          double sum_dh_xhat = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double dh = dy(i, j) * gv[j];
            sum_dh += dh;
            sum_dh_xhat += dh * xhat(i, j);
            dgain[j] += dy(i, j) * xhat(i, j);
            dbias[j] += dy(i, j);
          }
          const double inv_d = 1.0 / static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const double dh = dy(i, j) * gv[j];
            dxv(i, j) = inv_std[i] * (dh - inv_d * sum_dh - xhat(i, j) * inv_d * sum_dh_xhat);
          }
        }
        dx[0] = std::move(dxv);
        dx[1] = std::move(dgain);
        dx[2] = std::move(dbias);
      });
}

Var embedding(Var table, std::span<const int> ids) {
  const Tensor& t = table.value();
  if (t.ndim() != 2) throw DimensionError("embedding: table must be a matrix");
  if (ids.empty()) throw DimensionError("embedding: no ids");
  const std::size_t d = t.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= t.rows()) {
      throw DimensionError("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                           std::to_string(t.rows()) + " rows");
    }
    std::copy_n(t.data().data() + static_cast<std::size_t>(ids[i]) * d, d,
                out.data().data() + i * d);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  const Shape tshape = t.shape();
  return table.graph().record("embedding", std::move(out), {table}, {},
                              [idv = std::move(idv), tshape](const Tensor& dy,
                                                             std::vector<Tensor>& dx) {
                                Tensor dt(tshape);
                                const std::size_t d = tshape[1];
                                for (std::size_t i = 0; i < idv.size(); ++i) {
                                  const std::size_t row = static_cast<std::size_t>(idv[i]);
                                  for (std::size_t j = 0; j < d; ++j) dt(row, j) += dy(i, j);
                                }
                                dx[0] = std::move(dt);
                              });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const Tensor& z = logits.value();
  if (z.ndim() != 2 || z.rows() != targets.size()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_string(z.shape()));
  }
  const std::size_t m = z.rows();
  const std::size_t v = z.cols();
  Tensor probs({m, v});
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double mx = z(i, 0);
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, z(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < v; ++j) s += std::exp(z(i, j) - mx);
    const double log_s = std::log(s);
    for (std::size_t j = 0; j < v; ++j) probs(i, j) = std::exp(z(i, j) - mx - log_s);
    if (targets[i] < 0) continue;
    if (static_cast<std::size_t>(targets[i]) >= v) {
      throw DimensionError("cross_entropy: target " + std::to_string(targets[i]) +
                           " outside vocabulary of " + std::to_string(v));
    }
    total -= z(i, static_cast<std::size_t>(targets[i])) - mx - log_s;
    ++counted;
  }
  if (counted == 0) throw ContractError("cross_entropy: every target is ignored");
  const double inv = 1.0 / static_cast<double>(counted);
  std::vector<int> tv(targets.begin(), targets.end());
  return logits.graph().record(
      "cross_entropy", Tensor::scalar(total * inv), {logits}, {logits},
      [probs = std::move(probs), tv = std::move(tv), inv](const Tensor& dy,
                                                          std::vector<Tensor>& dx) {
        Tensor d({probs.rows(), probs.cols()});
        const double gscale = dy[0] * inv;
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          if (tv[i] < 0) continue;
          for (std::size_t j = 0; j < probs.cols(); ++j) d(i, j) = gscale * probs(i, j);
          d(i, static_cast<std::size_t>(tv[i])) -= gscale;
        }
        dx[0] = std::move(d);
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: nothing to concatenate");
  Graph& g = parts[0].graph();
  const std::size_t m = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.graph() != &g) throw ContractError("concat_cols: operands from different graphs");
    if (p.value().rows() != m || p.value().ndim() != 2) {
      throw DimensionError("concat_cols: row count mismatch " +
                           shape_string(parts[0].value().shape()) + " vs " +
                           shape_string(p.value().shape()));
    }
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({m, total});
  std::size_t c0 = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data().data() + i * v.cols(), v.cols(), out.data().data() + i * total + c0);
    c0 += v.cols();
  }
  return g.record("concat_cols", std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                  {}, [widths](const Tensor& dy, std::vector<Tensor>& dx) {
                    std::size_t c = 0;
                    for (std::size_t k = 0; k < widths.size(); ++k) {
                      dx[k] = lamda::slice(dy, 0, dy.rows(), c, widths[k]);
                      c += widths[k];
                    }
                  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  Graph& g = parts[0].graph();
  const std::size_t n = parts[0].value().cols();
  std::vector<std::size_t> heights;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.graph() != &g) throw ContractError("concat_rows: operands from different graphs");
    if (p.value().cols() != n || p.value().ndim() != 2) {
      throw DimensionError("concat_rows: column count mismatch " +
                           shape_string(parts[0].value().shape()) + " vs " +
                           shape_string(p.value().shape()));
    }
    heights.push_back(p.value().rows());
    total += p.value().rows();
  }
  Tensor out({total, n});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.value().size();
  }
  return g.record("concat_rows", std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                  {}, [heights](const Tensor& dy, std::vector<Tensor>& dx) {
                    std::size_t r = 0;
                    for (std::size_t k = 0; k < heights.size(); ++k) {
                      dx[k] = lamda::slice(dy, r, heights[k], 0, dy.cols());
                      r += heights[k];
                    }
                  });
}

Var slice(Var a, std::size_t row0, std::size_t rows, std::size_t col0, std::size_t cols) {
  const Shape in_shape = a.value().shape();
  return a.graph().record(
      "slice", lamda::slice(a.value(), row0, rows, col0, cols), {a}, {},
      [in_shape, row0, rows, col0, cols](const Tensor& dy, std::vector<Tensor>& dx) {
        Tensor d(in_shape);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) d(row0 + i, col0 + j) = dy(i, j);
        dx[0] = std::move(d);
      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const Shape in_shape = a.value().shape();
  return a.graph().record("sum", Tensor::scalar(s), {a}, {},
                          [in_shape](const Tensor& dy, std::vector<Tensor>& dx) {
                            Tensor d(in_shape);
                            for (double& v : d.data()) v = dy[0];
                            dx[0] = std::move(d);
                          });
}

}  // namespace lamda
