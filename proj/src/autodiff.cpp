#include "veil/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "veil/errors.hpp"

namespace veil {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kMatMul: return "matmul";
    case Op::kLinear: return "linear";
    case Op::kAdd: return "add";
    case Op::kAddBias: return "add_bias";
    case Op::kMul: return "mul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kConcat: return "concat";
    case Op::kSliceCols: return "slice_cols";
    case Op::kRow: return "row";
    case Op::kStackRows: return "stack_rows";
    case Op::kSum: return "sum";
    case Op::kAddN: return "add_n";
    case Op::kScale: return "scale";
    case Op::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case Op::kGradReverse: return "grad_reverse";
    case Op::kDropout: return "dropout";
    case Op::kEmbed: return "embed";
    case Op::kConvMaxPool: return "conv_maxpool";
  }
  return "unknown";
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* what) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected rank-2 tensor, got " +
                         shape_to_string(a.shape()));
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Node Tape::make(Op op, std::initializer_list<Var> parents, Tensor value) {
  Node node;
  node.op = op;
  node.value = std::move(value);
  for (Var p : parents) {
    node.parents.push_back(p.id);
  }
  return node;
}

Var Tape::push(Node node) {
  const std::size_t index = nodes_.size();
  for (std::size_t p : node.parents) {
    if (p >= index) {
      throw DimensionError("node references a parent that is not on this tape");
    }
    node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
  }
  if (node.requires_grad && node.param == nullptr) {
    node.grad = Tensor(node.value.shape());
  }
  nodes_.push_back(std::move(node));
  return Var{index};
}

Var Tape::constant(Tensor value) {
  return push(make(Op::kConstant, {}, std::move(value)));
}

Var Tape::parameter(Parameter& param) {
  if (param.grad.shape() != param.value.shape()) {
    param.grad = Tensor(param.value.shape());
  }
  Node node = make(Op::kParameter, {}, Tensor());
  node.param = &param;
  node.requires_grad = true;
  return push(std::move(node));
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  if (x.cols() != y.rows()) {
    throw DimensionError("matmul: inner extents differ, " +
                         shape_to_string(x.shape()) + " · " +
                         shape_to_string(y.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x.at(i, p);
      for (std::size_t j = 0; j < n; ++j) {
        out.at(i, j) += xv * y.at(p, j);
      }
    }
  }
  return push(make(Op::kMatMul, {a, b}, std::move(out)));
}

Var Tape::linear(Var xv, Var wv) {
  const Tensor& x = value(xv);
  const Tensor& w = value(wv);
  require_rank2(x, "linear");
  require_rank2(w, "linear");
  if (x.cols() != w.cols()) {
    throw DimensionError("linear: input " + shape_to_string(x.shape()) +
                         " does not match weight " + shape_to_string(w.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = w.rows();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* xr = x.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* wr = w.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += xr[p] * wr[p];
      }
      out.at(i, j) = acc;
    }
  }
  return push(make(Op::kLinear, {xv, wv}, std::move(out)));
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Tensor out = value(a);
  const Tensor& y = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += y[i];
  }
  return push(make(Op::kAdd, {a, b}, std::move(out)));
}

Var Tape::add_bias(Var a, Var bias) {
  const Tensor& x = value(a);
  const Tensor& b = value(bias);
  require_rank2(x, "add_bias");
  require_rank2(b, "add_bias");
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_to_string(b.shape()) +
                         " does not fit " + shape_to_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out.at(i, j) += b[j];
    }
  }
  return push(make(Op::kAddBias, {a, bias}, std::move(out)));
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor out = value(a);
  const Tensor& y = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= y[i];
  }
  return push(make(Op::kMul, {a, b}, std::move(out)));
}

Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (double& v : out.values()) {
    v = std::tanh(v);
  }
  return push(make(Op::kTanh, {a}, std::move(out)));
}

Var Tape::sigmoid(Var a) {
  Tensor out = value(a);
  for (double& v : out.values()) {
    v = sigmoid_scalar(v);
  }
  return push(make(Op::kSigmoid, {a}, std::move(out)));
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (double& v : out.values()) {
    v = v > 0.0 ? v : 0.0;
  }
  return push(make(Op::kRelu, {a}, std::move(out)));
}

Var Tape::elementwise(Elementwise kind, Var a, std::optional<Var> b) {
  const bool binary = kind == Elementwise::kAdd || kind == Elementwise::kMul;
  if (binary != b.has_value()) {
    throw DimensionError(binary ? "binary elementwise op needs two operands"
                                : "unary elementwise op takes one operand");
  }
  switch (kind) {
    case Elementwise::kAdd: return add(a, *b);
    case Elementwise::kMul: return mul(a, *b);
    case Elementwise::kTanh: return tanh(a);
    case Elementwise::kSigmoid: return sigmoid(a);
    case Elementwise::kRelu: return relu(a);
  }
  throw ConfigError("unknown elementwise kind");
}

Var Tape::concat(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  require_rank2(x, "concat");
  require_rank2(y, "concat");
  if (x.rows() != 1 || y.rows() != 1) {
    throw DimensionError("concat: expects single-row tensors, got " +
                         shape_to_string(x.shape()) + " and " +
                         shape_to_string(y.shape()));
  }
  std::vector<double> values(x.values().begin(), x.values().end());
  values.insert(values.end(), y.values().begin(), y.values().end());
  Tensor out({1, x.cols() + y.cols()}, std::move(values));
  return push(make(Op::kConcat, {a, b}, std::move(out)));
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t length) {
  const Tensor& x = value(a);
  require_rank2(x, "slice_cols");
  if (length == 0 || start + length > x.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") outside " +
                         shape_to_string(x.shape()));
  }
  Tensor out({x.rows(), length});
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < length; ++j) {
      out.at(i, j) = x.at(i, start + j);
    }
  }
  Node node = make(Op::kSliceCols, {a}, std::move(out));
  node.indices = {start};
  return push(std::move(node));
}

Var Tape::row(Var a, std::size_t index) {
  const Tensor& x = value(a);
  require_rank2(x, "row");
  if (index >= x.rows()) {
    throw DimensionError("row " + std::to_string(index) + " outside " +
                         shape_to_string(x.shape()));
  }
  Tensor out = Tensor::row(x.values().subspan(index * x.cols(), x.cols()));
  Node node = make(Op::kRow, {a}, std::move(out));
  node.indices = {index};
  return push(std::move(node));
}

Var Tape::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) {
    throw DimensionError("stack_rows: no rows");
  }
  const Tensor& first = value(rows.front());
  require_rank2(first, "stack_rows");
  const std::size_t width = first.cols();
  std::vector<double> values;
  values.reserve(rows.size() * width);
  Node node;
  node.op = Op::kStackRows;
  for (Var r : rows) {
    const Tensor& t = value(r);
    if (t.rank() != 2 || t.rows() != 1 || t.cols() != width) {
      throw DimensionError("stack_rows: row " + shape_to_string(t.shape()) +
                           " does not match [1x" + std::to_string(width) + "]");
    }
    values.insert(values.end(), t.values().begin(), t.values().end());
    node.parents.push_back(r.id);
  }
  node.value = Tensor({rows.size(), width}, std::move(values));
  return push(std::move(node));
}

Var Tape::sum(Var a) {
  double total = 0.0;
  for (double v : value(a).values()) {
    total += v;
  }
  return push(make(Op::kSum, {a}, Tensor({1, 1}, total)));
}

Var Tape::add_n(std::span<const Var> terms) {
  if (terms.empty()) {
    throw DimensionError("add_n: no terms");
  }
  Tensor out = value(terms.front());
  Node node;
  node.op = Op::kAddN;
  node.parents.push_back(terms.front().id);
  for (std::size_t t = 1; t < terms.size(); ++t) {
    const Tensor& y = value(terms[t]);
    require_same_shape(out, y, "add_n");
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += y[i];
    }
    node.parents.push_back(terms[t].id);
  }
  node.value = std::move(out);
  return push(std::move(node));
}

Var Tape::scale(Var a, double factor) {
  Tensor out = value(a);
  for (double& v : out.values()) {
    v *= factor;
  }
  Node node = make(Op::kScale, {a}, std::move(out));
  node.scalar = factor;
  return push(std::move(node));
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t target) {
  const Tensor& z = value(logits);
  require_rank2(z, "softmax_cross_entropy");
  if (z.rows() != 1) {
    throw DimensionError("softmax_cross_entropy: expects a single row, got " +
                         shape_to_string(z.shape()));
  }
  if (target >= z.cols()) {
    throw DimensionError("softmax_cross_entropy: target " +
                         std::to_string(target) + " out of range for " +
                         std::to_string(z.cols()) + " classes");
  }
  const double peak = *std::max_element(z.values().begin(), z.values().end());
  Tensor probs = z;
  double norm = 0.0;
  for (double& v : probs.values()) {
    v = std::exp(v - peak);
    norm += v;
  }
  for (double& v : probs.values()) {
    v /= norm;
  }
  const double loss = -(z[target] - peak - std::log(norm));
  Node node = make(Op::kSoftmaxCrossEntropy, {logits}, Tensor({1, 1}, loss));
  node.indices = {target};
  node.aux = std::move(probs);
  return push(std::move(node));
}

const Tensor& Tape::softmax_of(Var loss) const {
  const Node& n = node(loss);
  if (n.op != Op::kSoftmaxCrossEntropy) {
    throw DimensionError("softmax_of: node is not a softmax_cross_entropy");
  }
  return n.aux;
}

Var Tape::grad_reverse(Var h, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("grad_reverse: lambda must be finite and >= 0, got " +
                      std::to_string(lambda));
  }
  Node node = make(Op::kGradReverse, {h}, value(h));
  node.reversal_scale = lambda;
  return push(std::move(node));
}

Var Tape::dropout(Var h, double rate, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " +
                      std::to_string(rate));
  }
  Tensor out = value(h);
  Tensor mask(out.shape(), 1.0);
  if (mode == Mode::kTrain && rate > 0.0) {
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < out.size(); ++i) {
      mask[i] = rng_.bernoulli(rate) ? 0.0 : keep_scale;
      out[i] *= mask[i];
    }
  }
  Node node = make(Op::kDropout, {h}, std::move(out));
  node.aux = std::move(mask);
  return push(std::move(node));
}

Var Tape::embed(Var table, std::span<const std::size_t> ids) {
  const Tensor& t = value(table);
  require_rank2(t, "embed");
  if (ids.empty()) {
    throw DimensionError("embed: empty id sequence");
  }
  const std::size_t d = t.cols();
  Tensor out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= t.rows()) {
      throw DimensionError("embed: token id " + std::to_string(ids[i]) +
                           " outside vocabulary of " + std::to_string(t.rows()));
    }
    std::copy_n(t.data() + ids[i] * d, d, out.data() + i * d);
  }
  Node node = make(Op::kEmbed, {table}, std::move(out));
  node.indices.assign(ids.begin(), ids.end());
  return push(std::move(node));
}

Var Tape::conv_maxpool(Var xs, std::span<const Var> weights,
                       std::span<const Var> biases,
                       std::span<const std::size_t> widths) {
  const Tensor& x = value(xs);
  require_rank2(x, "conv_maxpool");
  if (weights.size() != widths.size() || biases.size() != widths.size() ||
      widths.empty()) {
    throw DimensionError("conv_maxpool: need one weight and bias per width");
  }
  const std::size_t n = x.rows(), d = x.cols();
  std::size_t total_maps = 0;
  for (std::size_t b = 0; b < widths.size(); ++b) {
    const Tensor& w = value(weights[b]);
    const Tensor& bias = value(biases[b]);
    require_rank2(w, "conv_maxpool");
    if (widths[b] == 0 || w.cols() != widths[b] * d) {
      throw DimensionError("conv_maxpool: filter " + shape_to_string(w.shape()) +
                           " does not match width " + std::to_string(widths[b]) +
                           " over dim " + std::to_string(d));
    }
    if (bias.shape() != Shape{1, w.rows()}) {
      throw DimensionError("conv_maxpool: bias " + shape_to_string(bias.shape()) +
                           " does not match " + std::to_string(w.rows()) +
                           " maps");
    }
    if (n < widths[b]) {
      throw DimensionError("conv_maxpool: sequence of " + std::to_string(n) +
                           " tokens is shorter than filter width " +
                           std::to_string(widths[b]));
    }
    total_maps += w.rows();
  }

  Node node;
  node.op = Op::kConvMaxPool;
  node.parents.push_back(xs.id);
  node.indices.push_back(widths.size());
  for (std::size_t b = 0; b < widths.size(); ++b) {
    node.parents.push_back(weights[b].id);
    node.parents.push_back(biases[b].id);
    node.indices.push_back(widths[b]);
  }

  Tensor out({1, total_maps});
  std::size_t unit = 0;
  for (std::size_t b = 0; b < widths.size(); ++b) {
    const Tensor& w = value(weights[b]);
    const Tensor& bias = value(biases[b]);
    const std::size_t span_len = widths[b] * d;
    const std::size_t positions = n - widths[b] + 1;
    for (std::size_t j = 0; j < w.rows(); ++j, ++unit) {
      const double* wr = w.data() + j * span_len;
      double best = 0.0;
      std::size_t best_t = 0;
      for (std::size_t t = 0; t < positions; ++t) {
        // Rows are contiguous, so a window is one contiguous slice.
        const double* window = x.data() + t * d;
        double score = bias[j];
        for (std::size_t p = 0; p < span_len; ++p) {
          score += wr[p] * window[p];
        }
        if (t == 0 || score > best) {
          best = score;
          best_t = t;
        }
      }
      out[unit] = best > 0.0 ? best : 0.0;
      node.indices.push_back(best_t);
    }
  }
  node.value = std::move(out);
  return push(std::move(node));
}

void Tape::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw DimensionError("backward: loss must be scalar, got " +
                         shape_to_string(lv.shape()));
  }
  if (!nodes_[loss.id].requires_grad) {
    return;
  }
  for (Node& n : nodes_) {
    if (n.requires_grad && n.param == nullptr) {
      n.grad.fill(0.0);
    }
  }
  if (nodes_[loss.id].param != nullptr) {
    nodes_[loss.id].param->grad[0] += 1.0;
    return;
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad) {
      backprop_node(i);
    }
  }
}

void Tape::backprop_node(std::size_t index) {
  Node& n = nodes_[index];
  const Tensor& g = n.grad;
  auto parent = [&](std::size_t k) { return n.parents[k]; };

  switch (n.op) {
    case Op::kConstant:
      return;

    case Op::kParameter:
      return;  // gradients already landed in Parameter::grad

    case Op::kMatMul: {
      const std::size_t a = parent(0), b = parent(1);
      const Tensor& x = value_of(a);
      const Tensor& y = value_of(b);
      const std::size_t m = x.rows(), k = x.cols(), cols = y.cols();
      if (needs_grad(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              acc += g.at(i, j) * y.at(p, j);
            }
            ga.at(i, p) += acc;
          }
        }
      }
      if (needs_grad(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double xv = x.at(i, p);
            for (std::size_t j = 0; j < cols; ++j) {
              gb.at(p, j) += xv * g.at(i, j);
            }
          }
        }
      }
      return;
    }

    case Op::kLinear: {
      const std::size_t a = parent(0), w_id = parent(1);
      const Tensor& x = value_of(a);
      const Tensor& w = value_of(w_id);
      const std::size_t m = x.rows(), k = x.cols(), outs = w.rows();
      if (needs_grad(a)) {
        Tensor& gx = grad_of(a);
        for (std::size_t i = 0; i < m; ++i) {
          double* gxr = gx.data() + i * k;
          for (std::size_t j = 0; j < outs; ++j) {
            const double gij = g.at(i, j);
            if (gij == 0.0) {
              continue;
            }
            const double* wr = w.data() + j * k;
            for (std::size_t p = 0; p < k; ++p) {
              gxr[p] += gij * wr[p];
            }
          }
        }
      }
      if (needs_grad(w_id)) {
        Tensor& gw = grad_of(w_id);
        for (std::size_t i = 0; i < m; ++i) {
          const double* xr = x.data() + i * k;
          for (std::size_t j = 0; j < outs; ++j) {
            const double gij = g.at(i, j);
            if (gij == 0.0) {
              continue;
            }
            double* gwr = gw.data() + j * k;
            for (std::size_t p = 0; p < k; ++p) {
              gwr[p] += gij * xr[p];
            }
          }
        }
      }
      return;
    }

    case Op::kAdd:
    case Op::kAddN: {
      for (std::size_t p : n.parents) {
        if (needs_grad(p)) {
          Tensor& gp = grad_of(p);
          for (std::size_t i = 0; i < g.size(); ++i) {
            gp[i] += g[i];
          }
        }
      }
      return;
    }

    case Op::kAddBias: {
      const std::size_t a = parent(0), b = parent(1);
      if (needs_grad(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
        }
      }
      if (needs_grad(b)) {
        Tensor& gb = grad_of(b);
        const std::size_t cols = g.cols();
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            gb[j] += g.at(i, j);
          }
        }
      }
      return;
    }

    case Op::kMul: {
      const std::size_t a = parent(0), b = parent(1);
      if (needs_grad(a)) {
        Tensor& ga = grad_of(a);
        const Tensor& y = value_of(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * y[i];
        }
      }
      if (needs_grad(b)) {
        Tensor& gb = grad_of(b);
        const Tensor& x = value_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gb[i] += g[i] * x[i];
        }
      }
      return;
    }

    case Op::kTanh: {
      Tensor& ga = grad_of(parent(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = n.value[i];
        ga[i] += g[i] * (1.0 - t * t);
      }
      return;
    }

    case Op::kSigmoid: {
      Tensor& ga = grad_of(parent(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = n.value[i];
        ga[i] += g[i] * s * (1.0 - s);
      }
      return;
    }

    case Op::kRelu: {
      Tensor& ga = grad_of(parent(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (n.value[i] > 0.0) {
          ga[i] += g[i];
        }
      }
      return;
    }

    case Op::kConcat: {
      const std::size_t a = parent(0), b = parent(1);
      const std::size_t split = value_of(a).size();
      if (needs_grad(a)) {
        Tensor& ga = grad_of(a);
        for (std::size_t i = 0; i < split; ++i) {
          ga[i] += g[i];
        }
      }
      if (needs_grad(b)) {
        Tensor& gb = grad_of(b);
        for (std::size_t i = split; i < g.size(); ++i) {
          gb[i - split] += g[i];
        }
      }
      return;
    }

    case Op::kSliceCols: {
      Tensor& ga = grad_of(parent(0));
      const std::size_t start = n.indices[0];
      for (std::size_t i = 0; i < g.rows(); ++i) {
        for (std::size_t j = 0; j < g.cols(); ++j) {
          ga.at(i, start + j) += g.at(i, j);
        }
      }
      return;
    }

    case Op::kRow: {
      Tensor& ga = grad_of(parent(0));
      const std::size_t offset = n.indices[0] * g.size();
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[offset + j] += g[j];
      }
      return;
    }

    case Op::kStackRows: {
      const std::size_t width = g.cols();
      for (std::size_t r = 0; r < n.parents.size(); ++r) {
        if (needs_grad(parent(r))) {
          Tensor& gr = grad_of(parent(r));
          for (std::size_t j = 0; j < width; ++j) {
            gr[j] += g.at(r, j);
          }
        }
      }
      return;
    }

    case Op::kSum: {
      Tensor& ga = grad_of(parent(0));
      for (double& v : ga.values()) {
        v += g[0];
      }
      return;
    }

    case Op::kScale: {
      Tensor& ga = grad_of(parent(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * n.scalar;
      }
      return;
    }

    case Op::kSoftmaxCrossEntropy: {
      Tensor& ga = grad_of(parent(0));
      const std::size_t target = n.indices[0];
      for (std::size_t i = 0; i < ga.size(); ++i) {
        const double onehot = i == target ? 1.0 : 0.0;
        ga[i] += g[0] * (n.aux[i] - onehot);
      }
      return;
    }

    case Op::kGradReverse: {
      Tensor& ga = grad_of(parent(0));
      const double factor = -*n.reversal_scale;
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += factor * g[i];
      }
      return;
    }

    case Op::kDropout: {
      Tensor& ga = grad_of(parent(0));
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * n.aux[i];
      }
      return;
    }

    case Op::kEmbed: {
      Tensor& gt = grad_of(parent(0));
      const std::size_t d = g.cols();
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        const std::size_t id = n.indices[i];
        if (id == 0) {
          continue;  // PAD
        }
        for (std::size_t j = 0; j < d; ++j) {
          gt[id * d + j] += g.at(i, j);
        }
      }
      return;
    }

    case Op::kConvMaxPool: {
      const std::size_t xs_id = parent(0);
      const Tensor& x = value_of(xs_id);
      const std::size_t d = x.cols();
      const std::size_t banks = n.indices[0];
      std::size_t unit = 0;
      for (std::size_t b = 0; b < banks; ++b) {
        const std::size_t width = n.indices[1 + b];
        const std::size_t w_id = parent(1 + 2 * b);
        const std::size_t b_id = parent(2 + 2 * b);
        const Tensor& w = value_of(w_id);
        const std::size_t span_len = width * d;
        for (std::size_t j = 0; j < w.rows(); ++j, ++unit) {
          const double gu = g[unit];
          if (n.value[unit] <= 0.0 || gu == 0.0) {
            continue;
          }
          const std::size_t t = n.indices[1 + banks + unit];
          const double* window = x.data() + t * d;
          if (needs_grad(b_id)) {
            grad_of(b_id)[j] += gu;
          }
          if (needs_grad(w_id)) {
            double* gw = grad_of(w_id).data() + j * span_len;
            for (std::size_t p = 0; p < span_len; ++p) {
              gw[p] += gu * window[p];
            }
          }
          if (needs_grad(xs_id)) {
            double* gx = grad_of(xs_id).data() + t * d;
            const double* wr = w.data() + j * span_len;
            for (std::size_t p = 0; p < span_len; ++p) {
              gx[p] += gu * wr[p];
            }
          }
        }
      }
      return;
    }
  }
}

}  // namespace veil
