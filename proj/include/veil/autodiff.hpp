#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veil/rng.hpp"
#include "veil/tensor.hpp"

namespace veil {

// A trainable tensor together with its accumulated gradient. Gradients are
// only ever added to; the trainer zeroes them between steps.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

enum class Mode { kTrain, kEval };

enum class Op {
  kConstant,
  kParameter,
  kMatMul,
  kLinear,
  kAdd,
  kAddBias,
  kMul,
  kTanh,
  kSigmoid,
  kRelu,
  kConcat,
  kSliceCols,
  kRow,
  kStackRows,
  kSum,
  kAddN,
  kScale,
  kSoftmaxCrossEntropy,
  kGradReverse,
  kDropout,
  kEmbed,
  kConvMaxPool,
};

enum class Elementwise { kAdd, kMul, kTanh, kSigmoid, kRelu };

const char* op_name(Op op);

// Handle to a node on a Tape. Only meaningful for the tape that issued it.
struct Var {
  std::size_t id = 0;
};

struct Node {
  Op op = Op::kConstant;
  std::vector<std::size_t> parents;
  Tensor value;  // empty for parameter nodes
  Tensor grad;   // empty for parameter nodes and nodes without gradient
  // Set only on gradient-reversal nodes; holds lambda.
  std::optional<double> reversal_scale;
  bool requires_grad = false;
  Parameter* param = nullptr;

  // Op-specific payload: token ids, argmax positions, filter widths, class
  // targets, softmax probabilities, dropout masks, scale factors.
  std::vector<std::size_t> indices;
  Tensor aux;
  double scalar = 0.0;
};

// Records a computation graph in creation order, which is also a
// topological order. Parents always precede children.
class Tape {
 public:
  explicit Tape(std::uint64_t seed = 0) : rng_(seed) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Parameter& param);

  Var matmul(Var a, Var b);
  // x[m×k] · W[n×k]ᵀ -> [m×n]; weights stored output-major.
  Var linear(Var x, Var weight);
  Var add(Var a, Var b);
  Var add_bias(Var a, Var bias);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var elementwise(Elementwise kind, Var a, std::optional<Var> b = std::nullopt);

  Var concat(Var a, Var b);
  Var slice_cols(Var a, std::size_t start, std::size_t length);
  Var row(Var a, std::size_t index);
  Var stack_rows(std::span<const Var> rows);

  Var sum(Var a);
  Var add_n(std::span<const Var> terms);
  Var scale(Var a, double factor);

  // -log softmax(logits)[target] for a 1×K row.
  Var softmax_cross_entropy(Var logits, std::size_t target);
  // Probabilities computed by a softmax_cross_entropy node.
  const Tensor& softmax_of(Var loss) const;

  // Identity forward; backward hands -lambda·g to the input.
  Var grad_reverse(Var h, double lambda);
  // Inverted dropout: train mode zeroes with probability rate and scales
  // survivors by 1/(1-rate); eval mode is the identity.
  Var dropout(Var h, double rate, Mode mode);

  // Row lookup into a [V×d] table. Row 0 (PAD) never receives gradient.
  Var embed(Var table, std::span<const std::size_t> ids);

  // Valid 1-D convolution over token windows, relu, max over time, for each
  // filter bank; outputs are concatenated. weights[i] is
  // [maps_i × widths[i]·d], biases[i] is [1 × maps_i].
  Var conv_maxpool(Var xs, std::span<const Var> weights,
                   std::span<const Var> biases,
                   std::span<const std::size_t> widths);

  // Seeds d(loss)/d(loss) = 1 and propagates to every node, then adds each
  // parameter node's gradient into its Parameter.
  void backward(Var loss);

  // Parameter nodes alias the Parameter's own value and gradient storage.
  const Tensor& value(Var v) const { return value_of(v.id); }
  const Tensor& grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.param != nullptr ? n.param->grad : n.grad;
  }
  const Node& node(Var v) const { return nodes_.at(v.id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  Rng& rng() noexcept { return rng_; }

 private:
  Var push(Node node);
  Node make(Op op, std::initializer_list<Var> parents, Tensor value);
  void backprop_node(std::size_t index);
  Tensor& grad_of(std::size_t index) {
    Node& n = nodes_[index];
    return n.param != nullptr ? n.param->grad : n.grad;
  }
  const Tensor& value_of(std::size_t index) const {
    const Node& n = nodes_.at(index);
    return n.param != nullptr ? n.param->value : n.value;
  }
  bool needs_grad(std::size_t index) const {
    return nodes_[index].requires_grad;
  }

  std::vector<Node> nodes_;
  Rng rng_;
};

}  // namespace veil
