#include "veil/layers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "veil/errors.hpp"

namespace veil {

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t({rows, cols});
  for (double& v : t.values()) {
    v = rng.uniform(-bound, bound);
  }
  return t;
}

Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor lstm_bias(std::size_t hidden) {
  Tensor b({1, 4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) {
    b[j] = 1.0;
  }
  return b;
}

Tensor embedding_uniform(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  Tensor t({vocab_size, dim});
  for (std::size_t i = dim; i < t.size(); ++i) {
    t[i] = rng.uniform(-0.25, 0.25);
  }
  return t;
}

EmbeddingTable EmbeddingTable::random(std::string name, std::size_t vocab_size,
                                      std::size_t dim, Rng& rng) {
  return {Parameter(std::move(name), embedding_uniform(vocab_size, dim, rng))};
}

Var embed(Tape& tape, EmbeddingTable& table, std::span<const std::size_t> ids) {
  return tape.embed(tape.parameter(table.matrix), ids);
}

std::size_t load_pretrained_embeddings(const std::filesystem::path& path,
                                       const Vocab& vocab,
                                       EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open embedding file " + path.string());
  }
  const std::size_t d = table.dim();
  std::string line;
  std::size_t line_no = 0;
  std::size_t replaced = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) {
      continue;
    }
    std::vector<double> row;
    std::string field;
    while (fields >> field) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (used != field.size()) {
          throw DataError("bad float '" + field + "'", line_no);
        }
      } catch (const DataError&) {
        throw;
      } catch (const std::exception&) {
        throw DataError("bad float '" + field + "'", line_no);
      }
    }
    if (row.size() != d) {
      throw DataError("embedding has " + std::to_string(row.size()) +
                          " values, table dim is " + std::to_string(d),
                      line_no);
    }
    const auto id = vocab.find(token);
    if (!id || *id == Vocab::kPad) {
      continue;
    }
    std::copy(row.begin(), row.end(), table.matrix.value.data() + *id * d);
    ++replaced;
  }
  return replaced;
}

LstmParams LstmParams::init(const std::string& prefix, std::size_t input_dim,
                            std::size_t hidden_dim, Rng& rng) {
  return {Parameter(prefix + ".W", glorot_uniform(4 * hidden_dim, input_dim, rng)),
          Parameter(prefix + ".U", glorot_uniform(4 * hidden_dim, hidden_dim, rng)),
          Parameter(prefix + ".b", lstm_bias(hidden_dim))};
}

std::vector<Parameter*> LstmParams::parameters() {
  return {&input_weights, &recurrent_weights, &bias};
}

BoundLstm bind(Tape& tape, LstmParams& params) {
  return {tape.parameter(params.input_weights),
          tape.parameter(params.recurrent_weights), tape.parameter(params.bias),
          params.hidden_dim()};
}

LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Var x, Var h_prev,
                    Var c_prev) {
  const std::size_t hd = lstm.hidden_dim;
  const Var pre = tape.add_bias(
      tape.add(tape.linear(x, lstm.input_weights),
               tape.linear(h_prev, lstm.recurrent_weights)),
      lstm.bias);
  const Var input_gate = tape.sigmoid(tape.slice_cols(pre, 0, hd));
  const Var forget_gate = tape.sigmoid(tape.slice_cols(pre, hd, hd));
  const Var candidate = tape.tanh(tape.slice_cols(pre, 2 * hd, hd));
  const Var output_gate = tape.sigmoid(tape.slice_cols(pre, 3 * hd, hd));
  const Var c = tape.add(tape.mul(forget_gate, c_prev),
                         tape.mul(input_gate, candidate));
  const Var h = tape.mul(output_gate, tape.tanh(c));
  return {h, c};
}

LstmState lstm_step(Tape& tape, LstmParams& params, Var x, Var h_prev,
                    Var c_prev) {
  const Tensor& xv = tape.value(x);
  const Tensor& hv = tape.value(h_prev);
  const Tensor& cv = tape.value(c_prev);
  const std::size_t hd = params.hidden_dim();
  if (xv.shape() != Shape{1, params.input_dim()} || hv.shape() != Shape{1, hd} ||
      cv.shape() != Shape{1, hd}) {
    throw DimensionError("lstm_step: x " + shape_to_string(xv.shape()) + ", h " +
                         shape_to_string(hv.shape()) + ", c " +
                         shape_to_string(cv.shape()) + " do not fit d_in=" +
                         std::to_string(params.input_dim()) +
                         ", d_h=" + std::to_string(hd));
  }
  return lstm_step(tape, bind(tape, params), x, h_prev, c_prev);
}

BiLstmOutput bilstm_encode(Tape& tape, LstmParams& forward,
                           LstmParams& backward, Var xs) {
  const Tensor& x = tape.value(xs);
  if (x.rank() != 2 || x.rows() == 0) {
    throw DimensionError("bilstm_encode: empty sequence");
  }
  if (x.cols() != forward.input_dim() || x.cols() != backward.input_dim()) {
    throw DimensionError("bilstm_encode: input " + shape_to_string(x.shape()) +
                         " does not match LSTM input dim");
  }
  const std::size_t n = x.rows();
  const BoundLstm fwd = bind(tape, forward);
  const BoundLstm bwd = bind(tape, backward);

  std::vector<Var> steps(n);
  for (std::size_t t = 0; t < n; ++t) {
    steps[t] = tape.row(xs, t);
  }

  std::vector<Var> fwd_h(n), bwd_h(n);
  LstmState state{tape.constant(Tensor({1, fwd.hidden_dim})),
                  tape.constant(Tensor({1, fwd.hidden_dim}))};
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_step(tape, fwd, steps[t], state.h, state.c);
    fwd_h[t] = state.h;
  }
  state = {tape.constant(Tensor({1, bwd.hidden_dim})),
           tape.constant(Tensor({1, bwd.hidden_dim}))};
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_step(tape, bwd, steps[t], state.h, state.c);
    bwd_h[t] = state.h;
  }

  std::vector<Var> rows(n);
  for (std::size_t t = 0; t < n; ++t) {
    rows[t] = tape.concat(fwd_h[t], bwd_h[t]);
  }
  return {tape.stack_rows(rows), tape.concat(fwd_h[n - 1], bwd_h[0])};
}

ConvBank ConvBank::init(const std::string& prefix, std::size_t input_dim,
                        std::vector<std::size_t> widths, std::size_t maps,
                        Rng& rng) {
  if (widths.empty() || maps == 0) {
    throw ConfigError("conv bank needs at least one width and one map");
  }
  ConvBank bank;
  bank.widths = std::move(widths);
  for (std::size_t w : bank.widths) {
    if (w == 0) {
      throw ConfigError("filter width must be positive");
    }
    const std::string name = prefix + ".w" + std::to_string(w);
    bank.weights.emplace_back(name + ".W", glorot_uniform(maps, w * input_dim, rng));
    bank.biases.emplace_back(name + ".b", zeros(1, maps));
  }
  return bank;
}

std::size_t ConvBank::max_width() const {
  std::size_t m = 0;
  for (std::size_t w : widths) {
    m = std::max(m, w);
  }
  return m;
}

std::size_t ConvBank::output_dim() const {
  std::size_t total = 0;
  for (const auto& w : weights) {
    total += w.value.rows();
  }
  return total;
}

std::vector<Parameter*> ConvBank::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.push_back(&weights[i]);
    out.push_back(&biases[i]);
  }
  return out;
}

Var conv_maxpool(Tape& tape, ConvBank& bank, Var xs) {
  std::vector<Var> weights, biases;
  for (std::size_t i = 0; i < bank.widths.size(); ++i) {
    weights.push_back(tape.parameter(bank.weights[i]));
    biases.push_back(tape.parameter(bank.biases[i]));
  }
  return tape.conv_maxpool(xs, weights, biases, bank.widths);
}

FeedForwardHead FeedForwardHead::init(const std::string& prefix,
                                      std::size_t input_dim,
                                      std::size_t hidden_dim,
                                      std::size_t output_dim, Rng& rng) {
  FeedForwardHead head;
  head.hidden_dim = hidden_dim;
  std::size_t last = input_dim;
  if (hidden_dim > 0) {
    head.hidden_weights =
        Parameter(prefix + ".W1", glorot_uniform(hidden_dim, input_dim, rng));
    head.hidden_bias = Parameter(prefix + ".b1", zeros(1, hidden_dim));
    last = hidden_dim;
  }
  head.output_weights =
      Parameter(prefix + ".W2", glorot_uniform(output_dim, last, rng));
  head.output_bias = Parameter(prefix + ".b2", zeros(1, output_dim));
  return head;
}

std::size_t FeedForwardHead::input_dim() const {
  return hidden_dim > 0 ? hidden_weights.value.cols()
                        : output_weights.value.cols();
}

std::vector<Parameter*> FeedForwardHead::parameters() {
  if (hidden_dim > 0) {
    return {&hidden_weights, &hidden_bias, &output_weights, &output_bias};
  }
  return {&output_weights, &output_bias};
}

Var feedforward(Tape& tape, FeedForwardHead& head, Var h) {
  const Tensor& hv = tape.value(h);
  if (hv.rank() != 2 || hv.cols() != head.input_dim()) {
    throw DimensionError("feedforward: input " + shape_to_string(hv.shape()) +
                         " does not match head input dim " +
                         std::to_string(head.input_dim()));
  }
  Var x = h;
  if (head.hidden_dim > 0) {
    x = tape.relu(tape.add_bias(tape.linear(x, tape.parameter(head.hidden_weights)),
                                tape.parameter(head.hidden_bias)));
  }
  return tape.add_bias(tape.linear(x, tape.parameter(head.output_weights)),
                       tape.parameter(head.output_bias));
}

}  // namespace veil
