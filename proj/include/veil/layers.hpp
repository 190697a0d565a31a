#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "veil/autodiff.hpp"
#include "veil/rng.hpp"
#include "veil/vocab.hpp"

namespace veil {

// ---------------------------------------------------------------------------
// Initialisers
// ---------------------------------------------------------------------------

// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))) for an
// output-major [rows=fan_out × cols=fan_in] matrix.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);
Tensor zeros(std::size_t rows, std::size_t cols);
// Zero bias of width 4·hidden with the forget-gate slice set to 1.
Tensor lstm_bias(std::size_t hidden);
// U(-0.25, 0.25) rows, except row 0 (PAD) which is all zero.
Tensor embedding_uniform(std::size_t vocab_size, std::size_t dim, Rng& rng);

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingTable {
  Parameter matrix;  // [V × d]

  static EmbeddingTable random(std::string name, std::size_t vocab_size,
                               std::size_t dim, Rng& rng);

  std::size_t vocab_size() const { return matrix.value.rows(); }
  std::size_t dim() const { return matrix.value.cols(); }
};

Var embed(Tape& tape, EmbeddingTable& table, std::span<const std::size_t> ids);

// Overwrites rows of `table` for tokens found in a whitespace-separated
// "token v1 ... vd" file. Returns the number of vocabulary rows replaced.
// The PAD row is never touched.
std::size_t load_pretrained_embeddings(const std::filesystem::path& path,
                                       const Vocab& vocab,
                                       EmbeddingTable& table);

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

// Gate order along the 4·hidden axis: input, forget, cell, output.
struct LstmParams {
  Parameter input_weights;      // [4h × d_in]
  Parameter recurrent_weights;  // [4h × h]
  Parameter bias;               // [1 × 4h]

  static LstmParams init(const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim, Rng& rng);

  std::size_t input_dim() const { return input_weights.value.cols(); }
  std::size_t hidden_dim() const { return recurrent_weights.value.cols(); }
  std::vector<Parameter*> parameters();
};

// Parameter nodes registered once per tape and reused across time steps.
struct BoundLstm {
  Var input_weights;
  Var recurrent_weights;
  Var bias;
  std::size_t hidden_dim = 0;
};

BoundLstm bind(Tape& tape, LstmParams& params);

struct LstmState {
  Var h;
  Var c;
};

LstmState lstm_step(Tape& tape, const BoundLstm& lstm, Var x, Var h_prev,
                    Var c_prev);
LstmState lstm_step(Tape& tape, LstmParams& params, Var x, Var h_prev,
                    Var c_prev);

struct BiLstmOutput {
  Var per_token;  // [n × 2h], row i = [h_i; h'_i]
  Var sentence;   // [1 × 2h] = [h_n; h'_1]
};

BiLstmOutput bilstm_encode(Tape& tape, LstmParams& forward,
                           LstmParams& backward, Var xs);

// ---------------------------------------------------------------------------
// Convolution + max-over-time pooling
// ---------------------------------------------------------------------------

struct ConvBank {
  std::vector<std::size_t> widths;
  std::vector<Parameter> weights;  // [maps × width·d] per width
  std::vector<Parameter> biases;   // [1 × maps] per width

  static ConvBank init(const std::string& prefix, std::size_t input_dim,
                       std::vector<std::size_t> widths, std::size_t maps,
                       Rng& rng);

  std::size_t max_width() const;
  std::size_t output_dim() const;
  std::vector<Parameter*> parameters();
};

Var conv_maxpool(Tape& tape, ConvBank& bank, Var xs);

// ---------------------------------------------------------------------------
// Feed-forward head
// ---------------------------------------------------------------------------

// out = W2·relu(W1·h + b1) + b2, or out = W2·h + b2 when hidden_dim == 0.
struct FeedForwardHead {
  std::size_t hidden_dim = 0;
  Parameter hidden_weights;  // [hidden × in], unused when hidden_dim == 0
  Parameter hidden_bias;     // [1 × hidden]
  Parameter output_weights;  // [out × (hidden or in)]
  Parameter output_bias;     // [1 × out]

  static FeedForwardHead init(const std::string& prefix, std::size_t input_dim,
                              std::size_t hidden_dim, std::size_t output_dim,
                              Rng& rng);

  std::size_t input_dim() const;
  std::size_t output_dim() const { return output_weights.value.rows(); }
  std::vector<Parameter*> parameters();
};

Var feedforward(Tape& tape, FeedForwardHead& head, Var h);

}  // namespace veil
