#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qas {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Fixed-width feature vector for one text span. Always finite.
using EmbeddingVector = Eigen::VectorXd;

enum class Pooling { Mean, FirstToken };

struct EncoderConfig {
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int vocab_size = 4096;
  int max_tokens = 256;
  std::uint64_t seed = 0x5eed;
  Pooling pooling = Pooling::Mean;

  int d_k() const { return d_model / n_heads; }
  // Throws InvalidArgument unless every size is positive and n_heads divides d_model.
  void validate() const;
};

// Parameters of one encoder layer. Projections act on row vectors (x * W).
struct LayerWeights {
  std::vector<Matrix> query;  // per head, d_model x d_k
  std::vector<Matrix> key;    // per head, d_model x d_k
  std::vector<Matrix> value;  // per head, d_model x d_k
  Matrix output;              // d_model x d_model
  Matrix ffn_in;              // d_model x d_ff
  Vector ffn_in_bias;         // d_ff
  Matrix ffn_out;             // d_ff x d_model
  Vector ffn_out_bias;        // d_model
};

struct AttentionWeights {
  std::vector<LayerWeights> layers;

  // Seeded Xavier-uniform weights for every layer of `config`.
  static AttentionWeights seeded(const EncoderConfig& config);
};

// Row-wise numerically stable softmax.
Matrix softmax_rows(const Matrix& scores);

// softmax(Q K^T / sqrt(d_k)) V. Throws ShapeMismatch.
Matrix scaled_dot_product_attention(const Matrix& q, const Matrix& k, const Matrix& v);

// Concat(H_1..H_h) W^O with H_i = attention(X W^Q_i, X W^K_i, X W^V_i).
Matrix multi_head_attention(const Matrix& x, const AttentionWeights& weights, std::size_t layer);

// ReLU(x W_1 + b_1) W_2 + b_2 for a single position.
Vector position_wise_ffn(const Vector& x, const AttentionWeights& weights, std::size_t layer);

// Normalizes each row to zero mean and unit variance (epsilon 1e-5).
Matrix layer_norm_rows(const Matrix& x);

// Sinusoidal position encodings, n x d_model.
Matrix positional_encoding(int n, int d_model);

// Lowercases and splits on non-alphanumerics. Non-ASCII code points count as
// alphanumeric except for common punctuation blocks.
std::vector<std::string> tokenize(std::string_view text);

// FNV-1a 64-bit.
std::uint64_t stable_hash(std::string_view token);

// Deterministic mini transformer encoder with fixed seeded weights.
class Encoder {
 public:
  explicit Encoder(EncoderConfig config);

  const EncoderConfig& config() const { return config_; }
  const AttentionWeights& weights() const { return weights_; }
  const Matrix& token_table() const { return token_table_; }

  std::vector<int> token_ids(std::string_view text) const;

  // Encoder stack output (n x d_model) for one packed chunk of token ids.
  Matrix forward(const std::vector<int>& ids) const;

  // Pooled embedding; texts longer than max_tokens are chunked and the chunk
  // vectors averaged. Throws EmptyText when the text has no tokens.
  EmbeddingVector encode(std::string_view text) const;

 private:
  EncoderConfig config_;
  AttentionWeights weights_;
  Matrix token_table_;  // vocab_size x d_model
};

EmbeddingVector encode(std::string_view text, const EncoderConfig& config);

}  // namespace qas
