#include "qas/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "qas/common.hpp"

namespace qas {

void EncoderConfig::validate() const {
  if (d_model <= 0 || n_heads <= 0 || n_layers <= 0 || d_ff <= 0 || vocab_size <= 0 ||
      max_tokens <= 0) {
    throw Error(ErrorCode::InvalidArgument, "encoder sizes must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::InvalidArgument, "n_heads must divide d_model");
  }
}

namespace {

class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

  // Portable uniform draw in [-limit, limit).
  double next(double limit) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * limit;
  }

  Matrix matrix(Eigen::Index rows, Eigen::Index cols, double limit) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = next(limit);
    }
    return m;
  }

  Matrix xavier(Eigen::Index rows, Eigen::Index cols) {
    return matrix(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
  }

 private:
  std::mt19937_64 engine_;
};

constexpr double kLayerNormEps = 1e-5;
constexpr std::uint64_t kTokenTableStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

AttentionWeights AttentionWeights::seeded(const EncoderConfig& config) {
  config.validate();
  UniformSource rng(config.seed);
  const int d = config.d_model;
  const int dk = config.d_k();
  AttentionWeights w;
  w.layers.resize(static_cast<std::size_t>(config.n_layers));
  for (auto& layer : w.layers) {
    for (int h = 0; h < config.n_heads; ++h) {
      layer.query.push_back(rng.xavier(d, dk));
      layer.key.push_back(rng.xavier(d, dk));
      layer.value.push_back(rng.xavier(d, dk));
    }
    layer.output = rng.xavier(d, d);
    layer.ffn_in = rng.xavier(d, config.d_ff);
    layer.ffn_in_bias = rng.matrix(config.d_ff, 1, 0.1);
    layer.ffn_out = rng.xavier(config.d_ff, d);
    layer.ffn_out_bias = rng.matrix(d, 1, 0.1);
  }
  return w;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double peak = scores.row(r).maxCoeff();
    double total = 0.0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      out(r, c) = std::exp(scores(r, c) - peak);
      total += out(r, c);
    }
    out.row(r) /= total;
  }
  return out;
}

Matrix scaled_dot_product_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (q.cols() < 1 || q.cols() != k.cols() || k.rows() != v.rows() || q.rows() < 1 ||
      k.rows() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "attention operands have inconsistent shapes");
  }
  const Matrix scores = (q * k.transpose()) / std::sqrt(static_cast<double>(k.cols()));
  return softmax_rows(scores) * v;
}

Matrix multi_head_attention(const Matrix& x, const AttentionWeights& weights, std::size_t layer) {
  if (layer >= weights.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "layer index out of range");
  }
  const LayerWeights& lw = weights.layers[layer];
  if (lw.query.empty() || x.cols() != lw.output.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "input width does not match d_model");
  }
  const Eigen::Index dk = lw.query.front().cols();
  Matrix concat(x.rows(), dk * static_cast<Eigen::Index>(lw.query.size()));
  for (std::size_t h = 0; h < lw.query.size(); ++h) {
    concat.middleCols(static_cast<Eigen::Index>(h) * dk, dk) =
        scaled_dot_product_attention(x * lw.query[h], x * lw.key[h], x * lw.value[h]);
  }
  return concat * lw.output;
}

Vector position_wise_ffn(const Vector& x, const AttentionWeights& weights, std::size_t layer) {
  if (layer >= weights.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "layer index out of range");
  }
  const LayerWeights& lw = weights.layers[layer];
  if (x.size() != lw.ffn_in.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "FFN input width does not match d_model");
  }
  const Vector hidden = (lw.ffn_in.transpose() * x + lw.ffn_in_bias).cwiseMax(0.0);
  return lw.ffn_out.transpose() * hidden + lw.ffn_out_bias;
}

Matrix layer_norm_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const double width = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / width;
    const double var = (x.row(r).array() - mean).square().sum() / width;
    out.row(r) = (x.row(r).array() - mean) / std::sqrt(var + kLayerNormEps);
  }
  return out;
}

Matrix positional_encoding(int n, int d_model) {
  Matrix pe(n, d_model);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / d_model;
      const double angle = pos / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

namespace {

bool is_separator(std::uint32_t cp) {
  if (cp < 0x80) return !std::isalnum(static_cast<int>(cp));
  return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x20A0 && cp <= 0x20CF) ||
         (cp >= 0x2190 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F) ||
         (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF00 && cp <= 0xFF0F);
}

void append_lower(std::string& out, std::uint32_t cp, std::string_view raw) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
    return;
  }
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
    const std::uint32_t lower = cp + 0x20;
    out.push_back(static_cast<char>(0xC0 | (lower >> 6)));
    out.push_back(static_cast<char>(0x80 | (lower & 0x3F)));
    return;
  }
  out.append(raw);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    std::uint32_t cp = c;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1F;
    }
    if (i + len > text.size()) len = text.size() - i;
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    }
    if (is_separator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      append_lower(current, cp, text.substr(i, len));
    }
    i += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t stable_hash(std::string_view token) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : token) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

Encoder::Encoder(EncoderConfig config)
    : config_(config), weights_(AttentionWeights::seeded(config)) {
  UniformSource rng(config_.seed ^ kTokenTableStream);
  token_table_ = rng.matrix(config_.vocab_size, config_.d_model, std::sqrt(3.0));
}

std::vector<int> Encoder::token_ids(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& token : tokenize(text)) {
    ids.push_back(static_cast<int>(stable_hash(token) % static_cast<std::uint64_t>(config_.vocab_size)));
  }
  return ids;
}

Matrix Encoder::forward(const std::vector<int>& ids) const {
  const int n = static_cast<int>(ids.size());
  // Token embeddings are scaled by sqrt(d_model) so word identity outweighs position.
  const double scale = std::sqrt(static_cast<double>(config_.d_model));
  Matrix x = positional_encoding(n, config_.d_model);
  for (int p = 0; p < n; ++p) x.row(p) += scale * token_table_.row(ids[static_cast<std::size_t>(p)]);
  for (std::size_t layer = 0; layer < weights_.layers.size(); ++layer) {
    x = layer_norm_rows(x + multi_head_attention(x, weights_, layer));
    Matrix ffn(x.rows(), x.cols());
    for (Eigen::Index p = 0; p < x.rows(); ++p) {
      ffn.row(p) = position_wise_ffn(x.row(p).transpose(), weights_, layer).transpose();
    }
    x = layer_norm_rows(x + ffn);
  }
  return x;
}

EmbeddingVector Encoder::encode(std::string_view text) const {
  const std::vector<int> ids = token_ids(text);
  if (ids.empty()) throw Error(ErrorCode::EmptyText, "text has no tokens");
  const std::size_t chunk = static_cast<std::size_t>(config_.max_tokens);
  EmbeddingVector total = EmbeddingVector::Zero(config_.d_model);
  std::size_t chunks = 0;
  for (std::size_t start = 0; start < ids.size(); start += chunk) {
    const std::vector<int> piece(ids.begin() + static_cast<std::ptrdiff_t>(start),
                                 ids.begin() + static_cast<std::ptrdiff_t>(std::min(ids.size(), start + chunk)));
    const Matrix out = forward(piece);
    if (config_.pooling == Pooling::FirstToken) {
      total += out.row(0).transpose();
    } else {
      total += out.colwise().mean().transpose();
    }
    ++chunks;
  }
  return total / static_cast<double>(chunks);
}

EmbeddingVector encode(std::string_view text, const EncoderConfig& config) {
  return Encoder(config).encode(text);
}

}  // namespace qas
