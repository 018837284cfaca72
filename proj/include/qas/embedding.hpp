#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "qas/encoder.hpp"

namespace qas {

// Uniform interface over embedding sources. Implementations are thread-safe.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string name() const = 0;

  // One vector per text, same order. A text without any token yields the zero
  // vector so downstream scoring can apply its zero-norm guard.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;
};

class BuiltinBackend final : public EmbeddingBackend {
 public:
  explicit BuiltinBackend(EncoderConfig config = {});

  std::size_t dimension() const override;
  std::string name() const override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

  const Encoder& encoder() const { return encoder_; }

 private:
  Encoder encoder_;
};

struct BridgeHealth {
  std::string status;
  std::size_t dim = 0;
  std::string model;
};

// GET /health on a bridge endpoint such as "http://127.0.0.1:8008".
BridgeHealth bridge_health(const std::string& endpoint, std::chrono::milliseconds timeout);

// POST /embed in batches of at most `batch_cap`. Throws BridgeUnreachable,
// BridgeProtocolError or DimensionMismatch. An empty input makes no request.
std::vector<EmbeddingVector> embed_via_bridge(const std::vector<std::string>& texts,
                                              const std::string& endpoint,
                                              std::chrono::milliseconds timeout,
                                              std::size_t batch_cap = 64);

class BridgeBackend final : public EmbeddingBackend {
 public:
  // Queries /health once to learn the dimension.
  BridgeBackend(std::string endpoint, std::chrono::milliseconds timeout);

  std::size_t dimension() const override { return health_.dim; }
  std::string name() const override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  BridgeHealth health_;
};

}  // namespace qas
