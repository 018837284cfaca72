#include "qas/embedding.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "qas/common.hpp"

namespace qas {

BuiltinBackend::BuiltinBackend(EncoderConfig config) : encoder_(config) {}

std::size_t BuiltinBackend::dimension() const {
  return static_cast<std::size_t>(encoder_.config().d_model);
}

std::string BuiltinBackend::name() const {
  const auto& c = encoder_.config();
  return "builtin(d_model=" + std::to_string(c.d_model) + ",heads=" + std::to_string(c.n_heads) +
         ",layers=" + std::to_string(c.n_layers) + ",seed=" + std::to_string(c.seed) + ")";
}

std::vector<EmbeddingVector> BuiltinBackend::embed(const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    if (encoder_.token_ids(text).empty()) {
      out.push_back(EmbeddingVector::Zero(static_cast<Eigen::Index>(dimension())));
    } else {
      out.push_back(encoder_.encode(text));
    }
  }
  return out;
}

namespace {

std::unique_ptr<httplib::Client> make_client(const std::string& endpoint,
                                             std::chrono::milliseconds timeout) {
  auto client = std::make_unique<httplib::Client>(endpoint);
  if (!client->is_valid()) {
    throw Error(ErrorCode::BridgeUnreachable, "invalid bridge endpoint '" + endpoint + "'");
  }
  client->set_connection_timeout(timeout);
  client->set_read_timeout(timeout);
  client->set_write_timeout(timeout);
  return client;
}

nlohmann::json parse_body(const std::string& body, const char* what) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorCode::BridgeProtocolError, std::string(what) + " response is not JSON");
  }
}

}  // namespace

BridgeHealth bridge_health(const std::string& endpoint, std::chrono::milliseconds timeout) {
  auto client = make_client(endpoint, timeout);
  auto res = client->Get("/health");
  if (!res) {
    throw Error(ErrorCode::BridgeUnreachable,
                "GET /health failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BridgeProtocolError, "GET /health returned " + std::to_string(res->status));
  }
  const auto doc = parse_body(res->body, "/health");
  if (!doc.is_object() || !doc.contains("status") || !doc["status"].is_string() ||
      !doc.contains("dim") || !doc["dim"].is_number_unsigned() || doc["dim"].get<std::size_t>() == 0) {
    throw Error(ErrorCode::BridgeProtocolError, "/health response does not match schema");
  }
  BridgeHealth health;
  health.status = doc["status"].get<std::string>();
  health.dim = doc["dim"].get<std::size_t>();
  if (doc.contains("model") && doc["model"].is_string()) health.model = doc["model"].get<std::string>();
  if (health.status != "ok") {
    throw Error(ErrorCode::BridgeProtocolError, "bridge status is '" + health.status + "'");
  }
  return health;
}

namespace {

std::vector<EmbeddingVector> post_batch(httplib::Client& client,
                                        const std::vector<std::string>& texts,
                                        std::size_t expected_dim) {
  nlohmann::json body;
  body["texts"] = texts;
  auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::BridgeUnreachable, "POST /embed failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::BridgeProtocolError, "POST /embed returned " + std::to_string(res->status));
  }
  const auto doc = parse_body(res->body, "/embed");
  if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array() ||
      !doc.contains("dim") || !doc["dim"].is_number_unsigned()) {
    throw Error(ErrorCode::BridgeProtocolError, "/embed response does not match schema");
  }
  const auto dim = doc["dim"].get<std::size_t>();
  if (dim != expected_dim) {
    throw Error(ErrorCode::DimensionMismatch, "/embed dim " + std::to_string(dim) +
                                                  " differs from declared " + std::to_string(expected_dim));
  }
  const auto& vectors = doc["vectors"];
  if (vectors.size() != texts.size()) {
    throw Error(ErrorCode::BridgeProtocolError, "/embed returned " + std::to_string(vectors.size()) +
                                                    " vectors for " + std::to_string(texts.size()) + " texts");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (!v.is_array()) throw Error(ErrorCode::BridgeProtocolError, "vector is not an array");
    if (v.size() != expected_dim) {
      throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(v.size()) +
                                                    ", expected " + std::to_string(expected_dim));
    }
    EmbeddingVector e(static_cast<Eigen::Index>(expected_dim));
    for (std::size_t i = 0; i < expected_dim; ++i) {
      if (!v[i].is_number()) throw Error(ErrorCode::BridgeProtocolError, "non-numeric vector entry");
      e(static_cast<Eigen::Index>(i)) = v[i].get<double>();
      if (!std::isfinite(e(static_cast<Eigen::Index>(i)))) {
        throw Error(ErrorCode::BridgeProtocolError, "non-finite vector entry");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> embed_via_bridge(const std::vector<std::string>& texts,
                                              const std::string& endpoint,
                                              std::chrono::milliseconds timeout,
                                              std::size_t batch_cap) {
  if (texts.empty()) return {};
  if (batch_cap == 0) batch_cap = 1;
  const BridgeHealth health = bridge_health(endpoint, timeout);
  auto client = make_client(endpoint, timeout);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_cap) {
    const std::vector<std::string> batch(
        texts.begin() + static_cast<std::ptrdiff_t>(start),
        texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), start + batch_cap)));
    auto vectors = post_batch(*client, batch, health.dim);
    for (auto& v : vectors) out.push_back(std::move(v));
  }
  return out;
}

BridgeBackend::BridgeBackend(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout), health_(bridge_health(endpoint_, timeout_)) {}

std::string BridgeBackend::name() const {
  return "bridge(" + endpoint_ + ",model=" + health_.model + ",dim=" + std::to_string(health_.dim) + ")";
}

std::vector<EmbeddingVector> BridgeBackend::embed(const std::vector<std::string>& texts) const {
  // The bridge rejects empty strings; those positions get the zero vector.
  std::vector<std::string> sendable;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!trim(texts[i]).empty()) {
      sendable.push_back(texts[i]);
      positions.push_back(i);
    }
  }
  std::vector<EmbeddingVector> out(texts.size(),
                                   EmbeddingVector::Zero(static_cast<Eigen::Index>(health_.dim)));
  auto vectors = embed_via_bridge(sendable, endpoint_, timeout_);
  for (std::size_t k = 0; k < positions.size(); ++k) out[positions[k]] = std::move(vectors[k]);
  return out;
}

}  // namespace qas
