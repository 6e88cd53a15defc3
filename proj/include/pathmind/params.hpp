#pragma once
// Named parameter store with seeded lazy initialization and a versioned
// JSON checkpoint format (base64 little-endian float64 payloads).
//
// Initial values depend only on (store seed, parameter name), never on
// creation order, so lazily created embeddings are reproducible.

#include <cstring>
#include <map>
#include <string>
#include <vector>

#include "pathmind/tensor.hpp"
#include "pathmind/util.hpp"

namespace pathmind {

enum class InitKind {
  kZero,
  kEmbedding,  // normal(0,1) * 0.1
  kMatrix,     // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), fan_in = last dim
};

constexpr int kCheckpointVersion = 1;

class ParamStore {
 public:
  explicit ParamStore(uint64_t seed = 0) : seed_(seed) {}

  uint64_t seed() const { return seed_; }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  // Fetch a parameter, creating and seeding it on first sight.
  Tensor& get_or_create(const std::string& name, const std::vector<size_t>& shape,
                        InitKind init) {
    auto it = params_.find(name);
    if (it != params_.end()) {
      if (it->second.shape != shape)
        throw Error("param " + name + ": shape mismatch " + it->second.shape_str() +
                    " vs requested " + Tensor(shape).shape_str());
      return it->second;
    }
    Tensor t(shape);
    Rng rng = seeded_rng(seed_, name);
    switch (init) {
      case InitKind::kZero:
        break;
      case InitKind::kEmbedding:
        for (double& v : t.data) v = rng.normal() * 0.1;
        break;
      case InitKind::kMatrix: {
        double bound = 1.0 / std::sqrt(double(shape.back()));
        for (double& v : t.data) v = rng.uniform(-bound, bound);
        break;
      }
    }
    grads_.emplace(name, Tensor(shape));
    return params_.emplace(name, std::move(t)).first->second;
  }

  const Tensor& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("param not found: " + name);
    return it->second;
  }

  Tensor& grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw Error("grad not found: " + name);
    return it->second;
  }

  const Tensor& grad(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw Error("grad not found: " + name);
    return it->second;
  }

  void zero_grads() {
    for (auto& [name, g] : grads_) std::fill(g.data.begin(), g.data.end(), 0.0);
    has_grads_ = false;
  }

  void scale_grads(double c) {
    for (auto& [name, g] : grads_)
      for (double& v : g.data) v *= c;
  }

  // Adds another store's gradients; used for deterministic batch reduction.
  void accumulate_grads_from(const ParamStore& other) {
    for (const auto& [name, g] : other.grads_) {
      auto it = grads_.find(name);
      if (it == grads_.end()) {
        // parameter created on a worker; adopt value and gradient
        params_.emplace(name, other.get(name));
        grads_.emplace(name, g);
      } else {
        for (size_t i = 0; i < g.size(); ++i) it->second.data[i] += g.data[i];
      }
    }
    has_grads_ = has_grads_ || other.has_grads_;
  }

  void mark_has_grads() { has_grads_ = true; }
  bool has_grads() const { return has_grads_; }

  // Sorted name order: iteration is deterministic.
  const std::map<std::string, Tensor>& parameters() const { return params_; }
  std::map<std::string, Tensor>& parameters() { return params_; }

  size_t total_values() const {
    size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  // --- checkpoint I/O ------------------------------------------------------

  json to_checkpoint(const json& dims) const {
    json params = json::object();
    for (const auto& [name, t] : params_) {
      std::vector<unsigned char> bytes(t.size() * sizeof(double));
      for (size_t i = 0; i < t.size(); ++i) {
        double v = t.data[i];
        unsigned char le[sizeof(double)];
        std::memcpy(le, &v, sizeof(double));  // little-endian on all targets here
        std::memcpy(&bytes[i * sizeof(double)], le, sizeof(double));
      }
      params[name] = {{"shape", t.shape}, {"data", base64_encode(bytes.data(), bytes.size())}};
    }
    return json{{"version", kCheckpointVersion},
                {"dims", dims},
                {"seed", seed_},
                {"parameters", params}};
  }

  static ParamStore from_checkpoint(const json& ckpt, json* dims_out = nullptr) {
    if (!ckpt.contains("version") || ckpt["version"].get<int>() != kCheckpointVersion)
      throw Error("checkpoint: unsupported version");
    ParamStore store(ckpt.value("seed", uint64_t(0)));
    if (dims_out && ckpt.contains("dims")) *dims_out = ckpt["dims"];
    for (const auto& [name, entry] : ckpt.at("parameters").items()) {
      std::vector<size_t> shape = entry.at("shape").get<std::vector<size_t>>();
      std::vector<unsigned char> bytes = base64_decode(entry.at("data").get<std::string>());
      if (bytes.size() != Tensor::numel(shape) * sizeof(double))
        throw Error("checkpoint: payload size mismatch for " + name);
      Tensor t(shape);
      for (size_t i = 0; i < t.size(); ++i)
        std::memcpy(&t.data[i], &bytes[i * sizeof(double)], sizeof(double));
      store.grads_.emplace(name, Tensor(shape));
      store.params_.emplace(name, std::move(t));
    }
    return store;
  }

  void save(const std::string& path, const json& dims) const {
    write_file(path, to_checkpoint(dims).dump(2) + "\n");
  }

  static ParamStore load(const std::string& path, json* dims_out = nullptr) {
    return from_checkpoint(json::parse(read_file(path)), dims_out);
  }

 private:
  uint64_t seed_;
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> grads_;
  bool has_grads_ = false;
};

}  // namespace pathmind
