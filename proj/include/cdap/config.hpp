#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace cdap {

enum class DistanceKind { squared_euclidean, euclidean };
enum class ProviderKind { hashed, pretrained };
// Reserved for KL-family variants only; st = span teaches token,
// ts = token teaches span.
enum class ConsistencyKind { bidirectional, st, ts };
enum class ODivisionKind { boundary, esd };  // esd is a reserved hook

// Runtime configuration, read from `key = value` lines (# starts a comment).
struct Config {
  // loss weights and temperatures
  double lambda = 0.1;    // token-level loss weight
  double beta = 1.0;      // span-level loss weight
  double gamma = 0.05;    // consistency loss weight
  double temperature = 1.0;
  ConsistencyKind consistency = ConsistencyKind::bidirectional;

  // decoding
  double delta = 0.02;     // per-inconsistent-token probability penalty
  int max_span_length = 8;  // L at inference
  int train_span_cap = 8;   // 0 means unlimited during training

  // model
  int embed_dim = 64;  // d1
  int model_dim = 32;  // d
  DistanceKind distance = DistanceKind::squared_euclidean;
  bool cross_attention = true;
  bool layer_norm = true;  // false leaves only the affine gain/bias map
  bool adaptive_prototypes = true;  // false degenerates to mean (Proto) prototypes
  ODivisionKind o_division = ODivisionKind::boundary;

  // optimization
  double lr_model = 5e-4;
  double lr_embedding = 2e-5;
  double weight_decay = 0.01;
  std::int64_t warmup_steps = 1000;
  std::int64_t max_steps = 1000;
  int batch_episodes = 2;

  // data / embedding provider
  ProviderKind provider = ProviderKind::hashed;
  std::string pretrained_path;
  int query_per_class = 1;
  std::uint64_t seed = 1;

  bool operator==(const Config&) const = default;
};

Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);
std::string config_to_text(const Config& config);

// One line per key with its default and meaning, shown by the CLI help.
std::string config_keys_help();

// Flat map used to embed the model-relevant keys in a checkpoint.
std::map<std::string, std::string> config_to_meta(const Config& config);
Config config_from_meta(const std::map<std::string, std::string>& meta, Config base = {});

}  // namespace cdap
