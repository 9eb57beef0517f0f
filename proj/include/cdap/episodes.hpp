#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "cdap/data_model.hpp"

namespace cdap {

// One N-way K-shot task: a labeled support set and the query set to predict.
struct Episode {
  LabelSpace label_space;
  std::vector<LabeledSentence> support;
  std::vector<LabeledSentence> query;

  // Checks sentence invariants, label-space membership, and that every entity
  // class has at least one support entity.
  void validate() const;
  bool operator==(const Episode&) const = default;
};

// JSONL record: {"types": [...], "support": {"word": [[...]], "label": [[...]]},
// "query": {...}} with IO labels ("O" or a bare class name).
Episode episode_from_json_line(const std::string& line, int line_no = 0);
std::string episode_to_json_line(const Episode& episode);

// Streams episodes from a JSONL file, validating each one.
class EpisodeReader {
 public:
  explicit EpisodeReader(const std::string& path);
  std::optional<Episode> next();
  int line_no() const { return line_no_; }

 private:
  std::ifstream in_;
  std::string path_;
  int line_no_ = 0;
};

std::vector<Episode> load_episodes(const std::string& path);

enum class ShotMode { exact_k, k_to_2k };

struct SamplerOptions {
  int n_way = 5;
  int k_shot = 1;
  ShotMode mode = ShotMode::k_to_2k;
  int query_per_class = 1;
};

// Greedy N-way K-shot sampling: pick N classes, walk the shuffled corpus
// adding support sentences while a class still needs entities, then draw the
// query sentences disjointly. Entities outside the sampled classes are
// relabeled O. Deterministic per seed.
Episode sample_episode(const Corpus& corpus, const SamplerOptions& options, std::uint64_t seed);

}  // namespace cdap
