#include "cdap/episodes.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "cdap/rng.hpp"

namespace cdap {

namespace {

using ordered_json = nlohmann::ordered_json;

void check_membership(const LabeledSentence& s, const LabelSpace& space, const char* which) {
  s.validate(space.size());
  (void)which;
}

LabeledSentence sentence_from_json(const ordered_json& words, const ordered_json& labels,
                                   const LabelSpace& space, int line_no) {
  if (!words.is_array() || !labels.is_array())
    throw ParseError("word/label must be arrays", line_no);
  if (words.size() != labels.size())
    throw ValidationError("word/label length mismatch (line " + std::to_string(line_no) + ")");
  LabeledSentence s;
  std::vector<int> ids;
  for (size_t i = 0; i < words.size(); ++i) {
    if (!words[i].is_string() || !labels[i].is_string())
      throw ParseError("word/label entries must be strings", line_no);
    s.tokens.push_back(words[i].get<std::string>());
    std::string label = labels[i].get<std::string>();
    int id = space.id_of(label);
    if (id < 0)
      throw ValidationError("label '" + label + "' not in episode types (line " +
                            std::to_string(line_no) + ")");
    ids.push_back(id);
  }
  s.entity_spans = spans_from_io_labels(ids);
  return s;
}

std::vector<LabeledSentence> set_from_json(const ordered_json& j, const LabelSpace& space,
                                           int line_no) {
  if (!j.is_object() || !j.contains("word") || !j.contains("label"))
    throw ParseError("support/query needs `word` and `label`", line_no);
  const auto& words = j["word"];
  const auto& labels = j["label"];
  if (!words.is_array() || !labels.is_array() || words.size() != labels.size())
    throw ParseError("`word` and `label` must be parallel arrays", line_no);
  std::vector<LabeledSentence> out;
  for (size_t i = 0; i < words.size(); ++i)
    out.push_back(sentence_from_json(words[i], labels[i], space, line_no));
  return out;
}

ordered_json set_to_json(const std::vector<LabeledSentence>& sentences, const LabelSpace& space) {
  ordered_json words = ordered_json::array();
  ordered_json labels = ordered_json::array();
  for (const auto& s : sentences) {
    words.push_back(s.tokens);
    ordered_json row = ordered_json::array();
    for (int id : io_labels_from_spans(s)) row.push_back(space.name(id));
    labels.push_back(std::move(row));
  }
  return ordered_json{{"word", std::move(words)}, {"label", std::move(labels)}};
}

}  // namespace

void Episode::validate() const {
  std::vector<int> support_entities(label_space.size(), 0);
  for (const auto& s : support) {
    check_membership(s, label_space, "support");
    for (const auto& e : s.entity_spans) ++support_entities[e.class_id];
  }
  for (const auto& q : query) check_membership(q, label_space, "query");
  for (int c = 1; c < label_space.size(); ++c)
    if (support_entities[c] == 0)
      throw ValidationError("class '" + label_space.name(c) + "' has no support entity");
}

Episode episode_from_json_line(const std::string& line, int line_no) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad episode JSON: ") + e.what(), line_no);
  }
  if (!j.is_object() || !j.contains("types") || !j.contains("support") || !j.contains("query"))
    throw ParseError("episode needs `types`, `support`, `query`", line_no);
  std::vector<std::string> types;
  for (const auto& t : j["types"]) {
    if (!t.is_string()) throw ParseError("`types` entries must be strings", line_no);
    types.push_back(t.get<std::string>());
  }
  Episode ep;
  ep.label_space = LabelSpace(types);
  ep.support = set_from_json(j["support"], ep.label_space, line_no);
  ep.query = set_from_json(j["query"], ep.label_space, line_no);
  ep.validate();
  return ep;
}

std::string episode_to_json_line(const Episode& episode) {
  ordered_json j;
  j["types"] = std::vector<std::string>(episode.label_space.classes().begin() + 1,
                                        episode.label_space.classes().end());
  j["support"] = set_to_json(episode.support, episode.label_space);
  j["query"] = set_to_json(episode.query, episode.label_space);
  return j.dump();
}

EpisodeReader::EpisodeReader(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw CdapError("cannot read episodes: " + path);
}

std::optional<Episode> EpisodeReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.empty()) continue;
    return episode_from_json_line(line, line_no_);
  }
  return std::nullopt;
}

std::vector<Episode> load_episodes(const std::string& path) {
  EpisodeReader reader(path);
  std::vector<Episode> out;
  while (auto ep = reader.next()) out.push_back(std::move(*ep));
  return out;
}

namespace {

// Entities per class after restricting a sentence to the sampled classes.
std::vector<int> class_counts(const LabeledSentence& s, const std::vector<int>& class_map,
                              int n_way) {
  std::vector<int> counts(n_way + 1, 0);
  for (const auto& e : s.entity_spans)
    if (class_map[e.class_id] > 0) ++counts[class_map[e.class_id]];
  return counts;
}

LabeledSentence relabel(const LabeledSentence& s, const std::vector<int>& class_map) {
  LabeledSentence out;
  out.tokens = s.tokens;
  for (const auto& e : s.entity_spans)
    if (class_map[e.class_id] > 0) out.entity_spans.push_back({e.start, e.end, class_map[e.class_id]});
  return out;
}

}  // namespace

Episode sample_episode(const Corpus& corpus, const SamplerOptions& options, std::uint64_t seed) {
  const int n = options.n_way;
  const int k = options.k_shot;
  if (n < 1 || k < 1) throw ContractError("sample_episode: n_way and k_shot must be >= 1");

  // Classes eligible for sampling: at least k support entities plus one query
  // sentence somewhere in the corpus.
  std::vector<int> total(corpus.label_space.size(), 0);
  for (const auto& s : corpus.sentences)
    for (const auto& e : s.entity_spans) ++total[e.class_id];
  std::vector<int> eligible;
  int thinnest = -1;
  for (int c = 1; c < corpus.label_space.size(); ++c) {
    if (total[c] >= k + options.query_per_class)
      eligible.push_back(c);
    else if (thinnest < 0 || total[c] < total[thinnest])
      thinnest = c;
  }
  if (int(eligible.size()) < n)
    throw SamplingError(
        "corpus has only " + std::to_string(eligible.size()) + " classes with " +
            std::to_string(k + options.query_per_class) + "+ entities, need " + std::to_string(n),
        thinnest >= 0 ? corpus.label_space.name(thinnest) : std::string("O"));

  Rng rng(seed);
  rng.shuffle(eligible);
  std::vector<int> picked(eligible.begin(), eligible.begin() + n);

  // class_map: corpus class id -> episode class id (1..n), 0 when dropped.
  std::vector<int> class_map(corpus.label_space.size(), 0);
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    class_map[picked[i]] = i + 1;
    names.push_back(corpus.label_space.name(picked[i]));
  }

  std::vector<int> order(corpus.sentences.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  rng.shuffle(order);

  const int cap = options.mode == ShotMode::exact_k ? k : 2 * k;
  std::vector<int> have(n + 1, 0);
  std::vector<bool> used(corpus.sentences.size(), false);
  Episode ep;
  ep.label_space = LabelSpace(names);

  auto all_satisfied = [&]() {
    for (int c = 1; c <= n; ++c)
      if (have[c] < k) return false;
    return true;
  };

  for (int idx : order) {
    if (all_satisfied()) break;
    const LabeledSentence& s = corpus.sentences[idx];
    std::vector<int> counts = class_counts(s, class_map, n);
    bool needed = false;
    bool allowed = true;
    for (int c = 1; c <= n; ++c) {
      if (counts[c] == 0) continue;
      if (have[c] < k) needed = true;
      if (options.mode == ShotMode::exact_k) {
        // exact-K: only feed classes that are still short of K.
        if (have[c] >= cap) allowed = false;
      } else {
        // K~2K: the running count may not pass 2K.
        if (have[c] + counts[c] > cap) allowed = false;
      }
    }
    if (!needed || !allowed) continue;
    for (int c = 1; c <= n; ++c) have[c] += counts[c];
    used[idx] = true;
    ep.support.push_back(relabel(s, class_map));
  }
  if (!all_satisfied()) {
    for (int c = 1; c <= n; ++c)
      if (have[c] < k)
        throw SamplingError("cannot reach " + std::to_string(k) + " support entities for class '" +
                                ep.label_space.name(c) + "'",
                            ep.label_space.name(c));
  }

  // Query: per class, the first unused sentences containing it.
  for (int c = 1; c <= n; ++c) {
    int want = options.query_per_class;
    for (int idx : order) {
      if (want == 0) break;
      if (used[idx]) continue;
      if (class_counts(corpus.sentences[idx], class_map, n)[c] == 0) continue;
      used[idx] = true;
      ep.query.push_back(relabel(corpus.sentences[idx], class_map));
      --want;
    }
    if (want > 0)
      throw SamplingError("no query sentence left for class '" + ep.label_space.name(c) + "'",
                          ep.label_space.name(c));
  }

  ep.validate();
  return ep;
}

}  // namespace cdap
