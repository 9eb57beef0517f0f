#include "cdap/data_model.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace cdap {

LabelSpace::LabelSpace(std::vector<std::string> entity_classes) : classes_{"O"} {
  for (auto& c : entity_classes) {
    if (c == "O") throw ValidationError("LabelSpace: O cannot be listed as an entity class");
    if (id_of(c) >= 0) throw ValidationError("LabelSpace: duplicate class " + c);
    classes_.push_back(std::move(c));
  }
}

int LabelSpace::id_of(const std::string& name) const {
  for (size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i] == name) return int(i);
  return -1;
}

void LabeledSentence::validate(int n_classes) const {
  int n = size();
  if (n == 0) throw ValidationError("sentence has no tokens");
  std::vector<EntitySpan> sorted = entity_spans;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    const EntitySpan& e = sorted[i];
    if (e.start < 0 || e.start > e.end || e.end >= n)
      throw ValidationError("entity span out of range");
    if (e.class_id <= 0 || e.class_id >= n_classes)
      throw ValidationError("entity span has invalid class id");
    if (i > 0 && sorted[i - 1].end >= e.start)
      throw ValidationError("entity spans overlap");
  }
}

std::vector<int> io_labels_from_spans(const LabeledSentence& sentence) {
  std::vector<int> labels(sentence.size(), kOutsideClass);
  for (const EntitySpan& e : sentence.entity_spans)
    for (int t = e.start; t <= e.end; ++t) labels[t] = e.class_id;
  return labels;
}

std::vector<EntitySpan> spans_from_io_labels(const std::vector<int>& labels) {
  std::vector<EntitySpan> spans;
  int n = int(labels.size());
  for (int i = 0; i < n;) {
    if (labels[i] == kOutsideClass) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && labels[j + 1] == labels[i]) ++j;
    spans.push_back({i, j, labels[i]});
    i = j + 1;
  }
  return spans;
}

std::vector<Span> enumerate_spans(int n, int max_len) {
  if (n < 1 || max_len < 1) throw ContractError("enumerate_spans: n and max_len must be >= 1");
  std::vector<Span> spans;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n && j - i < max_len; ++j) spans.push_back({i, j});
  return spans;
}

std::vector<std::optional<OSubclass>> assign_o_subclasses(
    const std::vector<EntitySpan>& entity_spans, const std::vector<Span>& candidates) {
  std::vector<std::optional<OSubclass>> out(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) {
    const Span& c = candidates[k];
    bool is_entity = false;
    bool left = false;
    bool right = false;
    for (const EntitySpan& e : entity_spans) {
      if (e.start == c.start && e.end == c.end) {
        is_entity = true;
        break;
      }
      left = left || e.start == c.start;
      right = right || e.end == c.end;
    }
    if (is_entity) continue;
    // A shared left boundary wins even when the right boundary matches a
    // different entity.
    out[k] = left ? OSubclass::o1 : right ? OSubclass::o2 : OSubclass::o3;
  }
  return out;
}

std::vector<SpanLabel> label_spans(const std::vector<EntitySpan>& entity_spans,
                                   const std::vector<Span>& candidates) {
  auto subs = assign_o_subclasses(entity_spans, candidates);
  std::vector<SpanLabel> out(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) {
    if (subs[k]) {
      out[k].is_entity = false;
      out[k].sub = *subs[k];
    } else {
      out[k].is_entity = true;
      for (const EntitySpan& e : entity_spans)
        if (e.start == candidates[k].start && e.end == candidates[k].end) out[k].class_id = e.class_id;
    }
  }
  return out;
}

Corpus read_conll(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CdapError("cannot read corpus: " + path);
  Corpus corpus;
  std::vector<std::string> class_names;
  std::map<std::string, int> class_ids;  // name -> id (1-based)
  std::vector<std::string> tokens;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;

  auto flush_sentence = [&]() {
    if (tokens.empty()) return;
    LabeledSentence s;
    s.tokens = std::move(tokens);
    s.entity_spans = spans_from_io_labels(labels);
    corpus.sentences.push_back(std::move(s));
    tokens.clear();
    labels.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence();
      continue;
    }
    size_t tab = line.find('\t');
    if (tab == std::string::npos) tab = line.find(' ');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw ParseError("expected `token<TAB>label`", line_no);
    std::string token = line.substr(0, tab);
    std::string label = line.substr(tab + 1);
    int id = kOutsideClass;
    if (label != "O") {
      auto it = class_ids.find(label);
      if (it == class_ids.end()) {
        class_names.push_back(label);
        id = int(class_names.size());
        class_ids[label] = id;
      } else {
        id = it->second;
      }
    }
    tokens.push_back(std::move(token));
    labels.push_back(id);
  }
  flush_sentence();
  corpus.label_space = LabelSpace(class_names);
  for (const auto& s : corpus.sentences) s.validate(corpus.label_space.size());
  return corpus;
}

}  // namespace cdap
