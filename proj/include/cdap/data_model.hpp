#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdap/error.hpp"

namespace cdap {

// Class ids index into a LabelSpace; id 0 is always the non-entity class O.
constexpr int kOutsideClass = 0;

// Token range, 0-based with inclusive end.
struct Span {
  int start = 0;
  int end = 0;
  int length() const { return end - start + 1; }
  bool contains(int t) const { return start <= t && t <= end; }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }
  auto operator<=>(const Span&) const = default;
};

struct EntitySpan {
  int start = 0;
  int end = 0;
  int class_id = 0;
  Span span() const { return {start, end}; }
  auto operator<=>(const EntitySpan&) const = default;
};

// Ordered class names with O fixed at index 0.
class LabelSpace {
 public:
  LabelSpace() : classes_{"O"} {}
  explicit LabelSpace(std::vector<std::string> entity_classes);

  int size() const { return int(classes_.size()); }
  int n_entity_classes() const { return size() - 1; }
  const std::string& name(int id) const { return classes_.at(id); }
  // -1 when the name is unknown.
  int id_of(const std::string& name) const;
  const std::vector<std::string>& classes() const { return classes_; }
  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> classes_;
};

struct LabeledSentence {
  std::vector<std::string> tokens;
  std::vector<EntitySpan> entity_spans;  // pairwise non-overlapping, class_id >= 1

  int size() const { return int(tokens.size()); }
  // Throws ValidationError when an invariant is broken.
  void validate(int n_classes) const;
  bool operator==(const LabeledSentence&) const = default;
};

// Non-entity span sub-classes: O1 shares a left boundary with some entity
// span, O2 shares a right boundary (and no left), O3 shares neither.
enum class OSubclass { o1, o2, o3 };

// IO token labels: inside tokens get the entity class id, everything else O.
std::vector<int> io_labels_from_spans(const LabeledSentence& sentence);

// Maximal runs of one non-O class become one span. Adjacent same-class gold
// entities merge; that is the usual IO-scheme limitation.
std::vector<EntitySpan> spans_from_io_labels(const std::vector<int>& labels);

// All (i, j) with j - i + 1 <= max_len, in lexicographic order.
std::vector<Span> enumerate_spans(int n, int max_len);

// Per-candidate sub-class; nullopt marks candidates equal to an entity span.
// Boundary comparisons ignore the entity class.
std::vector<std::optional<OSubclass>> assign_o_subclasses(
    const std::vector<EntitySpan>& entity_spans, const std::vector<Span>& candidates);

// Entity-or-O-subclass label of one candidate span.
struct SpanLabel {
  bool is_entity = false;
  int class_id = kOutsideClass;  // valid when is_entity
  OSubclass sub = OSubclass::o3;  // valid when !is_entity
};
std::vector<SpanLabel> label_spans(const std::vector<EntitySpan>& entity_spans,
                                   const std::vector<Span>& candidates);

struct Corpus {
  LabelSpace label_space;
  std::vector<LabeledSentence> sentences;
};

// CoNLL-style file: `token<TAB>label` per line, blank line between sentences,
// labels read under the IO scheme ("O" or a bare class name).
Corpus read_conll(const std::string& path);

}  // namespace cdap
