#pragma once

#include <string>
#include <vector>

#include "cdap/data_model.hpp"

namespace cdap {

struct MatchCounts {
  long tp = 0;
  long fp_span = 0;  // predicted span with no gold boundary match
  long fp_type = 0;  // boundary match, wrong class
  long fn = 0;
  long fp() const { return fp_span + fp_type; }
  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp_span += o.fp_span;
    fp_type += o.fp_type;
    fn += o.fn;
    return *this;
  }
};

// Exact (start, end, class) match = TP; otherwise the prediction is FP-Span
// or FP-Type by whether its boundary matches any gold span. Unmatched gold is
// FN. Both sets must be non-overlapping within the sentence.
MatchCounts match_predictions(const std::vector<EntitySpan>& gold,
                              const std::vector<EntitySpan>& predicted);

struct EpisodeMetrics {
  MatchCounts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;  // 0 when P + R == 0
};
EpisodeMetrics make_episode_metrics(const MatchCounts& counts);

// TP/FP/FN pooled across episodes, then F1.
double micro_f1_pooled(const std::vector<EpisodeMetrics>& episodes);
// Mean of the per-episode F1 values.
double episode_avg_f1(const std::vector<EpisodeMetrics>& episodes);

struct ReportOptions {
  std::string strategy;
  double delta = 0.0;
  int max_span_length = 0;
  int gold_spans_over_length = 0;
};
// JSON with both F1 conventions, pooled counts, and FP-Span/FP-Type shares.
std::string metrics_report_json(const std::vector<EpisodeMetrics>& episodes,
                                const ReportOptions& options);

}  // namespace cdap
