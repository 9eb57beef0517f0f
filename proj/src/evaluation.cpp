#include "cdap/evaluation.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace cdap {

namespace {

void check_no_overlap(const std::vector<EntitySpan>& spans, const char* what) {
  std::vector<EntitySpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i - 1].end >= sorted[i].start)
      throw ContractError(std::string("match_predictions: overlapping ") + what + " spans");
}

}  // namespace

MatchCounts match_predictions(const std::vector<EntitySpan>& gold,
                              const std::vector<EntitySpan>& predicted) {
  check_no_overlap(gold, "gold");
  check_no_overlap(predicted, "predicted");
  MatchCounts counts;
  std::vector<bool> gold_hit(gold.size(), false);
  for (const EntitySpan& p : predicted) {
    bool exact = false;
    bool boundary = false;
    for (size_t g = 0; g < gold.size(); ++g) {
      if (gold[g].start != p.start || gold[g].end != p.end) continue;
      boundary = true;
      if (gold[g].class_id == p.class_id) {
        exact = true;
        gold_hit[g] = true;
      }
    }
    if (exact)
      ++counts.tp;
    else if (boundary)
      ++counts.fp_type;
    else
      ++counts.fp_span;
  }
  for (bool hit : gold_hit)
    if (!hit) ++counts.fn;
  return counts;
}

namespace {

double f1_of(long tp, long fp, long fn, double* precision = nullptr, double* recall = nullptr) {
  double p = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
  double r = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
  if (precision) *precision = p;
  if (recall) *recall = r;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

EpisodeMetrics make_episode_metrics(const MatchCounts& counts) {
  EpisodeMetrics m;
  m.counts = counts;
  m.f1 = f1_of(counts.tp, counts.fp(), counts.fn, &m.precision, &m.recall);
  return m;
}

double micro_f1_pooled(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) throw ContractError("micro_f1_pooled: no episodes");
  MatchCounts pooled;
  for (const auto& e : episodes) pooled += e.counts;
  return f1_of(pooled.tp, pooled.fp(), pooled.fn);
}

double episode_avg_f1(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) throw ContractError("episode_avg_f1: no episodes");
  double acc = 0.0;
  for (const auto& e : episodes) acc += e.f1;
  return acc / double(episodes.size());
}

std::string metrics_report_json(const std::vector<EpisodeMetrics>& episodes,
                                const ReportOptions& options) {
  MatchCounts pooled;
  for (const auto& e : episodes) pooled += e.counts;
  double precision = 0.0, recall = 0.0;
  double pooled_f1 = f1_of(pooled.tp, pooled.fp(), pooled.fn, &precision, &recall);

  nlohmann::ordered_json j;
  j["episodes"] = episodes.size();
  j["strategy"] = options.strategy;
  j["delta"] = options.delta;
  j["max_span_length"] = options.max_span_length;
  j["pooled"] = {{"tp", pooled.tp},     {"fp", pooled.fp()},       {"fn", pooled.fn},
                 {"precision", precision}, {"recall", recall},     {"micro_f1", pooled_f1}};
  j["episode_averaged_f1"] = episodes.empty() ? 0.0 : episode_avg_f1(episodes);
  j["fp_span"] = {{"count", pooled.fp_span},
                  {"proportion", pooled.fp() > 0 ? double(pooled.fp_span) / pooled.fp() : 0.0}};
  j["fp_type"] = {{"count", pooled.fp_type},
                  {"proportion", pooled.fp() > 0 ? double(pooled.fp_type) / pooled.fp() : 0.0}};
  j["gold_spans_over_length"] = options.gold_spans_over_length;
  return j.dump(2);
}

}  // namespace cdap
