#include <omp.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cdap/consistency.hpp"
#include "cdap/evaluation.hpp"
#include "cdap/inference.hpp"

namespace {

using namespace cdap;

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

void cmd_sample_episodes(const std::string& corpus_path, int n, int k, const std::string& mode,
                         int count, std::uint64_t seed, int query_per_class,
                         const std::string& out_path) {
  Corpus corpus = read_conll(corpus_path);
  SamplerOptions options;
  options.n_way = n;
  options.k_shot = k;
  options.query_per_class = query_per_class;
  if (mode == "exact-k")
    options.mode = ShotMode::exact_k;
  else if (mode == "k-2k")
    options.mode = ShotMode::k_to_2k;
  else
    throw ValidationError("mode must be exact-k or k-2k, got '" + mode + "'");

  std::ofstream out(out_path);
  if (!out) throw CdapError("cannot write " + out_path);
  for (int i = 0; i < count; ++i)
    out << episode_to_json_line(sample_episode(corpus, options, seed + std::uint64_t(i))) << "\n";
  std::cerr << "wrote " << count << " episodes to " << out_path << "\n";
}

void cmd_train(const std::string& episodes_path, const std::string& config_path,
               const std::string& out_path, const std::string& trace_path,
               std::optional<std::uint64_t> seed_override) {
  Config config = config_path.empty() ? Config{} : load_config(config_path);
  if (seed_override) config.seed = *seed_override;
  std::vector<Episode> episodes = load_episodes(episodes_path);
  auto provider = make_provider(config);
  ParameterStore store = make_parameter_store(config);

  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (!trace_path.empty()) {
    trace_file.open(trace_path);
    if (!trace_file) throw CdapError("cannot write " + trace_path);
    trace = &trace_file;
  }
  auto history = train(store, episodes, config, *provider, trace);
  save_checkpoint(out_path, store, config_to_meta(config));
  if (!history.empty())
    std::cerr << "trained " << history.size() << " steps, final loss " << history.back().total
              << "\n";
  std::cerr << "checkpoint written to " << out_path << "\n";
}

nlohmann::ordered_json span_json(const EntitySpan& span, const LabelSpace& space,
                                 const std::vector<SpanCandidate>& candidates) {
  nlohmann::ordered_json j;
  j["start"] = span.start;
  j["end"] = span.end;
  j["class"] = space.name(span.class_id);
  j["raw_p"] = nullptr;
  j["adjusted_p"] = nullptr;
  j["count"] = nullptr;
  for (const SpanCandidate& c : candidates) {
    if (c.span.start == span.start && c.span.end == span.end && c.class_id == span.class_id) {
      j["raw_p"] = c.raw_p;
      j["adjusted_p"] = c.adjusted_p;
      j["count"] = c.inconsistent;
      break;
    }
  }
  return j;
}

void cmd_eval(const std::string& episodes_path, const std::string& checkpoint_path,
              std::optional<double> delta_opt, std::optional<int> max_len_opt,
              const std::string& strategy_name, int workers, const std::string& report_path,
              const std::string& decoded_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Config config = config_from_meta(ck.meta);
  double delta = delta_opt.value_or(config.delta);
  int max_len = max_len_opt.value_or(config.max_span_length);
  DecodeStrategy strategy = parse_strategy(strategy_name);
  auto provider = make_provider(config);
  std::vector<Episode> episodes = load_episodes(episodes_path);
  if (episodes.empty()) throw ValidationError("no episodes to evaluate");

  struct EpisodeResult {
    EpisodeMetrics metrics;
    EpisodeDecode decode;
    std::vector<std::vector<EntitySpan>> extracted;  // per sentence
    int over_cap = 0;
  };
  std::vector<EpisodeResult> results(episodes.size());
  if (workers < 1) workers = 1;

#pragma omp parallel for num_threads(workers) schedule(dynamic)
  for (int i = 0; i < int(episodes.size()); ++i) {
    const Episode& ep = episodes[i];
    EpisodeResult r;
    r.decode = decode_episode(ck.store, config, *provider, ep, delta, max_len);
    MatchCounts counts;
    for (size_t s = 0; s < ep.query.size(); ++s) {
      std::vector<EntitySpan> extracted = extract_sentence(r.decode.sentences[s], strategy);
      counts += match_predictions(ep.query[s].entity_spans, extracted);
      r.extracted.push_back(std::move(extracted));
    }
    r.metrics = make_episode_metrics(counts);
    r.over_cap = r.decode.gold_spans_over_cap;
    results[i] = std::move(r);
  }

  std::vector<EpisodeMetrics> metrics;
  int over_cap = 0;
  for (const auto& r : results) {
    metrics.push_back(r.metrics);
    over_cap += r.over_cap;
  }
  ReportOptions options;
  options.strategy = strategy_name;
  options.delta = delta;
  options.max_span_length = max_len;
  options.gold_spans_over_length = over_cap;
  std::string report = metrics_report_json(metrics, options);
  if (report_path.empty()) {
    std::cout << report << "\n";
  } else {
    std::ofstream out(report_path);
    if (!out) throw CdapError("cannot write " + report_path);
    out << report << "\n";
    std::cerr << "report written to " << report_path << "\n";
  }
  std::cerr << "pooled micro-F1 " << micro_f1_pooled(metrics) << ", episode-averaged F1 "
            << episode_avg_f1(metrics) << "\n";

  if (!decoded_path.empty()) {
    std::ofstream out(decoded_path);
    if (!out) throw CdapError("cannot write " + decoded_path);
    for (size_t i = 0; i < episodes.size(); ++i) {
      for (size_t s = 0; s < episodes[i].query.size(); ++s) {
        nlohmann::ordered_json j;
        j["episode"] = i;
        j["sentence"] = s;
        j["spans"] = nlohmann::ordered_json::array();
        for (const EntitySpan& span : results[i].extracted[s])
          j["spans"].push_back(span_json(span, episodes[i].label_space,
                                         results[i].decode.sentences[s].candidates));
        out << j.dump() << "\n";
      }
    }
    std::cerr << "decoded spans written to " << decoded_path << "\n";
  }
}

void cmd_decode(const std::string& support_path, const std::string& sentence_text,
                const std::string& checkpoint_path, std::optional<double> delta_opt,
                std::optional<int> max_len_opt) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Config config = config_from_meta(ck.meta);
  double delta = delta_opt.value_or(config.delta);
  int max_len = max_len_opt.value_or(config.max_span_length);
  auto provider = make_provider(config);

  EpisodeReader reader(support_path);
  auto base = reader.next();
  if (!base) throw ValidationError("support file holds no episode");

  LabeledSentence sentence;
  std::istringstream words(sentence_text);
  std::string w;
  while (words >> w) sentence.tokens.push_back(w);
  if (sentence.tokens.empty()) throw ValidationError("sentence has no tokens");

  Episode ep;
  ep.label_space = base->label_space;
  ep.support = base->support;
  ep.query = {sentence};
  ep.validate();

  EpisodeDecode decode = decode_episode(ck.store, config, *provider, ep, delta, max_len);
  const SentenceDecode& dec = decode.sentences[0];
  std::cout << "token predictions:\n";
  for (size_t t = 0; t < sentence.tokens.size(); ++t)
    std::cout << "  " << sentence.tokens[t] << "\t"
              << ep.label_space.name(dec.token_predictions[t]) << "\n";
  std::cout << "span candidates (start,end class raw_p count adjusted_p):\n";
  for (const SpanCandidate& c : dec.candidates)
    std::cout << "  (" << c.span.start << "," << c.span.end << ") "
              << ep.label_space.name(c.class_id) << " " << c.raw_p << " " << c.inconsistent
              << " " << c.adjusted_p << "\n";
  std::cout << "extracted:\n";
  for (const SpanCandidate& c : dec.selected) {
    std::cout << "  (" << c.span.start << "," << c.span.end << ") "
              << ep.label_space.name(c.class_id) << " =";
    for (int t = c.span.start; t <= c.span.end; ++t) std::cout << " " << sentence.tokens[t];
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"few-shot sequence labeling with dual token/span prototypical networks"};
  app.require_subcommand(1);

  auto* sample = app.add_subcommand("sample-episodes", "sample N-way K-shot episodes from a corpus");
  std::string corpus_path, mode = "k-2k", out_path;
  int n_way = 5, k_shot = 1, count = 100, query_per_class = 1;
  std::uint64_t sample_seed = 1;
  sample->add_option("--corpus", corpus_path, "CoNLL corpus (token<TAB>label)")->required();
  sample->add_option("--n", n_way, "classes per episode")->required();
  sample->add_option("--k", k_shot, "support entities per class")->required();
  sample->add_option("--mode", mode, "exact-k | k-2k (default k-2k)");
  sample->add_option("--count", count, "number of episodes (default 100)");
  sample->add_option("--seed", sample_seed, "episode i uses seed+i (default 1)");
  sample->add_option("--query-per-class", query_per_class, "query sentences per class (default 1)");
  sample->add_option("--out", out_path, "output episodes JSONL")->required();

  auto* train_cmd = app.add_subcommand("train", "train on an episode file");
  std::string train_episodes, config_path, checkpoint_out, trace_path;
  std::optional<std::uint64_t> train_seed;
  train_cmd->add_option("--episodes", train_episodes, "training episodes JSONL")->required();
  train_cmd->add_option("--config", config_path,
                        "config file; `key = value` lines. Keys:\n" + config_keys_help());
  train_cmd->add_option("--out", checkpoint_out, "checkpoint output path")->required();
  train_cmd->add_option("--trace", trace_path, "loss trace CSV (step,L_t,L_s,L_c,total,lr)");
  train_cmd->add_option("--seed", train_seed, "override the config seed");

  auto* eval_cmd = app.add_subcommand("eval", "decode episodes and report micro-F1");
  std::string eval_episodes, eval_checkpoint, report_path, decoded_path;
  std::string strategy = "consistent-greedy";
  std::optional<double> delta_opt;
  std::optional<int> max_len_opt;
  int workers = 1;
  eval_cmd->add_option("--episodes", eval_episodes, "episodes JSONL")->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--delta", delta_opt, "penalty per inconsistent token (default: config)");
  eval_cmd->add_option("--max-span-length", max_len_opt, "span cap L (default: config)");
  eval_cmd->add_option("--strategy", strategy,
                       "consistent-greedy | span-only | token-only | intersection | union");
  eval_cmd->add_option("--workers", workers, "episode decoding threads (default 1)");
  eval_cmd->add_option("--report", report_path, "metrics JSON path (default: stdout)");
  eval_cmd->add_option("--decoded", decoded_path, "decoded spans JSONL path");

  auto* decode_cmd = app.add_subcommand("decode", "trace one sentence against a support set");
  std::string support_path, sentence_text, decode_checkpoint;
  std::optional<double> decode_delta;
  std::optional<int> decode_max_len;
  decode_cmd->add_option("--support", support_path, "episode JSONL; first episode's support is used")
      ->required();
  decode_cmd->add_option("--sentence", sentence_text, "space-separated tokens")->required();
  decode_cmd->add_option("--checkpoint", decode_checkpoint, "trained checkpoint")->required();
  decode_cmd->add_option("--delta", decode_delta, "penalty per inconsistent token");
  decode_cmd->add_option("--max-span-length", decode_max_len, "span cap L");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed())
      cmd_sample_episodes(corpus_path, n_way, k_shot, mode, count, sample_seed, query_per_class,
                          out_path);
    else if (train_cmd->parsed())
      cmd_train(train_episodes, config_path, checkpoint_out, trace_path, train_seed);
    else if (eval_cmd->parsed())
      cmd_eval(eval_episodes, eval_checkpoint, delta_opt, max_len_opt, strategy, workers,
               report_path, decoded_path);
    else if (decode_cmd->parsed())
      cmd_decode(support_path, sentence_text, decode_checkpoint, decode_delta, decode_max_len);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
