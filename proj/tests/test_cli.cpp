#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "cdap/episodes.hpp"
#include "toy_corpus.hpp"

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string out_path = "cli_out.tmp";
  std::string command = std::string(CDAP_BIN) + " " + args + " > " + out_path + " 2>&1";
  int status = std::system(command.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  std::remove(out_path.c_str());
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// One shared pipeline fixture: corpus -> episodes -> short training run.
struct Pipeline {
  std::string corpus = "cli_corpus.txt";
  std::string episodes = "cli_episodes.jsonl";
  std::string config = "cli_config.txt";
  std::string checkpoint = "cli_model.ckpt";

  Pipeline() {
    toy::ToyOptions options;
    options.n_classes = 3;
    options.sentences = 80;
    options.seed = 9;
    toy::write_conll(toy::make_corpus(options), corpus);
    write_file(config,
               "embed_dim = 24\n"
               "model_dim = 12\n"
               "max_steps = 25\n"
               "warmup_steps = 5\n"
               "batch_episodes = 2\n"
               "seed = 3\n");
  }
  ~Pipeline() {
    for (const auto& f : {corpus, episodes, config, checkpoint}) std::remove(f.c_str());
  }
};

}  // namespace

TEST_CASE("help lists every subcommand and the config keys") {
  RunResult top = run("--help");
  CHECK(top.exit_code == 0);
  for (const char* cmd : {"sample-episodes", "train", "eval", "decode"})
    CHECK(top.output.find(cmd) != std::string::npos);

  RunResult train_help = run("train --help");
  CHECK(train_help.exit_code == 0);
  for (const char* key : {"lambda", "gamma", "temperature", "delta", "max_span_length", "seed"})
    CHECK(train_help.output.find(key) != std::string::npos);
}

TEST_CASE("full pipeline: sample, train, eval, decode") {
  Pipeline p;
  RunResult sample = run("sample-episodes --corpus " + p.corpus +
                         " --n 3 --k 1 --count 8 --seed 5 --out " + p.episodes);
  REQUIRE(sample.exit_code == 0);
  CHECK(cdap::load_episodes(p.episodes).size() == 8);

  RunResult train = run("train --episodes " + p.episodes + " --config " + p.config +
                        " --out " + p.checkpoint + " --trace cli_trace.csv");
  REQUIRE(train.exit_code == 0);
  std::string trace = slurp("cli_trace.csv");
  CHECK(trace.find("step,L_t,L_s,L_c,total,lr") == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 26);  // header + 25 steps
  std::remove("cli_trace.csv");

  RunResult eval = run("eval --episodes " + p.episodes + " --checkpoint " + p.checkpoint +
                       " --report cli_report.json --decoded cli_decoded.jsonl");
  REQUIRE(eval.exit_code == 0);
  auto report = nlohmann::json::parse(slurp("cli_report.json"));
  CHECK(report["episodes"] == 8);
  CHECK(report["strategy"] == "consistent-greedy");
  CHECK(report["pooled"].contains("micro_f1"));
  std::string decoded = slurp("cli_decoded.jsonl");
  CHECK(std::count(decoded.begin(), decoded.end(), '\n') >= 8);
  auto first = nlohmann::json::parse(decoded.substr(0, decoded.find('\n')));
  CHECK(first.contains("episode"));
  CHECK(first.contains("sentence"));
  CHECK(first.contains("spans"));
  std::remove("cli_report.json");
  std::remove("cli_decoded.jsonl");

  RunResult span_only = run("eval --episodes " + p.episodes + " --checkpoint " + p.checkpoint +
                            " --strategy span-only --delta 0 --report cli_span.json");
  REQUIRE(span_only.exit_code == 0);
  CHECK(nlohmann::json::parse(slurp("cli_span.json"))["strategy"] == "span-only");
  std::remove("cli_span.json");

  RunResult decode = run("decode --support " + p.episodes + " --checkpoint " + p.checkpoint +
                         " --sentence \"the s1w0 of\"");
  REQUIRE(decode.exit_code == 0);
  CHECK(decode.output.find("token predictions:") != std::string::npos);
  CHECK(decode.output.find("span candidates") != std::string::npos);
  CHECK(decode.output.find("extracted:") != std::string::npos);
}

TEST_CASE("sampling and evaluation are deterministic per seed and worker count") {
  Pipeline p;
  REQUIRE(run("sample-episodes --corpus " + p.corpus + " --n 3 --k 1 --count 6 --seed 11 --out " +
              p.episodes)
              .exit_code == 0);
  std::string first = slurp(p.episodes);
  REQUIRE(run("sample-episodes --corpus " + p.corpus + " --n 3 --k 1 --count 6 --seed 11 --out " +
              p.episodes)
              .exit_code == 0);
  CHECK(first == slurp(p.episodes));

  REQUIRE(run("train --episodes " + p.episodes + " --config " + p.config + " --out " +
              p.checkpoint)
              .exit_code == 0);
  REQUIRE(run("eval --episodes " + p.episodes + " --checkpoint " + p.checkpoint +
              " --workers 1 --report cli_r1.json")
              .exit_code == 0);
  REQUIRE(run("eval --episodes " + p.episodes + " --checkpoint " + p.checkpoint +
              " --workers 4 --report cli_r4.json")
              .exit_code == 0);
  CHECK(slurp("cli_r1.json") == slurp("cli_r4.json"));
  std::remove("cli_r1.json");
  std::remove("cli_r4.json");
}

TEST_CASE("zero-step training writes the untouched initialization") {
  Pipeline p;
  REQUIRE(run("sample-episodes --corpus " + p.corpus + " --n 3 --k 1 --count 4 --seed 2 --out " +
              p.episodes)
              .exit_code == 0);
  write_file(p.config, "embed_dim = 24\nmodel_dim = 12\nmax_steps = 0\nwarmup_steps = 0\nseed = 3\n");
  REQUIRE(run("train --episodes " + p.episodes + " --config " + p.config + " --out ck_a.ckpt")
              .exit_code == 0);
  REQUIRE(run("train --episodes " + p.episodes + " --config " + p.config + " --out ck_b.ckpt")
              .exit_code == 0);
  CHECK(slurp("ck_a.ckpt") == slurp("ck_b.ckpt"));
  std::remove("ck_a.ckpt");
  std::remove("ck_b.ckpt");
}

TEST_CASE("validation failures exit with code 2") {
  Pipeline p;
  write_file(p.episodes, "{broken json\n");
  RunResult bad_episodes = run("train --episodes " + p.episodes + " --config " + p.config +
                               " --out " + p.checkpoint);
  CHECK(bad_episodes.exit_code == 2);

  RunResult bad_strategy = run("eval --episodes " + p.episodes + " --checkpoint missing.ckpt " +
                               "--strategy beam");
  CHECK(bad_strategy.exit_code != 0);

  write_file(p.config, "no_such_key = 1\n");
  RunResult bad_config = run("train --episodes " + p.episodes + " --config " + p.config +
                             " --out " + p.checkpoint);
  CHECK(bad_config.exit_code == 2);

  // default warmup (1000) does not fit into a 10-step run
  toy::ToyOptions options;
  options.n_classes = 3;
  options.sentences = 40;
  toy::write_conll(toy::make_corpus(options), p.corpus);
  REQUIRE(run("sample-episodes --corpus " + p.corpus + " --n 2 --k 1 --count 2 --seed 1 --out " +
              p.episodes)
              .exit_code == 0);
  write_file(p.config, "max_steps = 10\n");
  RunResult bad_schedule = run("train --episodes " + p.episodes + " --config " + p.config +
                               " --out " + p.checkpoint);
  CHECK(bad_schedule.exit_code == 2);
  CHECK(bad_schedule.output.find("warmup_steps") != std::string::npos);

  RunResult sampling_thin = run("sample-episodes --corpus " + p.corpus +
                                " --n 3 --k 500 --count 1 --seed 1 --out " + p.episodes);
  CHECK(sampling_thin.exit_code == 2);
  CHECK(sampling_thin.output.find("class") != std::string::npos);
}

TEST_CASE("numerical divergence exits with code 3") {
  Pipeline p;
  REQUIRE(run("sample-episodes --corpus " + p.corpus + " --n 3 --k 1 --count 4 --seed 7 --out " +
              p.episodes)
              .exit_code == 0);
  write_file(p.config,
             "embed_dim = 16\nmodel_dim = 8\nmax_steps = 20\nwarmup_steps = 1\n"
             "lr_model = 1e30\nseed = 3\n");
  RunResult diverged = run("train --episodes " + p.episodes + " --config " + p.config +
                           " --out " + p.checkpoint);
  CHECK(diverged.exit_code == 3);
}

TEST_SUITE_END();
