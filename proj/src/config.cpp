#include "cdap/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "cdap/error.hpp"

namespace cdap {

namespace {

struct KeySpec {
  const char* name;
  const char* describe;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

double to_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw ParseError("bad number '" + s + "'");
  return v;
}

std::int64_t to_int(const std::string& s) {
  size_t pos = 0;
  long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw ParseError("bad integer '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ParseError("bad bool '" + s + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"lambda", "token-level loss weight (default 0.1)",
       [](Config& c, const std::string& v) { c.lambda = to_double(v); },
       [](const Config& c) { return fmt(c.lambda); }},
      {"beta", "span-level loss weight (default 1)",
       [](Config& c, const std::string& v) { c.beta = to_double(v); },
       [](const Config& c) { return fmt(c.beta); }},
      {"gamma", "consistency loss weight (default 0.05)",
       [](Config& c, const std::string& v) { c.gamma = to_double(v); },
       [](const Config& c) { return fmt(c.gamma); }},
      {"temperature", "consistency softmax temperature (default 1)",
       [](Config& c, const std::string& v) { c.temperature = to_double(v); },
       [](const Config& c) { return fmt(c.temperature); }},
      {"consistency", "bidirectional | st | ts (default bidirectional)",
       [](Config& c, const std::string& v) {
         if (v == "bidirectional") c.consistency = ConsistencyKind::bidirectional;
         else if (v == "st") c.consistency = ConsistencyKind::st;
         else if (v == "ts") c.consistency = ConsistencyKind::ts;
         else throw ParseError("consistency must be bidirectional|st|ts, got '" + v + "'");
       },
       [](const Config& c) {
         switch (c.consistency) {
           case ConsistencyKind::st: return std::string("st");
           case ConsistencyKind::ts: return std::string("ts");
           default: return std::string("bidirectional");
         }
       }},
      {"delta", "decoding penalty per inconsistent token (default 0.02)",
       [](Config& c, const std::string& v) { c.delta = to_double(v); },
       [](const Config& c) { return fmt(c.delta); }},
      {"max_span_length", "span length cap L at inference (default 8)",
       [](Config& c, const std::string& v) { c.max_span_length = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.max_span_length); }},
      {"train_span_cap", "span length cap during training, 0 = unlimited (default 8)",
       [](Config& c, const std::string& v) { c.train_span_cap = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.train_span_cap); }},
      {"embed_dim", "embedding width d1 (default 64)",
       [](Config& c, const std::string& v) { c.embed_dim = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.embed_dim); }},
      {"model_dim", "projected width d (default 32)",
       [](Config& c, const std::string& v) { c.model_dim = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.model_dim); }},
      {"distance", "squared | euclidean (default squared)",
       [](Config& c, const std::string& v) {
         if (v == "squared") c.distance = DistanceKind::squared_euclidean;
         else if (v == "euclidean") c.distance = DistanceKind::euclidean;
         else throw ParseError("distance must be squared|euclidean, got '" + v + "'");
       },
       [](const Config& c) {
         return c.distance == DistanceKind::euclidean ? std::string("euclidean")
                                                      : std::string("squared");
       }},
      {"cross_attention", "enable the span cross-attention block (default true)",
       [](Config& c, const std::string& v) { c.cross_attention = to_bool(v); },
       [](const Config& c) { return c.cross_attention ? "true" : "false"; }},
      {"layer_norm", "false = identity-affine norm in the cross-attention block (default true)",
       [](Config& c, const std::string& v) { c.layer_norm = to_bool(v); },
       [](const Config& c) { return c.layer_norm ? "true" : "false"; }},
      {"adaptive_prototypes", "false = plain mean prototypes (default true)",
       [](Config& c, const std::string& v) { c.adaptive_prototypes = to_bool(v); },
       [](const Config& c) { return c.adaptive_prototypes ? "true" : "false"; }},
      {"o_division", "boundary | esd (esd reserved, default boundary)",
       [](Config& c, const std::string& v) {
         if (v == "boundary") c.o_division = ODivisionKind::boundary;
         else if (v == "esd") c.o_division = ODivisionKind::esd;
         else throw ParseError("o_division must be boundary|esd, got '" + v + "'");
       },
       [](const Config& c) {
         return c.o_division == ODivisionKind::esd ? std::string("esd") : std::string("boundary");
       }},
      {"lr_model", "peak learning rate, non-embedding parameters (default 5e-4)",
       [](Config& c, const std::string& v) { c.lr_model = to_double(v); },
       [](const Config& c) { return fmt(c.lr_model); }},
      {"lr_embedding", "peak learning rate, embedding group (default 2e-5)",
       [](Config& c, const std::string& v) { c.lr_embedding = to_double(v); },
       [](const Config& c) { return fmt(c.lr_embedding); }},
      {"weight_decay", "decoupled weight decay (default 0.01)",
       [](Config& c, const std::string& v) { c.weight_decay = to_double(v); },
       [](const Config& c) { return fmt(c.weight_decay); }},
      {"warmup_steps", "linear warmup length (default 1000)",
       [](Config& c, const std::string& v) { c.warmup_steps = to_int(v); },
       [](const Config& c) { return std::to_string(c.warmup_steps); }},
      {"max_steps", "total optimizer steps (default 1000)",
       [](Config& c, const std::string& v) { c.max_steps = to_int(v); },
       [](const Config& c) { return std::to_string(c.max_steps); }},
      {"batch_episodes", "episodes per optimizer step (default 2)",
       [](Config& c, const std::string& v) { c.batch_episodes = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.batch_episodes); }},
      {"provider", "hashed | pretrained (default hashed)",
       [](Config& c, const std::string& v) {
         if (v == "hashed") c.provider = ProviderKind::hashed;
         else if (v == "pretrained") c.provider = ProviderKind::pretrained;
         else throw ParseError("provider must be hashed|pretrained, got '" + v + "'");
       },
       [](const Config& c) {
         return c.provider == ProviderKind::pretrained ? std::string("pretrained")
                                                       : std::string("hashed");
       }},
      {"pretrained_path", "embedding text file for provider=pretrained",
       [](Config& c, const std::string& v) { c.pretrained_path = v; },
       [](const Config& c) { return c.pretrained_path; }},
      {"query_per_class", "sampler query sentences per class (default 1)",
       [](Config& c, const std::string& v) { c.query_per_class = int(to_int(v)); },
       [](const Config& c) { return std::to_string(c.query_per_class); }},
      {"seed", "global RNG seed (default 1)",
       [](Config& c, const std::string& v) { c.seed = std::uint64_t(to_int(v)); },
       [](const Config& c) { return std::to_string(c.seed); }},
  };
  return specs;
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : key_specs())
    if (name == k.name) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected `key = value`", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const KeySpec* spec = find_key(key);
    if (!spec) throw ParseError("unknown config key '" + key + "'", line_no);
    try {
      spec->set(cfg, value);
    } catch (const ParseError& e) {
      throw ParseError(std::string(e.what()) + " for key '" + key + "'", line_no);
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CdapError("cannot read config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const Config& config) {
  std::ostringstream out;
  for (const auto& k : key_specs()) out << k.name << " = " << k.get(config) << "\n";
  return out.str();
}

std::string config_keys_help() {
  std::ostringstream out;
  for (const auto& k : key_specs()) out << "  " << k.name << ": " << k.describe << "\n";
  return out.str();
}

std::map<std::string, std::string> config_to_meta(const Config& config) {
  std::map<std::string, std::string> meta;
  for (const auto& k : key_specs()) meta[k.name] = k.get(config);
  return meta;
}

Config config_from_meta(const std::map<std::string, std::string>& meta, Config base) {
  for (const auto& [key, value] : meta) {
    const KeySpec* spec = find_key(key);
    if (spec && !value.empty()) spec->set(base, value);
  }
  return base;
}

}  // namespace cdap
