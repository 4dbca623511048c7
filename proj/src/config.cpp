#include "refgame/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace refgame {

std::string loss_name(LossKind k) { return k == LossKind::ce ? "ce" : "ce_rsa"; }

LossKind loss_from_name(const std::string& name) {
  if (name == "ce") return LossKind::ce;
  if (name == "ce_rsa") return LossKind::ce_rsa;
  throw std::invalid_argument("config: unknown loss '" + name + "' (ce|ce_rsa)");
}

ExperimentConfig ExperimentConfig::paper_params() {
  ExperimentConfig c;
  c.name = "refgame_paper";
  c.vocab = 40;
  c.max_len = 2;
  c.hidden_speaker = 768;
  c.hidden_listener = 768;
  c.embed_dim = 50;
  c.temperature = 0.1;
  c.lr_speaker = 0.01;
  c.lr_listener = 0.001;
  c.batch_size = 32;
  c.epochs = 30;
  c.seeds = {16, 22, 41, 56, 67, 77, 14, 78, 99, 23, 82, 40, 51, 37, 62};
  return c;
}

GameConfig ExperimentConfig::game() const {
  GameConfig g;
  g.loss = loss;
  g.reward = reward;
  g.lambda_entropy = lambda_entropy;
  g.softrank.regularization_strength = softrank_epsilon;
  g.softrank.standardize = softrank_standardize;
  g.n_cand = n_cand;
  return g;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("config: " + what);
  };
  if (vocab < 2) fail("vocab must be >= 2 (EOS plus at least one symbol)");
  if (max_len < 1) fail("max_len must be >= 1");
  if (hidden_speaker < 1 || hidden_listener < 1) fail("hidden sizes must be positive");
  if (embed_dim < 1) fail("embed_dim must be positive");
  if (temperature <= 0) fail("temperature must be positive");
  if (lr_speaker < 0 || lr_listener < 0) fail("learning rates must be >= 0");
  if (batch_size < 3) fail("batch_size must be >= 3 (RSA needs 3 pairwise items)");
  if (epochs < 1) fail("epochs must be >= 1");
  if (lambda_entropy < 0) fail("lambda_entropy must be >= 0");
  if (softrank_epsilon <= 0) fail("softrank_epsilon must be positive");
  if (n_cand < 2) fail("n_cand must be >= 2");
  if (seeds.empty()) fail("at least one seed required");
  if (noise_pair_count < 3 || wino_pair_count < 3) fail("pair counts must be >= 3");
  if (embeddings_path.empty() != labels_path.empty())
    fail("embeddings and labels paths must be given together");
  if (embeddings_path.empty()) {
    if (synthetic.n_attributes < 2 || synthetic.n_values < 2)
      fail("synthetic spec needs k >= 2 and v >= 2");
    if (synthetic.items_per_category < 1 || synthetic.embed_dim < 1)
      fail("synthetic spec needs positive sizes");
    if (synthetic.noise_scale < 0) fail("synthetic noise_scale must be >= 0");
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string ExperimentConfig::to_toml() const {
  std::ostringstream os;
  os << "name = " << name << "\n";
  os << "loss = " << loss_name(loss) << "\n";
  os << "reward = " << (reward == RewardKind::neg_ce ? "neg_ce" : "accuracy") << "\n";
  os << "vocab = " << vocab << "\n";
  os << "max_len = " << max_len << "\n";
  os << "hidden_speaker = " << hidden_speaker << "\n";
  os << "hidden_listener = " << hidden_listener << "\n";
  os << "embed_dim = " << embed_dim << "\n";
  os << "temperature = " << fmt_double(temperature) << "\n";
  os << "speaker_reembed = " << (speaker_reembed ? "true" : "false") << "\n";
  os << "lr_speaker = " << fmt_double(lr_speaker) << "\n";
  os << "lr_listener = " << fmt_double(lr_listener) << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "epochs = " << epochs << "\n";
  os << "lambda_entropy = " << fmt_double(lambda_entropy) << "\n";
  os << "softrank_epsilon = " << fmt_double(softrank_epsilon) << "\n";
  os << "softrank_standardize = " << (softrank_standardize ? "true" : "false") << "\n";
  os << "n_cand = " << n_cand << "\n";
  os << "embeddings_path = " << embeddings_path << "\n";
  os << "labels_path = " << labels_path << "\n";
  os << "synthetic_attributes = " << synthetic.n_attributes << "\n";
  os << "synthetic_values = " << synthetic.n_values << "\n";
  os << "synthetic_items_per_category = " << synthetic.items_per_category << "\n";
  os << "synthetic_embed_dim = " << synthetic.embed_dim << "\n";
  os << "synthetic_noise_scale = " << fmt_double(synthetic.noise_scale) << "\n";
  os << "synthetic_projection_seed = " << synthetic.projection_seed << "\n";
  os << "data_seed = " << data_seed << "\n";
  os << "noise_pair_count = " << noise_pair_count << "\n";
  os << "wino_pair_count = " << wino_pair_count << "\n";
  os << "seeds =";
  for (size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : " ") << seeds[i];
  os << "\n";
  os << "out_dir = " << out_dir << "\n";
  os << "workers = " << workers << "\n";
  os << "svg = " << (svg ? "true" : "false") << "\n";
  return os.str();
}

namespace {

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("config: bad integer for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    unsigned long long out = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return out;
  } catch (...) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "name") name = value;
  else if (key == "loss") loss = loss_from_name(value);
  else if (key == "reward") {
    if (value == "neg_ce") reward = RewardKind::neg_ce;
    else if (value == "accuracy") reward = RewardKind::accuracy;
    else throw std::invalid_argument("config: unknown reward '" + value + "'");
  }
  else if (key == "vocab") vocab = parse_int(key, value);
  else if (key == "max_len") max_len = parse_int(key, value);
  else if (key == "hidden_speaker") hidden_speaker = parse_int(key, value);
  else if (key == "hidden_listener") hidden_listener = parse_int(key, value);
  else if (key == "embed_dim") embed_dim = parse_int(key, value);
  else if (key == "temperature") temperature = parse_double(key, value);
  else if (key == "speaker_reembed") speaker_reembed = parse_bool(key, value);
  else if (key == "lr_speaker") lr_speaker = parse_double(key, value);
  else if (key == "lr_listener") lr_listener = parse_double(key, value);
  else if (key == "batch_size") batch_size = parse_int(key, value);
  else if (key == "epochs") epochs = parse_int(key, value);
  else if (key == "lambda_entropy") lambda_entropy = parse_double(key, value);
  else if (key == "softrank_epsilon") softrank_epsilon = parse_double(key, value);
  else if (key == "softrank_standardize") softrank_standardize = parse_bool(key, value);
  else if (key == "n_cand") n_cand = parse_int(key, value);
  else if (key == "embeddings_path") embeddings_path = value;
  else if (key == "labels_path") labels_path = value;
  else if (key == "synthetic_attributes") synthetic.n_attributes = parse_int(key, value);
  else if (key == "synthetic_values") synthetic.n_values = parse_int(key, value);
  else if (key == "synthetic_items_per_category") synthetic.items_per_category = parse_int(key, value);
  else if (key == "synthetic_embed_dim") synthetic.embed_dim = parse_int(key, value);
  else if (key == "synthetic_noise_scale") synthetic.noise_scale = parse_double(key, value);
  else if (key == "synthetic_projection_seed") synthetic.projection_seed = parse_u64(key, value);
  else if (key == "data_seed") data_seed = parse_u64(key, value);
  else if (key == "noise_pair_count") noise_pair_count = parse_int(key, value);
  else if (key == "wino_pair_count") wino_pair_count = parse_int(key, value);
  else if (key == "seeds") {
    seeds.clear();
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) seeds.push_back(parse_u64(key, tok));
    }
    if (seeds.empty()) throw std::invalid_argument("config: empty seed list");
  }
  else if (key == "out_dir") out_dir = value;
  else if (key == "workers") workers = parse_int(key, value);
  else if (key == "svg") svg = parse_bool(key, value);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_toml_text(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not 'key = value': " + t);
    c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

ExperimentConfig ExperimentConfig::from_toml_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return from_toml_text(buf.str());
}

}  // namespace refgame
