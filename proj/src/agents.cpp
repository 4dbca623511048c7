#include "refgame/agents.hpp"

#include <algorithm>
#include <stdexcept>

namespace refgame {

namespace {

// One symbol per row: sampled from the distribution in train mode, argmax
// (lowest index wins ties) in eval mode.
std::vector<int> choose_symbols(const Tensor& probs, Mode mode, Rng& rng) {
  int batch = probs.dim(0), vocab = probs.dim(1);
  std::vector<int> out(static_cast<size_t>(batch));
  for (int b = 0; b < batch; ++b) {
    const double* row = probs.data() + static_cast<size_t>(b) * vocab;
    if (mode == Mode::train) {
      out[static_cast<size_t>(b)] = rng.categorical(row, vocab);
    } else {
      int best = 0;
      for (int v = 1; v < vocab; ++v)
        if (row[v] > row[best]) best = v;
      out[static_cast<size_t>(b)] = best;
    }
  }
  return out;
}

}  // namespace

// ---- SpeakerAgent ------------------------------------------------------------

SpeakerAgent SpeakerAgent::init(int input_dim, int hidden, int vocab, int embed_dim,
                                int max_len, bool reembed_representation, Rng& rng) {
  if (vocab < 2)
    throw std::invalid_argument("speaker: vocabulary must hold EOS plus at least one symbol");
  if (max_len < 1) throw std::invalid_argument("speaker: max_len must be >= 1");
  SpeakerAgent s;
  s.repr_layer = LinearLayer::init(input_dim, hidden, rng);
  s.repr_norm = BatchNormLayer::init(hidden);
  s.symbol_embed = EmbeddingTable::init(vocab, embed_dim, rng);
  s.generator = GruCell::init(embed_dim, hidden, rng);
  s.output_proj = LinearLayer::init(hidden, vocab, rng);
  std::vector<double> bos(static_cast<size_t>(embed_dim));
  for (double& x : bos) x = rng.uniform(-0.1, 0.1);
  s.bos_embedding = Tensor::param({embed_dim}, std::move(bos));
  if (reembed_representation) s.reembed = LinearLayer::init(hidden, hidden, rng);
  s.vocab = vocab;
  s.max_len = max_len;
  return s;
}

Tensor SpeakerAgent::represent(const Tensor& embeddings, Mode mode) {
  return repr_norm.forward(repr_layer.forward(embeddings), mode);
}

GenerationResult SpeakerAgent::generate(const Tensor& r_s, Mode mode, Rng& rng) const {
  int batch = r_s.dim(0);
  Tensor h = reembed ? reembed->forward(r_s) : r_s;
  // first input is the learned BOS embedding, broadcast across the batch
  Tensor x = add(Tensor::zeros({batch, bos_embedding.dim(0)}), bos_embedding);

  GenerationResult out;
  out.messages.assign(static_cast<size_t>(batch), {});
  Tensor log_prob_sum = Tensor::zeros({batch});
  Tensor entropy_sum = Tensor::zeros({batch});
  std::vector<double> active(static_cast<size_t>(batch), 1.0);
  std::vector<double> steps(static_cast<size_t>(batch), 0.0);

  for (int t = 0; t < max_len; ++t) {
    h = generator.step(x, h);
    Tensor logits = output_proj.forward(h);
    Tensor logp = log_softmax(logits);
    Tensor probs = softmax(logits);
    std::vector<int> symbols = choose_symbols(probs, mode, rng);

    Tensor mask = Tensor::from({batch}, active);
    log_prob_sum = add(log_prob_sum, mul(pick(logp, symbols), mask));
    Tensor step_entropy = reshape(neg(sum(mul(probs, logp), 1)), {batch});
    entropy_sum = add(entropy_sum, mul(step_entropy, mask));

    for (int b = 0; b < batch; ++b) {
      if (active[static_cast<size_t>(b)] == 0.0) continue;
      steps[static_cast<size_t>(b)] += 1.0;
      out.messages[static_cast<size_t>(b)].symbols.push_back(symbols[static_cast<size_t>(b)]);
      if (symbols[static_cast<size_t>(b)] == Message::kEos) active[static_cast<size_t>(b)] = 0.0;
    }
    bool any_active = std::any_of(active.begin(), active.end(),
                                  [](double a) { return a != 0.0; });
    if (!any_active) break;
    x = symbol_embed.lookup(symbols);
  }
  out.log_probs = log_prob_sum;
  out.entropies = div(entropy_sum, Tensor::from({batch}, steps));
  return out;
}

std::vector<Tensor> SpeakerAgent::params() const {
  std::vector<Tensor> p;
  repr_layer.collect_params(p);
  repr_norm.collect_params(p);
  symbol_embed.collect_params(p);
  generator.collect_params(p);
  output_proj.collect_params(p);
  p.push_back(bos_embedding);
  if (reembed) reembed->collect_params(p);
  return p;
}

// ---- ListenerAgent -----------------------------------------------------------

ListenerAgent ListenerAgent::init(int input_dim, int hidden, int vocab, int embed_dim,
                                  double temperature, Rng& rng) {
  if (temperature <= 0.0)
    throw std::invalid_argument("listener: temperature must be positive, got " +
                                std::to_string(temperature));
  ListenerAgent l;
  l.repr_layer = LinearLayer::init(input_dim, hidden, rng);
  l.repr_norm = BatchNormLayer::init(hidden);
  l.symbol_embed = EmbeddingTable::init(vocab, embed_dim, rng);
  l.encoder = GruCell::init(embed_dim, hidden, rng);
  l.temperature = temperature;
  l.vocab = vocab;
  return l;
}

Tensor ListenerAgent::represent(const Tensor& embeddings, Mode mode) {
  return repr_norm.forward(repr_layer.forward(embeddings), mode);
}

Tensor ListenerAgent::encode(const std::vector<Message>& messages) const {
  int batch = static_cast<int>(messages.size());
  if (batch == 0) throw std::invalid_argument("listener: no messages to encode");
  size_t max_steps = 1;
  for (const Message& m : messages) {
    for (int s : m.symbols)
      if (s < 0 || s >= vocab)
        throw std::out_of_range("listener: symbol " + std::to_string(s) +
                                " outside vocabulary of " + std::to_string(vocab));
    max_steps = std::max(max_steps, m.symbols.size());
  }
  Tensor h = Tensor::zeros({batch, encoder.hidden_dim()});
  for (size_t t = 0; t < max_steps; ++t) {
    std::vector<int> ids(static_cast<size_t>(batch), Message::kEos);
    std::vector<double> mask(static_cast<size_t>(batch), 0.0);
    for (int b = 0; b < batch; ++b) {
      const auto& sym = messages[static_cast<size_t>(b)].symbols;
      if (t < sym.size()) {
        ids[static_cast<size_t>(b)] = sym[t];
        mask[static_cast<size_t>(b)] = 1.0;
      }
    }
    Tensor x = symbol_embed.lookup(ids);
    Tensor h_next = encoder.step(x, h);
    Tensor m = Tensor::from({batch, 1}, mask);
    h = add(mul(m, h_next), mul(sub(Tensor::scalar(1.0), m), h));
  }
  return h;
}

std::vector<Tensor> ListenerAgent::params() const {
  std::vector<Tensor> p;
  repr_layer.collect_params(p);
  repr_norm.collect_params(p);
  symbol_embed.collect_params(p);
  encoder.collect_params(p);
  return p;
}

Tensor listener_score(const Tensor& msg_enc, const Tensor& cand_reprs,
                      int n_cand, double temperature) {
  if (temperature <= 0.0)
    throw std::invalid_argument("listener_score: temperature must be positive");
  int batch = msg_enc.dim(0);
  if (cand_reprs.dim(0) != batch * n_cand || cand_reprs.dim(1) != msg_enc.dim(1))
    throw std::invalid_argument("listener_score: candidates " +
                                shape_str(cand_reprs.shape()) +
                                " do not match encodings " +
                                shape_str(msg_enc.shape()) + " with " +
                                std::to_string(n_cand) + " candidates");
  std::vector<int> tile(static_cast<size_t>(batch * n_cand));
  for (int b = 0; b < batch; ++b)
    for (int c = 0; c < n_cand; ++c) tile[static_cast<size_t>(b * n_cand + c)] = b;
  Tensor tiled = gather_rows(msg_enc, tile);
  Tensor dots = sum(mul(tiled, cand_reprs), 1);                     // [B*n x 1]
  Tensor norms = mul(l2_norm_rows(tiled), l2_norm_rows(cand_reprs));
  Tensor cos = div(dots, norms);
  Tensor scores = div(reshape(cos, {batch, n_cand}), Tensor::scalar(temperature));
  return softmax(scores);
}

// ---- AgentPair ----------------------------------------------------------------

AgentPair AgentPair::init(int input_dim, int speaker_hidden, int listener_hidden,
                          int vocab, int embed_dim, int max_len, double temperature,
                          bool reembed_representation, Rng& rng) {
  AgentPair pair;
  pair.speaker = SpeakerAgent::init(input_dim, speaker_hidden, vocab, embed_dim,
                                    max_len, reembed_representation, rng);
  pair.listener = ListenerAgent::init(input_dim, listener_hidden, vocab, embed_dim,
                                      temperature, rng);
  return pair;
}

namespace {

struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;
  void add(const std::string& name, const Tensor& t) { items.emplace_back(name, t); }
};

NamedTensors named_params(const AgentPair& pair) {
  NamedTensors n;
  const SpeakerAgent& s = pair.speaker;
  n.add("speaker.repr.weight", s.repr_layer.weight);
  n.add("speaker.repr.bias", s.repr_layer.bias);
  n.add("speaker.norm.gamma", s.repr_norm.gamma);
  n.add("speaker.norm.beta", s.repr_norm.beta);
  n.add("speaker.embed.table", s.symbol_embed.table);
  n.add("speaker.gru.w_z", s.generator.w_z);
  n.add("speaker.gru.w_r", s.generator.w_r);
  n.add("speaker.gru.w_h", s.generator.w_h);
  n.add("speaker.gru.u_z", s.generator.u_z);
  n.add("speaker.gru.u_r", s.generator.u_r);
  n.add("speaker.gru.u_h", s.generator.u_h);
  n.add("speaker.gru.b_z", s.generator.b_z);
  n.add("speaker.gru.b_r", s.generator.b_r);
  n.add("speaker.gru.b_h", s.generator.b_h);
  n.add("speaker.proj.weight", s.output_proj.weight);
  n.add("speaker.proj.bias", s.output_proj.bias);
  n.add("speaker.bos", s.bos_embedding);
  if (s.reembed) {
    n.add("speaker.reembed.weight", s.reembed->weight);
    n.add("speaker.reembed.bias", s.reembed->bias);
  }
  const ListenerAgent& l = pair.listener;
  n.add("listener.repr.weight", l.repr_layer.weight);
  n.add("listener.repr.bias", l.repr_layer.bias);
  n.add("listener.norm.gamma", l.repr_norm.gamma);
  n.add("listener.norm.beta", l.repr_norm.beta);
  n.add("listener.embed.table", l.symbol_embed.table);
  n.add("listener.gru.w_z", l.encoder.w_z);
  n.add("listener.gru.w_r", l.encoder.w_r);
  n.add("listener.gru.w_h", l.encoder.w_h);
  n.add("listener.gru.u_z", l.encoder.u_z);
  n.add("listener.gru.u_r", l.encoder.u_r);
  n.add("listener.gru.u_h", l.encoder.u_h);
  n.add("listener.gru.b_z", l.encoder.b_z);
  n.add("listener.gru.b_r", l.encoder.b_r);
  n.add("listener.gru.b_h", l.encoder.b_h);
  return n;
}

}  // namespace

void AgentPair::save_checkpoint(const std::string& path) const {
  Checkpoint ck;
  for (const auto& [name, t] : named_params(*this).items) ck.add(name, t);
  ck.add("speaker.norm.running_mean", {speaker.repr_norm.features()},
         speaker.repr_norm.running_mean);
  ck.add("speaker.norm.running_var", {speaker.repr_norm.features()},
         speaker.repr_norm.running_var);
  ck.add("listener.norm.running_mean", {listener.repr_norm.features()},
         listener.repr_norm.running_mean);
  ck.add("listener.norm.running_var", {listener.repr_norm.features()},
         listener.repr_norm.running_var);
  ck.save(path);
}

void AgentPair::load_checkpoint(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  for (auto& [name, t] : named_params(*this).items) ck.load_into(name, t);
  speaker.repr_norm.running_mean = ck.find("speaker.norm.running_mean").values;
  speaker.repr_norm.running_var = ck.find("speaker.norm.running_var").values;
  listener.repr_norm.running_mean = ck.find("listener.norm.running_mean").values;
  listener.repr_norm.running_var = ck.find("listener.norm.running_var").values;
}

}  // namespace refgame
