#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refgame/layers.hpp"
#include "refgame/message.hpp"
#include "refgame/rng.hpp"
#include "refgame/tensor.hpp"

namespace refgame {

struct GenerationResult {
  std::vector<Message> messages;
  Tensor log_probs;  // [batch], sum of emitted-symbol log-probabilities
  Tensor entropies;  // [batch], mean per-step entropy over emitted steps
};

// Produces messages about targets. The image representation r_s seeds the
// generator's hidden state directly; an optional learned re-embedding layer
// can be switched in between.
struct SpeakerAgent {
  LinearLayer repr_layer;   // input_dim -> hidden
  BatchNormLayer repr_norm; // hidden
  EmbeddingTable symbol_embed;  // vocab x embed_dim
  GruCell generator;        // embed_dim -> hidden
  LinearLayer output_proj;  // hidden -> vocab
  Tensor bos_embedding;     // [embed_dim]
  std::optional<LinearLayer> reembed;  // hidden -> hidden when enabled
  int vocab = 0;
  int max_len = 0;

  static SpeakerAgent init(int input_dim, int hidden, int vocab, int embed_dim,
                           int max_len, bool reembed_representation, Rng& rng);

  // r_s = batchnorm(linear(embeddings)).
  Tensor represent(const Tensor& embeddings, Mode mode);

  // Train mode samples symbols, eval mode takes the argmax; generation stops
  // at EOS or after max_len symbols.
  GenerationResult generate(const Tensor& r_s, Mode mode, Rng& rng) const;

  std::vector<Tensor> params() const;
};

// Scores candidates against the encoded message.
struct ListenerAgent {
  LinearLayer repr_layer;
  BatchNormLayer repr_norm;
  EmbeddingTable symbol_embed;
  GruCell encoder;  // embed_dim -> hidden
  double temperature = 0.1;
  int vocab = 0;

  static ListenerAgent init(int input_dim, int hidden, int vocab, int embed_dim,
                            double temperature, Rng& rng);

  Tensor represent(const Tensor& embeddings, Mode mode);

  // GRU over symbol embeddings up to and including EOS; initial hidden zero.
  Tensor encode(const std::vector<Message>& messages) const;

  std::vector<Tensor> params() const;
};

// softmax over candidates of cosine(message encoding, candidate)/temperature.
// cand_reprs is the flattened [batch*n_cand x hidden] block, row-major per
// batch row.
Tensor listener_score(const Tensor& msg_enc, const Tensor& cand_reprs,
                      int n_cand, double temperature);

struct AgentPair {
  SpeakerAgent speaker;
  ListenerAgent listener;

  static AgentPair init(int input_dim, int speaker_hidden, int listener_hidden,
                        int vocab, int embed_dim, int max_len, double temperature,
                        bool reembed_representation, Rng& rng);

  std::vector<Tensor> speaker_params() const { return speaker.params(); }
  std::vector<Tensor> listener_params() const { return listener.params(); }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);
};

}  // namespace refgame
