#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"

namespace bicl {

/// Recipe for the synthetic entangled-conversation generator. Each
/// conversation interleaves independently sampled sessions; sessions draw
/// their words from disjoint topic slices of the vocabulary, and speakers are
/// disjoint across sessions except for a configurable overlap fraction.
struct SyntheticSpec {
  int num_conversations = 100;
  int sessions_min = 2;
  int sessions_max = 5;
  int session_length_min = 5;
  int session_length_max = 12;
  int vocabulary_size = 400;
  int topic_words_per_session = 12;
  double speaker_overlap_probability = 0.2;

  void validate() const;

  static SyntheticSpec from_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;
};

/// Deterministic given (spec, seed). Every utterance carries a gold
/// session_id; within-session utterance order is preserved by the
/// interleaving.
std::vector<Conversation> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Pretrained-style word vectors for the generator's vocabulary: words of one
/// topic share a base direction plus per-word noise, the way trained
/// embeddings place topically related words near each other. Pair this with
/// generate_synthetic when the training pipeline expects an embeddings file.
EmbeddingTable synthetic_embeddings(const SyntheticSpec& spec, int dimension, std::uint64_t seed);

}  // namespace bicl
