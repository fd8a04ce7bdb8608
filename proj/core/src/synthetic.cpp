#include "bicl/synthetic.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "bicl/errors.hpp"
#include "bicl/kvconfig.hpp"
#include "bicl/rng.hpp"

namespace bicl {

namespace {

const char* kSyllables[] = {"ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du", "ka", "ke", "ki",
                            "ko", "ku", "la", "le", "li", "lo", "lu", "ma", "me", "mi", "mo", "mu", "na",
                            "ne", "ni", "no", "nu", "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so",
                            "su", "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu"};
constexpr int kSyllableCount = 50;

std::string pseudoword(int i) {
  std::string w;
  w += kSyllables[i % kSyllableCount];
  w += kSyllables[(i / kSyllableCount) % kSyllableCount];
  w += kSyllables[(i / (kSyllableCount * kSyllableCount)) % kSyllableCount];
  return w;
}

std::string speaker_name(int global_id, std::mt19937_64& rng) {
  std::string name = kSyllables[uniform_below(rng, kSyllableCount)];
  name += kSyllables[uniform_below(rng, kSyllableCount)];
  name += std::to_string(global_id);
  return name;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (num_conversations < 1) throw std::invalid_argument("num_conversations must be positive");
  if (sessions_min < 1 || sessions_min > sessions_max)
    throw std::invalid_argument("sessions_per_conversation range is empty");
  if (session_length_min < 1 || session_length_min > session_length_max)
    throw std::invalid_argument("session_length range is empty");
  if (vocabulary_size < 1) throw std::invalid_argument("vocabulary must be non-empty");
  if (topic_words_per_session < 1) throw std::invalid_argument("topic_words_per_session must be positive");
  if (vocabulary_size < sessions_max * topic_words_per_session)
    throw std::invalid_argument("vocabulary_size " + std::to_string(vocabulary_size) +
                                " too small for " + std::to_string(sessions_max) + " disjoint topics of " +
                                std::to_string(topic_words_per_session) + " words");
  if (speaker_overlap_probability < 0.0 || speaker_overlap_probability > 1.0)
    throw std::invalid_argument("speaker_overlap_probability must be in [0, 1]");
}

SyntheticSpec SyntheticSpec::from_kv(const std::map<std::string, std::string>& kv) {
  static const std::set<std::string> known = {
      "num_conversations", "sessions_min",           "sessions_max",
      "session_length_min", "session_length_max",    "vocabulary_size",
      "topic_words_per_session", "speaker_overlap_probability"};
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw DataError("unknown generator spec key '" + k + "'");
  }
  SyntheticSpec s;
  s.num_conversations = kv_int(kv, "num_conversations", s.num_conversations);
  s.sessions_min = kv_int(kv, "sessions_min", s.sessions_min);
  s.sessions_max = kv_int(kv, "sessions_max", s.sessions_max);
  s.session_length_min = kv_int(kv, "session_length_min", s.session_length_min);
  s.session_length_max = kv_int(kv, "session_length_max", s.session_length_max);
  s.vocabulary_size = kv_int(kv, "vocabulary_size", s.vocabulary_size);
  s.topic_words_per_session = kv_int(kv, "topic_words_per_session", s.topic_words_per_session);
  s.speaker_overlap_probability = kv_double(kv, "speaker_overlap_probability", s.speaker_overlap_probability);
  return s;
}

std::map<std::string, std::string> SyntheticSpec::to_kv() const {
  return {
      {"num_conversations", std::to_string(num_conversations)},
      {"sessions_min", std::to_string(sessions_min)},
      {"sessions_max", std::to_string(sessions_max)},
      {"session_length_min", std::to_string(session_length_min)},
      {"session_length_max", std::to_string(session_length_max)},
      {"vocabulary_size", std::to_string(vocabulary_size)},
      {"topic_words_per_session", std::to_string(topic_words_per_session)},
      {"speaker_overlap_probability", std::to_string(speaker_overlap_probability)},
  };
}

std::vector<Conversation> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(hash_mix(seed));
  int next_speaker_id = 0;

  // The vocabulary is partitioned into global topics of
  // topic_words_per_session words each; a session talks about one topic, and
  // the same topics recur across conversations. Sessions within one
  // conversation get distinct topics, so their vocabularies are disjoint.
  const int num_topics = spec.vocabulary_size / spec.topic_words_per_session;

  std::vector<Conversation> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.num_conversations));
  for (int c = 0; c < spec.num_conversations; ++c) {
    const int k = uniform_int(rng, spec.sessions_min, spec.sessions_max);

    const std::vector<int> topic_ids = sample_without_replacement(rng, num_topics, k);
    std::vector<std::vector<std::string>> topics(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
      for (int w = 0; w < spec.topic_words_per_session; ++w)
        topics[static_cast<std::size_t>(s)].push_back(
            pseudoword(topic_ids[static_cast<std::size_t>(s)] * spec.topic_words_per_session + w));
    }

    std::vector<int> lengths(static_cast<std::size_t>(k));
    for (int& l : lengths) l = uniform_int(rng, spec.session_length_min, spec.session_length_max);

    // Fresh per-session speaker rosters, then cross-membership for the
    // overlap fraction. Roster size scales with the session so speakers
    // typically take a few turns each.
    std::vector<std::vector<std::string>> rosters(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
      const int len = lengths[static_cast<std::size_t>(s)];
      const int roster_size = std::max(2, std::min(uniform_int(rng, len / 3 + 1, len / 2 + 1), len));
      for (int r = 0; r < roster_size; ++r)
        rosters[static_cast<std::size_t>(s)].push_back(speaker_name(next_speaker_id++, rng));
    }
    if (k >= 2) {
      const std::vector<std::vector<std::string>> fresh = rosters;
      for (int s = 0; s < k; ++s) {
        for (const std::string& sp : fresh[static_cast<std::size_t>(s)]) {
          if (uniform01(rng) < spec.speaker_overlap_probability) {
            int t = uniform_int(rng, 0, k - 2);
            if (t >= s) ++t;
            rosters[static_cast<std::size_t>(t)].push_back(sp);
          }
        }
      }
    }

    // Per-session speaker sequence: every roster member speaks at least once
    // (when the session is long enough), remaining turns drawn uniformly.
    std::vector<std::vector<Utterance>> sessions(static_cast<std::size_t>(k));
    for (int s = 0; s < k; ++s) {
      const auto& roster = rosters[static_cast<std::size_t>(s)];
      const int len = lengths[static_cast<std::size_t>(s)];
      std::vector<std::string> turn_speakers = roster;
      shuffle(turn_speakers, rng);
      if (static_cast<int>(turn_speakers.size()) > len) turn_speakers.resize(static_cast<std::size_t>(len));
      while (static_cast<int>(turn_speakers.size()) < len)
        turn_speakers.push_back(roster[uniform_below(rng, roster.size())]);
      shuffle(turn_speakers, rng);

      const auto& topic = topics[static_cast<std::size_t>(s)];
      for (int i = 0; i < len; ++i) {
        Utterance u;
        u.speaker = turn_speakers[static_cast<std::size_t>(i)];
        const int words = uniform_int(rng, 4, 9);
        for (int w = 0; w < words; ++w) {
          if (w) u.text += ' ';
          u.text += topic[uniform_below(rng, topic.size())];
        }
        u.session_id = s;
        u.tokens = tokenize(u.text);
        sessions[static_cast<std::size_t>(s)].push_back(std::move(u));
      }
    }

    // Uniform random interleaving that preserves within-session order.
    std::vector<int> order;
    for (int s = 0; s < k; ++s) order.insert(order.end(), static_cast<std::size_t>(lengths[static_cast<std::size_t>(s)]), s);
    shuffle(order, rng);

    Conversation conv;
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06d", c);
    conv.id = id;
    std::vector<std::size_t> cursor(static_cast<std::size_t>(k), 0);
    for (int pos = 0; pos < static_cast<int>(order.size()); ++pos) {
      const int s = order[static_cast<std::size_t>(pos)];
      Utterance u = std::move(sessions[static_cast<std::size_t>(s)][cursor[static_cast<std::size_t>(s)]++]);
      u.index = pos;
      conv.utterances.push_back(std::move(u));
    }
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

EmbeddingTable synthetic_embeddings(const SyntheticSpec& spec, int dimension, std::uint64_t seed) {
  spec.validate();
  if (dimension < 1) throw std::invalid_argument("embedding dimension must be positive");
  const int num_topics = spec.vocabulary_size / spec.topic_words_per_session;

  EmbeddingTable table(dimension, seed);
  std::mt19937_64 rng(hash_combine(hash_mix(seed), 0xE3Bu));
  for (int t = 0; t < num_topics; ++t) {
    // topic base direction, unit length
    std::vector<double> base(static_cast<std::size_t>(dimension));
    double norm = 0.0;
    for (double& x : base) {
      x = uniform_real(rng, -1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : base) x /= norm;

    for (int w = 0; w < spec.topic_words_per_session; ++w) {
      std::vector<double> vec(static_cast<std::size_t>(dimension));
      for (std::size_t d = 0; d < vec.size(); ++d) vec[d] = 1.2 * base[d] + uniform_real(rng, -1.0, 1.0);
      table.insert(pseudoword(t * spec.topic_words_per_session + w), std::move(vec));
    }
  }
  return table;
}

}  // namespace bicl
