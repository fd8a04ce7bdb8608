#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "bicl/corpus.hpp"
#include "bicl/embedding.hpp"
#include "bicl/errors.hpp"
#include "bicl/synthetic.hpp"

using namespace bicl;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bicl_corpus_test_" + name)).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

Conversation make_conversation(const std::vector<std::pair<std::string, std::string>>& turns,
                               const std::vector<int>* labels = nullptr) {
  Conversation c;
  c.id = "t";
  for (std::size_t i = 0; i < turns.size(); ++i) {
    Utterance u;
    u.index = static_cast<int>(i);
    u.speaker = turns[i].first;
    u.text = turns[i].second;
    u.tokens = tokenize(u.text);
    if (labels) u.session_id = (*labels)[i];
    c.utterances.push_back(std::move(u));
  }
  return c;
}

}  // namespace

TEST_CASE("tokenize splits on whitespace and punctuation") {
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"hello", ",", "world", "!"});
}

TEST_CASE("tokenize truncates to the maximum length") {
  std::string text;
  for (int i = 0; i < 80; ++i) text += "w" + std::to_string(i) + " ";
  const auto tokens = tokenize(text);
  CHECK(tokens.size() == 50);
  CHECK(tokens[0] == "w0");
  CHECK(tokens[49] == "w49");
}

TEST_CASE("tokenize of empty text yields the <empty> token") {
  CHECK(tokenize("") == std::vector<std::string>{"<empty>"});
  CHECK(tokenize("   \t ") == std::vector<std::string>{"<empty>"});
}

TEST_CASE("load_conversations parses a minimal file") {
  const std::string path = temp_path("min.jsonl");
  write_file(path,
             R"({"id": "c1", "utterances": [{"index": 0, "speaker": "a", "text": "hi"}, {"index": 1, "speaker": "b", "text": "yo", "reply_to": 0}]})"
             "\n");
  const auto corpus = load_conversations(path);
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].id == "c1");
  REQUIRE(corpus[0].size() == 2);
  CHECK(corpus[0].utterances[1].reply_to == 0);
  CHECK(corpus[0].utterances[0].tokens == std::vector<std::string>{"hi"});
  CHECK_FALSE(corpus[0].labeled());
}

TEST_CASE("load_conversations of an empty file returns an empty list") {
  const std::string path = temp_path("empty.jsonl");
  write_file(path, "");
  CHECK(load_conversations(path).empty());
}

TEST_CASE("missing fields are rejected with the field and line named") {
  const std::string path = temp_path("missing.jsonl");
  write_file(path, R"({"id": "ok", "utterances": [{"index": 0, "speaker": "a", "text": "x"}]})"
                   "\n"
                   R"({"id": "bad", "utterances": [{"index": 0, "text": "x"}]})"
                   "\n");
  CHECK_THROWS_WITH_AS(load_conversations(path), doctest::Contains("speaker"), DataError);
  CHECK_THROWS_WITH_AS(load_conversations(path), doctest::Contains(":2"), DataError);
}

TEST_CASE("malformed JSON is rejected with the line number") {
  const std::string path = temp_path("malformed.jsonl");
  write_file(path, "{\"id\": \"c\", \"utterances\": [  \n");
  CHECK_THROWS_WITH_AS(load_conversations(path), doctest::Contains(":1"), DataError);
}

TEST_CASE("non-contiguous indices are rejected") {
  const std::string path = temp_path("indices.jsonl");
  write_file(path,
             R"({"id": "c", "utterances": [{"index": 0, "speaker": "a", "text": "x"}, {"index": 2, "speaker": "b", "text": "y"}]})"
             "\n");
  CHECK_THROWS_WITH_AS(load_conversations(path), doctest::Contains("contiguous"), DataError);
}

TEST_CASE("partially labeled conversations are rejected") {
  const std::string path = temp_path("partial.jsonl");
  write_file(path,
             R"({"id": "c", "utterances": [{"index": 0, "speaker": "a", "text": "x", "session_id": 0}, {"index": 1, "speaker": "b", "text": "y"}]})"
             "\n");
  CHECK_THROWS_WITH_AS(load_conversations(path), doctest::Contains("partially labeled"), DataError);
}

TEST_CASE("write then load round-trips conversations") {
  const std::vector<int> labels{7, 7, 3, 9};
  Conversation c = make_conversation({{"a", "one"}, {"a", "two"}, {"b", "three"}, {"c", "four"}}, &labels);
  const std::string path = temp_path("roundtrip.jsonl");
  write_conversations(path, {c});
  const auto loaded = load_conversations(path);
  REQUIRE(loaded.size() == 1);
  REQUIRE(loaded[0].size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(loaded[0].utterances[i].speaker == c.utterances[i].speaker);
    CHECK(loaded[0].utterances[i].text == c.utterances[i].text);
    CHECK(loaded[0].utterances[i].session_id == c.utterances[i].session_id);
  }
}

TEST_CASE("segment cuts into windows and relabels by first appearance") {
  Conversation c;
  c.id = "long";
  for (int i = 0; i < 120; ++i) {
    Utterance u;
    u.index = i;
    u.speaker = "s" + std::to_string(i % 7);
    u.text = "msg " + std::to_string(i);
    u.session_id = i % 3 + 40;  // raw ids need not start at 0
    c.utterances.push_back(std::move(u));
  }
  const auto segs = segment(c, 50);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].size() == 50);
  CHECK(segs[1].size() == 50);
  CHECK(segs[2].size() == 20);
  for (const auto& seg : segs) {
    // indices rebased, labels exactly {0..k-1}
    std::set<int> ids;
    for (int i = 0; i < seg.size(); ++i) {
      CHECK(seg.utterances[i].index == i);
      ids.insert(*seg.utterances[i].session_id);
    }
    for (int expect = 0; expect < static_cast<int>(ids.size()); ++expect) CHECK(ids.count(expect) == 1);
  }
  // concatenating the segments reproduces the original text sequence
  std::vector<std::string> rebuilt;
  for (const auto& seg : segs)
    for (const auto& u : seg.utterances) rebuilt.push_back(u.text);
  for (int i = 0; i < 120; ++i) CHECK(rebuilt[i] == c.utterances[i].text);
}

TEST_CASE("segment relabels gold ids in order of first appearance") {
  const std::vector<int> labels{7, 7, 3, 9};
  Conversation c = make_conversation({{"a", "w"}, {"b", "x"}, {"c", "y"}, {"d", "z"}}, &labels);
  const auto segs = segment(c, 50);
  REQUIRE(segs.size() == 1);
  CHECK(*segs[0].utterances[0].session_id == 0);
  CHECK(*segs[0].utterances[1].session_id == 0);
  CHECK(*segs[0].utterances[2].session_id == 1);
  CHECK(*segs[0].utterances[3].session_id == 2);
}

TEST_CASE("an under-length conversation yields one unchanged segment") {
  Conversation c = make_conversation({{"a", "1"}, {"b", "2"}});
  const auto segs = segment(c, 50);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].id == c.id);
  CHECK(segs[0].size() == 2);
}

TEST_CASE("mention vector marks same-speaker positions including self") {
  Conversation c = make_conversation({{"alice", "hi"}, {"alice", "again"}});
  const auto m0 = build_mention_vector(c, 0);
  const auto m1 = build_mention_vector(c, 1);
  CHECK(m0[0] == 1.0);
  CHECK(m0[1] == 1.0);
  CHECK(m1[0] == 1.0);
  CHECK(m1[1] == 1.0);
  for (int j = 2; j < kWindow; ++j) {
    CHECK(m0[j] == 0.0);
    CHECK(m1[j] == 0.0);
  }
}

TEST_CASE("mention vector marks speakers mentioned in the text") {
  Conversation c = make_conversation({{"bob", "hello"}, {"carol", "hm"}, {"dave", "ask Bob about it"}});
  const auto m2 = build_mention_vector(c, 2);
  CHECK(m2[0] == 1.0);  // "Bob" mentioned, case-insensitive
  CHECK(m2[1] == 0.0);
  CHECK(m2[2] == 1.0);  // self
}

TEST_CASE("distinct speakers with no mentions mark only the self position") {
  Conversation c = make_conversation({{"a", "one"}, {"b", "two"}, {"c", "three"}});
  for (int i = 0; i < 3; ++i) {
    const auto m = build_mention_vector(c, i);
    for (int j = 0; j < kWindow; ++j) CHECK(m[j] == (i == j ? 1.0 : 0.0));
  }
}

TEST_CASE("mention vector rejects out-of-range indices") {
  Conversation c = make_conversation({{"a", "x"}});
  CHECK_THROWS_AS(build_mention_vector(c, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_mention_vector(c, -1), std::invalid_argument);
}

TEST_CASE("embedding table loads the text format and is deterministic on OOV") {
  const std::string path = temp_path("emb.txt");
  write_file(path, "alpha 1.0 2.0 3.0\nbeta -0.5 0.25 0.125\n");
  const EmbeddingTable table = EmbeddingTable::load(path);
  CHECK(table.dimension() == 3);
  CHECK(table.lookup("alpha") == std::vector<double>{1.0, 2.0, 3.0});
  const auto oov1 = table.lookup("unknown-word");
  const auto oov2 = table.lookup("unknown-word");
  CHECK(oov1 == oov2);
  CHECK(oov1.size() == 3);
  for (double v : oov1) {
    CHECK(v >= -0.1);
    CHECK(v <= 0.1);
  }
  CHECK(table.lookup("unknown-word") != table.lookup("other-word"));
}

TEST_CASE("embedding table rejects ragged files") {
  const std::string path = temp_path("embbad.txt");
  write_file(path, "alpha 1.0 2.0 3.0\nbeta 1.0\n");
  CHECK_THROWS_WITH_AS(EmbeddingTable::load(path), doctest::Contains(":2"), DataError);
}

TEST_CASE("generator with a single session per conversation never entangles") {
  SyntheticSpec spec;
  spec.num_conversations = 5;
  spec.sessions_min = spec.sessions_max = 1;
  spec.vocabulary_size = 50;
  spec.topic_words_per_session = 10;
  const auto corpus = generate_synthetic(spec, 1);
  REQUIRE(corpus.size() == 5);
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) CHECK(*u.session_id == 0);
  }
}

TEST_CASE("generator is deterministic given spec and seed") {
  SyntheticSpec spec;
  spec.num_conversations = 4;
  const auto a = generate_synthetic(spec, 9);
  const auto b = generate_synthetic(spec, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    REQUIRE(a[c].size() == b[c].size());
    for (int i = 0; i < a[c].size(); ++i) {
      CHECK(a[c].utterances[i].speaker == b[c].utterances[i].speaker);
      CHECK(a[c].utterances[i].text == b[c].utterances[i].text);
      CHECK(a[c].utterances[i].session_id == b[c].utterances[i].session_id);
    }
  }
  CHECK(generate_synthetic(spec, 10)[0].utterances[0].text != a[0].utterances[0].text);
}

TEST_CASE("generator session order is preserved within sessions") {
  SyntheticSpec spec;
  spec.num_conversations = 10;
  const auto corpus = generate_synthetic(spec, 3);
  // session ids must appear with non-decreasing within-session positions by
  // construction; verify indices are 0..n-1
  for (const auto& conv : corpus) {
    for (int i = 0; i < conv.size(); ++i) CHECK(conv.utterances[i].index == i);
  }
}

TEST_CASE("measured speaker overlap tracks the configured probability") {
  SyntheticSpec spec;
  spec.num_conversations = 1000;
  spec.sessions_min = 2;
  spec.sessions_max = 4;
  spec.session_length_min = 6;
  spec.session_length_max = 10;
  spec.speaker_overlap_probability = 0.2;
  const auto corpus = generate_synthetic(spec, 17);
  long multi = 0, total = 0;
  for (const auto& conv : corpus) {
    std::map<std::string, std::set<int>> sessions_by_speaker;
    for (const auto& u : conv.utterances) sessions_by_speaker[u.speaker].insert(*u.session_id);
    for (const auto& [spk, sessions] : sessions_by_speaker) {
      ++total;
      if (sessions.size() > 1) ++multi;
    }
  }
  const double rate = static_cast<double>(multi) / static_cast<double>(total);
  CHECK(rate > 0.15);
  CHECK(rate < 0.25);
}

TEST_CASE("degenerate generator specs are rejected") {
  SyntheticSpec spec;
  spec.vocabulary_size = 0;
  CHECK_THROWS_AS(generate_synthetic(spec, 1), std::invalid_argument);
  SyntheticSpec small;
  small.vocabulary_size = 10;
  small.topic_words_per_session = 8;
  small.sessions_max = 4;
  CHECK_THROWS_AS(generate_synthetic(small, 1), std::invalid_argument);
}

TEST_CASE("topic vocabularies are disjoint across sessions of a conversation") {
  SyntheticSpec spec;
  spec.num_conversations = 20;
  const auto corpus = generate_synthetic(spec, 21);
  for (const auto& conv : corpus) {
    std::map<int, std::set<std::string>> words_by_session;
    for (const auto& u : conv.utterances) {
      for (const auto& t : u.tokens) words_by_session[*u.session_id].insert(t);
    }
    for (auto it = words_by_session.begin(); it != words_by_session.end(); ++it) {
      for (auto jt = std::next(it); jt != words_by_session.end(); ++jt) {
        for (const auto& w : it->second) CHECK(jt->second.count(w) == 0);
      }
    }
  }
}
