#include "bicl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "bicl/errors.hpp"

namespace bicl {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '\'' || c >= 0x80; }

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void fail_line(const std::string& path, std::size_t line_no, const std::string& why) {
  throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
}

}  // namespace

bool Conversation::labeled() const {
  return !utterances.empty() &&
         std::all_of(utterances.begin(), utterances.end(), [](const Utterance& u) { return u.session_id.has_value(); });
}

int Conversation::gold_session_count() const {
  if (!labeled()) throw DataError("conversation '" + id + "' has no gold session labels");
  std::set<int> ids;
  for (const Utterance& u : utterances) ids.insert(*u.session_id);
  return static_cast<int>(ids.size());
}

std::vector<int> Conversation::gold_labels() const {
  if (!labeled()) throw DataError("conversation '" + id + "' has no gold session labels");
  std::vector<int> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) out.push_back(*u.session_id);
  return out;
}

int Conversation::speaker_count() const {
  std::unordered_set<std::string> speakers;
  for (const Utterance& u : utterances) speakers.insert(u.speaker);
  return static_cast<int>(speakers.size());
}

std::vector<std::string> tokenize(const std::string& text, int max_len) {
  if (max_len < 1) throw std::invalid_argument("tokenize max_len must be positive");
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (is_word_char(c)) {
      current += static_cast<char>(std::tolower(c));
    } else {
      flush();
      tokens.push_back(std::string(1, static_cast<char>(c)));
    }
    if (static_cast<int>(tokens.size()) >= max_len) break;
  }
  flush();
  if (tokens.empty()) tokens.push_back("<empty>");
  if (static_cast<int>(tokens.size()) > max_len) tokens.resize(static_cast<std::size_t>(max_len));
  return tokens;
}

std::vector<Conversation> segment(const Conversation& conversation, int window) {
  if (window < 1) throw std::invalid_argument("segment window must be positive");
  std::vector<Conversation> segments;
  const int n = conversation.size();
  for (int start = 0; start < n; start += window) {
    const int len = std::min(window, n - start);
    Conversation seg;
    seg.id = segments.empty() && len == n ? conversation.id
                                          : conversation.id + "#w" + std::to_string(start / window);
    seg.utterances.reserve(static_cast<std::size_t>(len));
    std::map<int, int> relabel;  // gold id -> order of first appearance
    for (int i = 0; i < len; ++i) {
      Utterance u = conversation.utterances[static_cast<std::size_t>(start + i)];
      u.index = i;
      if (u.session_id) {
        auto [it, inserted] = relabel.emplace(*u.session_id, static_cast<int>(relabel.size()));
        u.session_id = it->second;
      }
      if (u.reply_to) {
        const int r = *u.reply_to - start;
        u.reply_to = (r >= 0 && r < len) ? std::optional<int>(r) : std::nullopt;
      }
      seg.utterances.push_back(std::move(u));
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<Conversation> segment_corpus(const std::vector<Conversation>& corpus, int window) {
  std::vector<Conversation> out;
  for (const Conversation& c : corpus) {
    auto segs = segment(c, window);
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  return out;
}

std::vector<double> build_mention_vector(const Conversation& conversation, int i) {
  const int n = conversation.size();
  if (i < 0 || i >= n) {
    throw std::invalid_argument("mention vector index " + std::to_string(i) + " out of range for conversation of " +
                                std::to_string(n) + " utterances");
  }
  if (n > kWindow) {
    throw std::invalid_argument("conversation of " + std::to_string(n) + " utterances exceeds the window of " +
                                std::to_string(kWindow) + "; segment it first");
  }
  const Utterance& ui = conversation.utterances[static_cast<std::size_t>(i)];
  // Mention detection is whole-token match of the (lowercased) handle.
  std::unordered_set<std::string> text_tokens;
  for (const std::string& t : tokenize(ui.text, static_cast<int>(ui.text.size()) + 1)) text_tokens.insert(t);

  std::vector<double> m(kWindow, 0.0);
  for (int j = 0; j < n; ++j) {
    const Utterance& uj = conversation.utterances[static_cast<std::size_t>(j)];
    if (uj.speaker == ui.speaker || text_tokens.count(lowercase(uj.speaker)) > 0) m[static_cast<std::size_t>(j)] = 1.0;
  }
  return m;
}

std::vector<Conversation> load_conversations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");

  std::vector<Conversation> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail_line(path, line_no, "expected a JSON object");
    if (!obj.contains("id") || !obj["id"].is_string()) fail_line(path, line_no, "missing string field \"id\"");
    if (!obj.contains("utterances") || !obj["utterances"].is_array())
      fail_line(path, line_no, "missing array field \"utterances\"");
    if (obj["utterances"].empty()) fail_line(path, line_no, "conversation has no utterances");

    Conversation conv;
    conv.id = obj["id"].get<std::string>();
    int labeled_count = 0;
    for (std::size_t k = 0; k < obj["utterances"].size(); ++k) {
      const json& ju = obj["utterances"][k];
      if (!ju.is_object()) fail_line(path, line_no, "utterance " + std::to_string(k) + " is not an object");
      for (const char* field : {"index", "speaker", "text"}) {
        if (!ju.contains(field))
          fail_line(path, line_no, "utterance " + std::to_string(k) + " missing field \"" + field + "\"");
      }
      if (!ju["index"].is_number_integer())
        fail_line(path, line_no, "utterance " + std::to_string(k) + " field \"index\" must be an integer");
      if (!ju["speaker"].is_string())
        fail_line(path, line_no, "utterance " + std::to_string(k) + " field \"speaker\" must be a string");
      if (!ju["text"].is_string())
        fail_line(path, line_no, "utterance " + std::to_string(k) + " field \"text\" must be a string");

      Utterance u;
      u.index = ju["index"].get<int>();
      if (u.index != static_cast<int>(k))
        fail_line(path, line_no, "utterance indices must be contiguous from 0; got " + std::to_string(u.index) +
                                     " at position " + std::to_string(k));
      u.speaker = ju["speaker"].get<std::string>();
      u.text = ju["text"].get<std::string>();
      if (ju.contains("session_id") && !ju["session_id"].is_null()) {
        if (!ju["session_id"].is_number_integer() || ju["session_id"].get<int>() < 0)
          fail_line(path, line_no, "utterance " + std::to_string(k) + " field \"session_id\" must be a non-negative integer");
        u.session_id = ju["session_id"].get<int>();
        ++labeled_count;
      }
      if (ju.contains("reply_to") && !ju["reply_to"].is_null()) {
        if (!ju["reply_to"].is_number_integer())
          fail_line(path, line_no, "utterance " + std::to_string(k) + " field \"reply_to\" must be an integer");
        u.reply_to = ju["reply_to"].get<int>();
      }
      u.tokens = tokenize(u.text);
      conv.utterances.push_back(std::move(u));
    }
    if (labeled_count != 0 && labeled_count != conv.size())
      fail_line(path, line_no, "conversation '" + conv.id + "' is partially labeled (" +
                                   std::to_string(labeled_count) + "/" + std::to_string(conv.size()) +
                                   " utterances carry session_id)");
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

void write_conversations(const std::string& path, const std::vector<Conversation>& corpus,
                         const std::vector<ConversationAnnotations>* annotations) {
  if (annotations && annotations->size() != corpus.size())
    throw std::invalid_argument("annotations must parallel the corpus");
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file '" + path + "'");
  for (std::size_t c = 0; c < corpus.size(); ++c) {
    const Conversation& conv = corpus[c];
    const ConversationAnnotations* ann = annotations ? &(*annotations)[c] : nullptr;
    ordered_json obj;
    obj["id"] = conv.id;
    if (ann && ann->predicted_k) obj["predicted_k"] = *ann->predicted_k;
    ordered_json arr = ordered_json::array();
    for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
      const Utterance& u = conv.utterances[i];
      ordered_json ju;
      ju["index"] = u.index;
      ju["speaker"] = u.speaker;
      ju["text"] = u.text;
      if (u.session_id) ju["session_id"] = *u.session_id;
      if (u.reply_to) ju["reply_to"] = *u.reply_to;
      if (ann && !ann->predicted_session_ids.empty()) ju["predicted_session_id"] = ann->predicted_session_ids.at(i);
      arr.push_back(std::move(ju));
    }
    obj["utterances"] = std::move(arr);
    if (ann && !ann->provenance.empty()) {
      ordered_json cfg;
      for (const auto& [k, v] : ann->provenance) cfg[k] = v;
      obj["config"] = std::move(cfg);
    }
    out << obj.dump() << "\n";
  }
  if (!out) throw DataError("failed while writing '" + path + "'");
}

}  // namespace bicl
