#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bicl {

/// Width of the mention vector and of the segmentation window. Conversations
/// fed to the encoder never exceed this many utterances.
inline constexpr int kWindow = 50;

struct Utterance {
  int index = 0;                       // 0-based position within the conversation
  std::string speaker;                 // speaker handle
  std::string text;                    // raw message
  std::vector<std::string> tokens;     // filled by tokenize()
  std::optional<int> session_id;       // gold label, when annotated
  std::optional<int> reply_to;         // kept for round-tripping, unused by training
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;

  int size() const { return static_cast<int>(utterances.size()); }
  bool labeled() const;
  /// Number of distinct gold sessions; conversation must be labeled.
  int gold_session_count() const;
  std::vector<int> gold_labels() const;
  int speaker_count() const;
};

/// Lowercased tokens, split on whitespace with punctuation emitted as
/// separate single-character tokens, truncated to max_len. Empty or
/// whitespace-only text yields {"<empty>"}.
std::vector<std::string> tokenize(const std::string& text, int max_len = kWindow);

/// Splits a conversation into consecutive non-overlapping windows. Within
/// each segment, utterance indices are rebased to 0 and gold session ids are
/// relabeled to 0,1,2,... in order of first appearance. The last segment may
/// be shorter than the window.
std::vector<Conversation> segment(const Conversation& conversation, int window = kWindow);

/// Applies segment() to every conversation and concatenates the results.
std::vector<Conversation> segment_corpus(const std::vector<Conversation>& corpus, int window = kWindow);

/// Multi-hot mention vector m_i: bit j is set iff utterance j's speaker
/// equals utterance i's speaker (including j == i) or utterance j's speaker
/// handle occurs as a whole token in utterance i's text (case-insensitive).
/// Always kWindow wide; positions past the conversation end stay 0.
std::vector<double> build_mention_vector(const Conversation& conversation, int i);

/// Reads a JSONL corpus: one conversation object per line,
/// {"id": str, "utterances": [{"index", "speaker", "text",
///  "session_id"?, "reply_to"?}]}. Unknown keys are ignored. Indices must be
/// contiguous from 0; partially labeled conversations are rejected.
std::vector<Conversation> load_conversations(const std::string& path);

/// Optional per-conversation additions for write_conversations.
struct ConversationAnnotations {
  std::optional<int> predicted_k;
  std::vector<int> predicted_session_ids;          // empty = none
  std::map<std::string, std::string> provenance;   // echoed under "config"
};

/// Writes conversations as JSONL, optionally annotated. `annotations`, when
/// given, must parallel `corpus`.
void write_conversations(const std::string& path, const std::vector<Conversation>& corpus,
                         const std::vector<ConversationAnnotations>* annotations = nullptr);

}  // namespace bicl
