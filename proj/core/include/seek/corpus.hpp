#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "seek/error.hpp"

namespace seek {

enum class Role { Speaker, Listener };

// One turn. ei_label indexes the 41-way utterance tag table.
struct Utterance {
    std::string text;
    Role role = Role::Speaker;
    int ei_label = 0;
};

// A dialogue is at least two utterances; the last one is the target
// response, everything before it is the context. Roles alternate
// starting with the speaker.
struct Dialogue {
    std::string id;
    int dialogue_emotion = 0; // indexes the 32-way emotion table
    std::vector<Utterance> utterances;

    int context_size() const { return static_cast<int>(utterances.size()) - 1; }
    const Utterance& response() const { return utterances.back(); }
};

inline constexpr int kNumEmotions = 32;
inline constexpr int kNumTags = 41; // 32 emotions + 9 intents, one tagging space

// Fixed label tables, indices assigned alphabetically.
const std::vector<std::string>& emotion_labels();
const std::vector<std::string>& tag_labels();
int emotion_id(const std::string& name); // LabelOutOfRange when unknown
int tag_id(const std::string& name);

// Parallel ids + validity mask. Utterance sequences carry CLS at position 0.
struct TokenSeq {
    std::vector<int> ids;
    std::vector<bool> mask; // true = real token
};

TokenSeq pad_to(TokenSeq seq, int len); // appends PAD/false; len below size is an error

class Vocabulary {
  public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCls = 2;
    static constexpr int kSos = 3;
    static constexpr int kEos = 4;
    static constexpr int kNumSpecials = 5;

    Vocabulary(); // specials only
    // Non-special tokens in id order (ids 5, 6, ...) with their response
    // frequencies; freqs may be empty, then every token counts as 1.
    Vocabulary(std::vector<std::string> tokens, std::vector<std::int64_t> freqs);

    int size() const { return static_cast<int>(id_to_token_.size()); }
    int id(const std::string& token) const; // UNK when absent
    const std::string& token(int id) const;
    bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }
    std::int64_t frequency(int id) const; // >= 1 always

    // slices used by checkpoint sidecars and the vocab file
    std::vector<std::string> indexed_tokens() const; // ids 5..size-1
    std::vector<std::int64_t> indexed_freqs() const;

  private:
    friend Vocabulary build_vocab(const std::vector<Dialogue>&, int);
    std::vector<std::string> id_to_token_;
    std::vector<std::int64_t> freq_;
    std::unordered_map<std::string, int> token_to_id_;
};

// Lowercase, detach punctuation, split on whitespace.
std::vector<std::string> tokenize_text(const std::string& text);

// Index every token seen >= min_freq times in any utterance; frequencies
// count occurrences in target responses only (floored at 1).
Vocabulary build_vocab(const std::vector<Dialogue>& dialogues, int min_freq);

// [CLS, w_1, ..., w_k], truncated to max_len keeping CLS, mask all true.
TokenSeq tokenize_utterance(const std::string& text, const Vocabulary& vocab, int max_len);

// One state id per context utterance: Speaker -> 0, Listener -> 1.
std::vector<int> dialogue_state_ids(const Dialogue& d);

// Space-joined surface form of the non-special ids.
std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab);

// One JSON dialogue per line; validates every type invariant, errors carry
// the 1-based line number.
std::vector<Dialogue> load_corpus(const std::string& path);

// One token per line, line number = id - 5.
void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

} // namespace seek
