#include "seek/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace seek {

using json = nlohmann::json;

const std::vector<std::string>& emotion_labels() {
    static const std::vector<std::string> table = {
        "afraid",    "angry",        "annoyed",      "anticipating", "anxious",   "apprehensive",
        "ashamed",   "caring",       "confident",    "content",      "devastated", "disappointed",
        "disgusted", "embarrassed",  "excited",      "faithful",     "furious",   "grateful",
        "guilty",    "hopeful",      "impressed",    "jealous",      "joyful",    "lonely",
        "nostalgic", "prepared",     "proud",        "sad",          "sentimental", "surprised",
        "terrified", "trusting"};
    return table;
}

const std::vector<std::string>& tag_labels() {
    static const std::vector<std::string> table = [] {
        std::vector<std::string> merged = emotion_labels();
        const char* intents[] = {"acknowledging", "agreeing",     "consoling",  "encouraging", "neutral",
                                 "questioning",   "suggesting",   "sympathizing", "wishing"};
        merged.insert(merged.end(), std::begin(intents), std::end(intents));
        std::sort(merged.begin(), merged.end());
        return merged;
    }();
    return table;
}

namespace {

int label_index(const std::vector<std::string>& table, const std::string& name, const char* what) {
    auto it = std::find(table.begin(), table.end(), name);
    if (it == table.end()) fail("LabelOutOfRange", std::string("unknown ") + what + ": " + name);
    return static_cast<int>(it - table.begin());
}

} // namespace

int emotion_id(const std::string& name) { return label_index(emotion_labels(), name, "emotion"); }
int tag_id(const std::string& name) { return label_index(tag_labels(), name, "tag"); }

TokenSeq pad_to(TokenSeq seq, int len) {
    if (len < static_cast<int>(seq.ids.size()))
        fail("ShapeMismatch", "pad_to target " + std::to_string(len) + " below length " +
                                  std::to_string(seq.ids.size()));
    seq.ids.resize(len, Vocabulary::kPad);
    seq.mask.resize(len, false);
    return seq;
}

Vocabulary::Vocabulary() : Vocabulary({}, {}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::int64_t> freqs) {
    id_to_token_ = {"<pad>", "<unk>", "<cls>", "<sos>", "<eos>"};
    if (!freqs.empty() && freqs.size() != tokens.size())
        fail("ParseError", "vocabulary has " + std::to_string(tokens.size()) + " tokens but " +
                               std::to_string(freqs.size()) + " frequencies");
    id_to_token_.reserve(id_to_token_.size() + tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].empty()) fail("ParseError", "empty vocabulary token at position " + std::to_string(i));
        if (!freqs.empty() && freqs[i] < 1)
            fail("ParseError", "frequency below 1 for token: " + tokens[i]);
        id_to_token_.push_back(std::move(tokens[i]));
    }
    freq_.assign(id_to_token_.size(), 1);
    if (!freqs.empty())
        for (std::size_t i = 0; i < freqs.size(); ++i) freq_[kNumSpecials + i] = freqs[i];
    for (std::size_t i = 0; i < id_to_token_.size(); ++i)
        if (!token_to_id_.emplace(id_to_token_[i], static_cast<int>(i)).second)
            fail("ParseError", "duplicate vocabulary token: " + id_to_token_[i]);
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size())
        fail("LabelOutOfRange", "token id " + std::to_string(id) + " outside vocabulary of " +
                                    std::to_string(size()));
    return id_to_token_[id];
}

std::int64_t Vocabulary::frequency(int id) const {
    if (id < 0 || id >= size())
        fail("LabelOutOfRange", "frequency id " + std::to_string(id) + " outside vocabulary of " +
                                    std::to_string(size()));
    return freq_[id];
}

std::vector<std::string> Vocabulary::indexed_tokens() const {
    return {id_to_token_.begin() + kNumSpecials, id_to_token_.end()};
}

std::vector<std::int64_t> Vocabulary::indexed_freqs() const {
    return {freq_.begin() + kNumSpecials, freq_.end()};
}

std::vector<std::string> tokenize_text(const std::string& text) {
    std::string spaced;
    spaced.reserve(text.size() * 2);
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::ispunct(c)) {
            spaced.push_back(' ');
            spaced.push_back(ch);
            spaced.push_back(' ');
        } else {
            spaced.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    std::vector<std::string> out;
    std::istringstream ss(spaced);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

Vocabulary build_vocab(const std::vector<Dialogue>& dialogues, int min_freq) {
    if (min_freq < 1) fail("BadFlag", "min_freq must be >= 1");
    std::unordered_map<std::string, std::int64_t> seen, in_responses;
    std::vector<std::string> order;
    for (const Dialogue& d : dialogues) {
        for (std::size_t u = 0; u < d.utterances.size(); ++u) {
            bool is_response = u + 1 == d.utterances.size();
            for (std::string& tok : tokenize_text(d.utterances[u].text)) {
                auto [it, fresh] = seen.emplace(tok, 0);
                if (fresh) order.push_back(tok);
                ++it->second;
                if (is_response) ++in_responses[tok];
            }
        }
    }
    std::vector<std::string> tokens;
    std::vector<std::int64_t> freqs;
    for (const std::string& tok : order) {
        if (seen[tok] < min_freq) continue;
        tokens.push_back(tok);
        auto it = in_responses.find(tok);
        freqs.push_back(std::max<std::int64_t>(1, it == in_responses.end() ? 0 : it->second));
    }
    return Vocabulary(std::move(tokens), std::move(freqs));
}

TokenSeq tokenize_utterance(const std::string& text, const Vocabulary& vocab, int max_len) {
    if (max_len < 2) fail("BadFlag", "max_len must be >= 2, got " + std::to_string(max_len));
    std::vector<std::string> tokens = tokenize_text(text);
    if (tokens.empty()) fail("EmptyText", "utterance has no tokens: \"" + text + "\"");
    TokenSeq seq;
    seq.ids.push_back(Vocabulary::kCls);
    for (const std::string& tok : tokens) {
        if (static_cast<int>(seq.ids.size()) == max_len) break;
        seq.ids.push_back(vocab.id(tok));
    }
    seq.mask.assign(seq.ids.size(), true);
    return seq;
}

std::vector<int> dialogue_state_ids(const Dialogue& d) {
    std::vector<int> out;
    out.reserve(d.context_size());
    for (int i = 0; i < d.context_size(); ++i)
        out.push_back(d.utterances[i].role == Role::Speaker ? 0 : 1);
    return out;
}

std::string detokenize(const std::vector<int>& ids, const Vocabulary& vocab) {
    std::string out;
    for (int id : ids) {
        if (vocab.is_special(id)) continue;
        if (!out.empty()) out.push_back(' ');
        out += vocab.token(id);
    }
    return out;
}

namespace {

[[noreturn]] void line_fail(const std::string& kind, int line_no, const std::string& msg) {
    fail(kind, "line " + std::to_string(line_no) + ": " + msg);
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

Dialogue parse_dialogue(const json& j, int line_no) {
    if (!j.is_object()) line_fail("ParseError", line_no, "dialogue record must be a JSON object");
    Dialogue d;
    if (!j.contains("id") || !j["id"].is_string())
        line_fail("ParseError", line_no, "missing or non-string \"id\"");
    d.id = j["id"].get<std::string>();
    if (!j.contains("emotion") || !j["emotion"].is_number_integer())
        line_fail("ParseError", line_no, "missing or non-integer \"emotion\"");
    d.dialogue_emotion = j["emotion"].get<int>();
    if (d.dialogue_emotion < 0 || d.dialogue_emotion >= kNumEmotions)
        line_fail("LabelOutOfRange", line_no,
                  "field emotion = " + std::to_string(d.dialogue_emotion) + ", valid range is [0, " +
                      std::to_string(kNumEmotions) + ")");
    if (!j.contains("utterances") || !j["utterances"].is_array())
        line_fail("ParseError", line_no, "missing or non-array \"utterances\"");
    const json& utts = j["utterances"];
    if (utts.size() < 2)
        line_fail("EmptyDialogue", line_no,
                  "needs a context and a target response, got " + std::to_string(utts.size()) +
                      " utterance(s)");
    for (std::size_t k = 0; k < utts.size(); ++k) {
        const json& ju = utts[k];
        std::string at = "utterance " + std::to_string(k);
        if (!ju.is_object() || !ju.contains("text") || !ju["text"].is_string())
            line_fail("ParseError", line_no, at + ": missing or non-string \"text\"");
        Utterance u;
        u.text = ju["text"].get<std::string>();
        if (blank(u.text)) line_fail("ParseError", line_no, at + ": text is empty");
        if (!ju.contains("role") || !ju["role"].is_string())
            line_fail("ParseError", line_no, at + ": missing or non-string \"role\"");
        std::string role = ju["role"].get<std::string>();
        if (role == "speaker") u.role = Role::Speaker;
        else if (role == "listener") u.role = Role::Listener;
        else line_fail("ParseError", line_no, at + ": role must be \"speaker\" or \"listener\"");
        if (!ju.contains("ei") || !ju["ei"].is_number_integer())
            line_fail("ParseError", line_no, at + ": missing or non-integer \"ei\"");
        u.ei_label = ju["ei"].get<int>();
        if (u.ei_label < 0 || u.ei_label >= kNumTags)
            line_fail("LabelOutOfRange", line_no,
                      at + ": field ei = " + std::to_string(u.ei_label) + ", valid range is [0, " +
                          std::to_string(kNumTags) + ")");
        Role expected = k % 2 == 0 ? Role::Speaker : Role::Listener;
        if (u.role != expected)
            line_fail("ParseError", line_no, at + ": roles must alternate starting with speaker");
        d.utterances.push_back(std::move(u));
    }
    return d;
}

} // namespace

std::vector<Dialogue> load_corpus(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("MissingFile", "cannot open corpus: " + path);
    std::vector<Dialogue> out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_fail("ParseError", line_no, e.what());
        }
        out.push_back(parse_dialogue(j, line_no));
    }
    return out;
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
    std::ofstream os(path);
    if (!os) fail("MissingFile", "cannot open vocab file for writing: " + path);
    for (const std::string& tok : vocab.indexed_tokens()) os << tok << "\n";
    if (!os) fail("ParseError", "short write to vocab file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail("MissingFile", "cannot open vocab file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) line_fail("ParseError", line_no, "empty vocabulary line");
        tokens.push_back(line);
    }
    return Vocabulary(std::move(tokens), {});
}

} // namespace seek
