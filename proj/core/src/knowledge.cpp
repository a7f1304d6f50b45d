#include "seek/knowledge.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace seek {

using json = nlohmann::json;

const std::array<Relation, kNumRelations>& all_relations() {
    static const std::array<Relation, kNumRelations> order = {
        Relation::xIntent, Relation::xNeed, Relation::xWant, Relation::xEffect, Relation::xReact};
    return order;
}

const std::string& relation_name(Relation r) {
    static const std::array<std::string, kNumRelations> names = {"xIntent", "xNeed", "xWant", "xEffect",
                                                                 "xReact"};
    return names[static_cast<int>(r)];
}

Relation relation_from_name(const std::string& name) {
    for (Relation r : all_relations())
        if (relation_name(r) == name) return r;
    fail("ParseError", "unknown relation: " + name);
}

namespace {

struct KeywordEntry {
    const char* keyword;
    const char* phrase[kNumRelations]; // xIntent, xNeed, xWant, xEffect, xReact
};

// Matched phrases come first, rotation fills the rest. All text is
// lowercase so it indexes cleanly against corpus vocabularies.
const KeywordEntry kKeywordTable[] = {
    {"dog", {"to care for the dog", "to feed the dog", "to play with the dog", "smiles at the dog", "affectionate"}},
    {"baby", {"to welcome the baby", "to prepare for the baby", "to hold the baby", "becomes a parent", "joyful"}},
    {"ultrasound", {"to see the baby", "to visit the doctor", "to share the picture", "sees the heartbeat", "excited"}},
    {"job", {"to do well at work", "to apply for the job", "to keep the job", "earns a living", "hopeful"}},
    {"promotion", {"to advance the career", "to work hard", "to celebrate the promotion", "takes on more duties", "proud"}},
    {"alone", {"to find company", "to reach out to someone", "to be with someone", "sits by themselves", "lonely"}},
    {"scared", {"to feel safe", "to face the fear", "to calm down", "looks over their shoulder", "afraid"}},
    {"exam", {"to pass the exam", "to study hard", "to get good grades", "waits for the result", "anxious"}},
    {"friend", {"to keep the friendship", "to call the friend", "to meet the friend", "spends time together", "grateful"}},
    {"accident", {"to stay safe", "to see a doctor", "to recover quickly", "gets shaken up", "terrified"}},
    {"birthday", {"to celebrate the birthday", "to plan a party", "to enjoy the day", "gets presents", "happy"}},
    {"trip", {"to enjoy the trip", "to pack the bags", "to travel far", "sees new places", "excited"}},
    {"sick", {"to get better", "to rest at home", "to feel healthy again", "misses some work", "worried"}},
    {"won", {"to celebrate the win", "to compete well", "to win again", "jumps with joy", "ecstatic"}},
};

const std::array<std::vector<std::string>, kNumRelations>& filler_table() {
    static const std::array<std::vector<std::string>, kNumRelations> fillers = {{
        {"to express how they feel", "to be understood", "to share the experience",
         "to start a conversation", "to explain the situation", "to feel heard"},
        {"to think it over", "to take a deep breath", "to find the words", "to remember the moment",
         "to gather courage", "to make time"},
        {"to talk about it", "to hear a kind word", "to move on", "to know what happens next",
         "to feel supported", "to share more details"},
        {"personx feels a change", "personx thinks about it all day", "personx tells someone",
         "personx takes a moment", "personx looks back on it", "personx carries it along"},
        {"moved", "thoughtful", "emotional", "touched", "reflective", "attentive"},
    }};
    return fillers;
}

} // namespace

std::vector<std::string> TemplateKnowledgeProvider::generate(const std::string& utterance_text,
                                                             Relation r) const {
    std::vector<std::string> out;
    for (const std::string& tok : tokenize_text(utterance_text)) {
        if (static_cast<int>(out.size()) == kInferencesPerRelation) break;
        for (const KeywordEntry& entry : kKeywordTable) {
            if (tok != entry.keyword) continue;
            std::string phrase = entry.phrase[static_cast<int>(r)];
            if (std::find(out.begin(), out.end(), phrase) == out.end()) out.push_back(std::move(phrase));
            break;
        }
    }
    const std::vector<std::string>& fillers = filler_table()[static_cast<int>(r)];
    for (std::size_t j = out.size(); static_cast<int>(out.size()) < kInferencesPerRelation; ++j)
        out.push_back(fillers[j % fillers.size()]);
    return out;
}

PrecomputedKnowledgeProvider::PrecomputedKnowledgeProvider(const std::string& path, bool fallback_to_none)
    : fallback_(fallback_to_none) {
    std::ifstream is(path);
    if (!is) fail("MissingFile", "cannot open knowledge file: " + path);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail("ParseError", "knowledge line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("key") || !j["key"].is_string())
            fail("ParseError", "knowledge line " + std::to_string(line_no) + ": missing string \"key\"");
        std::string key = j["key"].get<std::string>();
        std::array<std::vector<std::string>, kNumRelations> entry;
        for (Relation r : all_relations()) {
            const std::string& name = relation_name(r);
            if (!j.contains(name) || !j[name].is_array() ||
                j[name].size() != static_cast<std::size_t>(kInferencesPerRelation))
                fail("ParseError", "knowledge line " + std::to_string(line_no) + ": \"" + name +
                                       "\" must be an array of " +
                                       std::to_string(kInferencesPerRelation) + " strings");
            for (const json& s : j[name]) {
                if (!s.is_string())
                    fail("ParseError",
                         "knowledge line " + std::to_string(line_no) + ": non-string inference in " + name);
                entry[static_cast<int>(r)].push_back(s.get<std::string>());
            }
        }
        if (!table_.emplace(std::move(key), std::move(entry)).second)
            fail("ParseError", "knowledge line " + std::to_string(line_no) + ": duplicate key");
    }
}

std::vector<std::string> PrecomputedKnowledgeProvider::generate(const std::string& utterance_text,
                                                                Relation r) const {
    auto it = table_.find(utterance_text);
    if (it != table_.end()) return it->second[static_cast<int>(r)];
    if (fallback_) return std::vector<std::string>(kInferencesPerRelation, "none");
    fail("ProviderMiss", "no knowledge for utterance: \"" + utterance_text + "\"");
}

Vocabulary with_separator(const Vocabulary& vocab) {
    std::vector<std::string> tokens = vocab.indexed_tokens();
    if (std::find(tokens.begin(), tokens.end(), "<sep>") != tokens.end()) return vocab;
    std::vector<std::int64_t> freqs = vocab.indexed_freqs();
    tokens.push_back("<sep>");
    freqs.push_back(1);
    return Vocabulary(std::move(tokens), std::move(freqs));
}

KnowledgeBundle assemble(const std::string& utterance_text, const KnowledgeProvider& provider,
                         const Vocabulary& vocab, int L_s) {
    if (L_s < kInferencesPerBundle)
        fail("BadFlag", "knowledge length " + std::to_string(L_s) + " below one token per inference");
    KnowledgeBundle bundle;
    int sep = vocab.id("<sep>");
    bool first = true;
    for (Relation r : all_relations()) {
        std::vector<std::string> strs = provider.generate(utterance_text, r);
        if (strs.size() != static_cast<std::size_t>(kInferencesPerRelation))
            fail("ShapeMismatch", "provider returned " + std::to_string(strs.size()) + " inferences for " +
                                      relation_name(r));
        for (int k = 0; k < kInferencesPerRelation; ++k) {
            if (!first) {
                bundle.assembled_text += " <sep> ";
                bundle.tokens.ids.push_back(sep);
            }
            first = false;
            bundle.assembled_text += strs[k];
            for (const std::string& tok : tokenize_text(strs[k]))
                bundle.tokens.ids.push_back(vocab.id(tok));
            bundle.inferences[static_cast<int>(r)][k] = std::move(strs[k]);
        }
    }
    bundle.tokens.mask.assign(bundle.tokens.ids.size(), true);
    if (static_cast<int>(bundle.tokens.ids.size()) > L_s) {
        bundle.tokens.ids.resize(L_s);
        bundle.tokens.mask.resize(L_s);
    } else {
        bundle.tokens = pad_to(std::move(bundle.tokens), L_s);
    }
    return bundle;
}

void write_knowledge_file(const std::string& path, const std::vector<std::string>& keys,
                          const KnowledgeProvider& provider) {
    std::ofstream os(path);
    if (!os) fail("MissingFile", "cannot open knowledge file for writing: " + path);
    std::unordered_map<std::string, bool> seen;
    for (const std::string& key : keys) {
        if (!seen.emplace(key, true).second) continue;
        json j;
        j["key"] = key;
        for (Relation r : all_relations()) j[relation_name(r)] = provider.generate(key, r);
        os << j.dump() << "\n";
    }
    if (!os) fail("ParseError", "short write to knowledge file: " + path);
}

} // namespace seek
