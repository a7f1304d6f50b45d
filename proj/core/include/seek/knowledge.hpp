#pragma once

#include <array>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "seek/corpus.hpp"

namespace seek {

enum class Relation { xIntent, xNeed, xWant, xEffect, xReact };

inline constexpr int kNumRelations = 5;
inline constexpr int kInferencesPerRelation = 5;
inline constexpr int kInferencesPerBundle = kNumRelations * kInferencesPerRelation;

const std::array<Relation, kNumRelations>& all_relations(); // assembly order
const std::string& relation_name(Relation r);
Relation relation_from_name(const std::string& name); // ParseError when unknown

// Commonsense inference text for one utterance: five inferences for each
// of the five relations, flattened in relation order with "<sep>" between
// inferences, then indexed against the vocabulary (no CLS, exactly L_s).
struct KnowledgeBundle {
    std::array<std::array<std::string, kInferencesPerRelation>, kNumRelations> inferences;
    std::string assembled_text;
    TokenSeq tokens;
};

class KnowledgeProvider {
  public:
    virtual ~KnowledgeProvider() = default;
    // Exactly five strings; identical (text, relation) gives identical output.
    virtual std::vector<std::string> generate(const std::string& utterance_text, Relation r) const = 0;
};

// Keyword-driven stand-in for a learned inference generator: utterance
// keywords hit a fixed phrase table, remaining slots are filled from a
// per-relation rotation. Output depends only on the surface tokens.
class TemplateKnowledgeProvider : public KnowledgeProvider {
  public:
    std::vector<std::string> generate(const std::string& utterance_text, Relation r) const override;
};

// Answers by exact utterance-text key from a JSONL file; misses either
// fall back to five "none" strings or raise ProviderMiss.
class PrecomputedKnowledgeProvider : public KnowledgeProvider {
  public:
    PrecomputedKnowledgeProvider(const std::string& path, bool fallback_to_none);
    std::vector<std::string> generate(const std::string& utterance_text, Relation r) const override;
    bool has(const std::string& key) const { return table_.count(key) > 0; }
    std::size_t size() const { return table_.size(); }

  private:
    std::unordered_map<std::string, std::array<std::vector<std::string>, kNumRelations>> table_;
    bool fallback_;
};

// Copy of the vocabulary that is guaranteed to index the "<sep>" token.
Vocabulary with_separator(const Vocabulary& vocab);

KnowledgeBundle assemble(const std::string& utterance_text, const KnowledgeProvider& provider,
                         const Vocabulary& vocab, int L_s);

// One JSONL line per unique key, all five relations queried from the provider.
void write_knowledge_file(const std::string& path, const std::vector<std::string>& keys,
                          const KnowledgeProvider& provider);

} // namespace seek
