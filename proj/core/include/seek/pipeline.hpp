#pragma once

#include <vector>

#include "seek/autograd.hpp"
#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/decoder.hpp"
#include "seek/knowledge.hpp"
#include "seek/model.hpp"

namespace seek {

struct ForwardOptions {
    AblationFlags ablate;
    LossWeights weights;
    // Per-vocabulary-id diversity weights; required (see face_weights).
    const std::vector<double>* face_w = nullptr;
    // Appends this many pad tokens to every context utterance (capped at
    // L_n); the loss must not depend on it.
    int extra_pad = 0;
};

// One dialogue's full training graph. Ablated loss terms keep a default
// (invalid) Node; the distributions are always populated.
struct DialogueForward {
    Node total;
    Node nll;
    Node emo;
    Node pre;
    Node dia;
    Node div;
    Node p_tag; // (N-1) x t
    Node p_pre; // 1 x t
    Node p_dia; // 1 x q
    Node pool_pre_attn; // 1 x (N-1)
    Node pool_dia_attn;
    Node memory; // context token states feeding the decoder
    std::vector<bool> memory_mask;
    Node sos;
    Node logits;                 // T x V teacher-forced rows
    std::vector<int> target_ids; // gold response tokens, end token appended
    SelectionTrace trace;        // empty under no_knowledge
    int n_context = 0;
};

// Gold response tokens plus the end-of-sequence id, truncated to max_len
// positions overall.
std::vector<int> response_targets(const std::string& text, const Vocabulary& vocab, int max_len);

DialogueForward forward_dialogue(Graph& g, ModelParams& m, const Dialogue& dlg,
                                 const Vocabulary& vocab, const KnowledgeProvider& provider,
                                 const ForwardOptions& opt);

} // namespace seek
