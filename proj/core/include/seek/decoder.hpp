#pragma once

#include <vector>

#include "seek/autograd.hpp"
#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/model.hpp"

namespace seek {

// Cross-attention weights captured during knowledge selection, one
// row-stochastic matrix per (layer, head): query rows x knowledge tokens.
struct SelectionTrace {
    int n_layers = 0;
    int n_heads = 0;
    std::vector<std::vector<Tensor>> weights; // [layer][head]
};

struct SelectOutput {
    Node summary; // 1 x d emotion-aligned knowledge state
    SelectionTrace trace;
};

// Projects the flow states to queries and attends over the knowledge token
// states for the configured number of layers; the result is mean-pooled
// over the query rows.
SelectOutput select_knowledge(Graph& g, ModelParams& m, Node flow, Node knowledge_states,
                              const std::vector<bool>& knowledge_mask);

// Start-of-sequence vector: projects [knowledge summary; response trait
// vector] (1 x 3d) down to 1 x d.
Node make_sos(Graph& g, ModelParams& m, Node knowledge_summary, Node trait_vector);

struct DecodeTrainOutput {
    Node nll;    // summed teacher-forced cross-entropy over the target tokens
    Node logits; // T x V, one row per target position
};

// Causal decoding over [sos, y_1 .. y_{T-1}] with cross-attention into the
// context memory; position r predicts target_ids[r].
DecodeTrainOutput decode_train(Graph& g, ModelParams& m, Node memory,
                               const std::vector<bool>& memory_mask, Node sos,
                               const std::vector<int>& target_ids);

// Frequency-aware token weights indexed by vocabulary id. Specials weigh 1;
// the rest are shifted so their mean is 1, rarer tokens above, frequent
// ones below, clipped to [0, 2].
std::vector<double> face_weights(const Vocabulary& vocab);

// Cross-entropy with per-step weight weights[target_ids[r]].
Node face_loss(Graph& g, Node logits, const std::vector<int>& target_ids,
               const std::vector<double>& weights);

// alpha * nll + beta * (emo + pre + dia) + gamma * div. Pass a default
// Node for terms an ablation removed; every present term must be a finite
// scalar.
Node total_loss(Graph& g, Node nll, Node emo, Node pre, Node dia, Node div,
                const LossWeights& w);

// Same combination on plain numbers.
double total_loss_value(double nll, double emo, double pre, double dia, double div,
                        const LossWeights& w);

struct GenerateOutput {
    std::vector<int> ids;             // emitted tokens, end marker excluded
    std::vector<Tensor> step_logits;  // one 1 x V row per step, end step included
    std::vector<double> step_nll;     // -log p of each emitted token
};

// Greedy decoding from the start vector until the end token or max_steps.
// Ties break toward the lower id, so the output is a pure function of the
// inputs.
GenerateOutput generate(ModelParams& m, const Tensor& memory, const std::vector<bool>& memory_mask,
                        const Tensor& sos, int max_steps);

} // namespace seek
