#pragma once

#include <vector>

#include "seek/autograd.hpp"
#include "seek/corpus.hpp"
#include "seek/model.hpp"

namespace seek {

// ---- shared transformer building blocks ----

Node linear(Graph& g, LinearP& p, Node x);
Node layer_norm(Graph& g, LayerNormP& p, Node x);
Node feed_forward(Graph& g, FfnP& p, Node x);

// Scaled dot-product attention with `heads` parallel heads. kv_mask marks
// usable key positions; causal restricts queries to keys at or before their
// own position. When weights_out is given, each head's row-stochastic
// weight node is appended to it.
Node multi_head_attention(Graph& g, MhaP& p, int heads, Node query, Node kv,
                          const std::vector<bool>* kv_mask, bool causal,
                          std::vector<Node>* weights_out);

// ---- serial encoding ----

struct Encoded {
    Node summary; // 1 x d
    Node states;  // L x d token states
};

// Token + position + role embeddings through the shared encoder stack.
// Row 0 must be the CLS token; its final state is the utterance summary.
Encoded encode_utterance(Graph& g, ModelParams& m, const TokenSeq& seq, int state_id);

// Same encoder weights, no role embedding; the summary is the masked mean
// of the token states.
Encoded encode_knowledge(Graph& g, ModelParams& m, const TokenSeq& seq);

// Concatenates each utterance summary with its knowledge summary, projects
// to d, and runs a bidirectional recurrence over the context order.
// Returns the (N-1) x 2d emotion-flow states.
Node fuse_and_flow(Graph& g, ModelParams& m, const std::vector<Node>& utter_summaries,
                   const std::vector<Node>& knowledge_summaries);

// ---- supervision heads ----

struct TagOutput {
    Node logits; // (N-1) x t
    Node probs;
    Node loss; // summed cross-entropy over the context utterances
};

TagOutput tag_utterances(Graph& g, ModelParams& m, Node flow, const std::vector<int>& labels);

struct PooledOutput {
    Node attn;   // 1 x (N-1) pooling weights
    Node pooled; // 1 x 2d
    Node logits;
    Node probs;
    Node loss;
};

// Attention-pools the flow states and classifies the upcoming response's
// trait over the full tag set.
PooledOutput predict_response_trait(Graph& g, ModelParams& m, Node flow, int label);

// Same shape with its own pooling parameters, over the emotion set.
PooledOutput recognize_dialogue_emotion(Graph& g, ModelParams& m, Node flow, int label);

} // namespace seek
