#include "seek/encoder.hpp"

#include <cmath>
#include <numeric>

#include "seek/error.hpp"

namespace seek {

namespace {

std::vector<int> iota_ids(int n) {
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// Shared post-norm encoder stack over embedded rows.
Node run_encoder(Graph& g, ModelParams& m, Node x, const std::vector<bool>& mask) {
    for (EncoderLayerP& layer : m.encoder) {
        Node attn = multi_head_attention(g, layer.attn, m.cfg.heads, x, x, &mask, false, nullptr);
        x = layer_norm(g, layer.ln1, g.add(x, attn));
        Node ff = feed_forward(g, layer.ffn, x);
        x = layer_norm(g, layer.ln2, g.add(x, ff));
    }
    return x;
}

Node embed_sequence(Graph& g, ModelParams& m, const TokenSeq& seq) {
    int len = static_cast<int>(seq.ids.size());
    Node words = g.embedding(m.word_emb, seq.ids);
    Node pos = g.embedding(m.pos_emb, iota_ids(len));
    return g.add(words, pos);
}

Node pool_scores(Graph& g, AttnPoolP& p, Node flow) {
    Node hidden = g.tanh_(g.matmul(flow, g.param(p.W)));
    return g.matmul_nt(g.param(p.v), hidden); // 1 x (N-1)
}

PooledOutput pooled_head(Graph& g, ModelParams& m, AttnPoolP& pool, Parameter& proj, Node flow,
                         int label, int n_classes) {
    if (label < 0 || label >= n_classes) {
        fail("LabelOutOfRange",
             "label " + std::to_string(label) + " outside [0, " + std::to_string(n_classes) + ")");
    }
    PooledOutput out;
    out.attn = g.softmax_rows(pool_scores(g, pool, flow));
    out.pooled = g.matmul(out.attn, flow);
    out.logits = g.matmul(out.pooled, g.param(proj));
    out.probs = g.softmax_rows(out.logits);
    out.loss = g.nll_rows(out.logits, {label});
    return out;
}

} // namespace

Node linear(Graph& g, LinearP& p, Node x) {
    return g.add_row(g.matmul(x, g.param(p.W)), g.param(p.b));
}

Node layer_norm(Graph& g, LayerNormP& p, Node x) {
    return g.layer_norm_rows(x, g.param(p.gain), g.param(p.bias));
}

Node feed_forward(Graph& g, FfnP& p, Node x) {
    return linear(g, p.w2, g.relu(linear(g, p.w1, x)));
}

Node multi_head_attention(Graph& g, MhaP& p, int heads, Node query, Node kv,
                          const std::vector<bool>* kv_mask, bool causal,
                          std::vector<Node>* weights_out) {
    const int d = g.value(query).cols();
    if (d % heads != 0) fail("ShapeMismatch", "head count must divide the model width");
    const int dh = d / heads;
    const int n_q = g.value(query).rows();
    const int n_k = g.value(kv).rows();
    if (kv_mask && static_cast<int>(kv_mask->size()) != n_k) {
        fail("LengthMismatch", "key mask length does not match the key rows");
    }

    Node q = linear(g, p.q, query);
    Node k = linear(g, p.k, kv);
    Node v = linear(g, p.v, kv);

    bool any_masked = false;
    if (kv_mask) {
        for (bool b : *kv_mask) {
            if (!b) any_masked = true;
        }
    }

    Tensor additive = Tensor::zeros({1, 1});
    bool use_mask = causal || any_masked;
    if (causal) {
        additive = Tensor::zeros({n_q, n_k});
        for (int i = 0; i < n_q; ++i) {
            for (int j = 0; j < n_k; ++j) {
                bool dead = j > i || (kv_mask && !(*kv_mask)[static_cast<std::size_t>(j)]);
                if (dead) additive.at(i, j) = Graph::kMaskFill;
            }
        }
    } else if (any_masked) {
        additive = Tensor::zeros({1, n_k});
        for (int j = 0; j < n_k; ++j) {
            if (!(*kv_mask)[static_cast<std::size_t>(j)]) additive.at(0, j) = Graph::kMaskFill;
        }
    }

    std::vector<Node> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(heads));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int h = 0; h < heads; ++h) {
        Node qh = g.slice_cols(q, h * dh, dh);
        Node kh = g.slice_cols(k, h * dh, dh);
        Node vh = g.slice_cols(v, h * dh, dh);
        Node scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt);
        Node weights = use_mask ? g.softmax_rows(scores, additive) : g.softmax_rows(scores);
        if (weights_out) weights_out->push_back(weights);
        head_outputs.push_back(g.matmul(weights, vh));
    }
    Node merged = heads == 1 ? head_outputs[0] : g.concat_cols(head_outputs);
    return linear(g, p.o, merged);
}

Encoded encode_utterance(Graph& g, ModelParams& m, const TokenSeq& seq, int state_id) {
    int len = static_cast<int>(seq.ids.size());
    if (len == 0) fail("EmptyText", "cannot encode an empty token sequence");
    if (len > m.cfg.L_n) {
        fail("LengthExceeded",
             "utterance length " + std::to_string(len) + " exceeds limit " + std::to_string(m.cfg.L_n));
    }
    if (seq.ids[0] != Vocabulary::kCls || !seq.mask[0]) {
        fail("ParseError", "utterance sequences must start with a live CLS token");
    }
    if (state_id != 0 && state_id != 1) {
        fail("LabelOutOfRange", "dialogue state id must be 0 or 1");
    }
    Node x = embed_sequence(g, m, seq);
    Node state = g.embedding(m.state_emb, {state_id});
    x = g.add_row(x, state);
    Node states = run_encoder(g, m, x, seq.mask);
    return Encoded{g.slice_rows(states, 0, 1), states};
}

Encoded encode_knowledge(Graph& g, ModelParams& m, const TokenSeq& seq) {
    int len = static_cast<int>(seq.ids.size());
    if (len == 0) fail("EmptyText", "cannot encode an empty token sequence");
    if (len > m.cfg.L_s) {
        fail("LengthExceeded",
             "knowledge length " + std::to_string(len) + " exceeds limit " + std::to_string(m.cfg.L_s));
    }
    Node x = embed_sequence(g, m, seq);
    Node states = run_encoder(g, m, x, seq.mask);
    return Encoded{g.mean_pool_rows(states, seq.mask), states};
}

Node fuse_and_flow(Graph& g, ModelParams& m, const std::vector<Node>& utter_summaries,
                   const std::vector<Node>& knowledge_summaries) {
    if (utter_summaries.empty()) fail("EmptyDialogue", "no context utterances to fuse");
    if (utter_summaries.size() != knowledge_summaries.size()) {
        fail("LengthMismatch", "utterance and knowledge summary counts differ");
    }
    const int d = m.cfg.d;
    const int n = static_cast<int>(utter_summaries.size());

    Node w_a = g.param(m.w_a);
    std::vector<Node> fused;
    fused.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Node a = g.concat_cols({utter_summaries[static_cast<std::size_t>(i)],
                                knowledge_summaries[static_cast<std::size_t>(i)]});
        fused.push_back(g.matmul(a, w_a));
    }

    auto run_dir = [&](LstmDirP& dir, bool reverse) {
        Node w_x = g.param(dir.w_x);
        Node w_h = g.param(dir.w_h);
        Node b = g.param(dir.b);
        Node h = g.zeros(1, d);
        Node c = g.zeros(1, d);
        std::vector<Node> outputs(static_cast<std::size_t>(n));
        for (int step = 0; step < n; ++step) {
            int i = reverse ? n - 1 - step : step;
            Node gates = g.add_row(
                g.add(g.matmul(fused[static_cast<std::size_t>(i)], w_x), g.matmul(h, w_h)), b);
            Node in_gate = g.sigmoid(g.slice_cols(gates, 0, d));
            Node forget = g.sigmoid(g.slice_cols(gates, d, d));
            Node cell_in = g.tanh_(g.slice_cols(gates, 2 * d, d));
            Node out_gate = g.sigmoid(g.slice_cols(gates, 3 * d, d));
            c = g.add(g.mul(forget, c), g.mul(in_gate, cell_in));
            h = g.mul(out_gate, g.tanh_(c));
            outputs[static_cast<std::size_t>(i)] = h;
        }
        return outputs;
    };

    std::vector<Node> fwd = run_dir(m.lstm_fwd, false);
    std::vector<Node> bwd = run_dir(m.lstm_bwd, true);

    std::vector<Node> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rows.push_back(g.concat_cols(
            {fwd[static_cast<std::size_t>(i)], bwd[static_cast<std::size_t>(i)]}));
    }
    return n == 1 ? rows[0] : g.concat_rows(rows);
}

TagOutput tag_utterances(Graph& g, ModelParams& m, Node flow, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != g.value(flow).rows()) {
        fail("LengthMismatch", "one tag label per flow row is required");
    }
    for (int label : labels) {
        if (label < 0 || label >= m.cfg.t) {
            fail("LabelOutOfRange", "tag label " + std::to_string(label) + " outside [0, " +
                                                 std::to_string(m.cfg.t) + ")");
        }
    }
    TagOutput out;
    out.logits = g.matmul(flow, g.param(m.w_e));
    out.probs = g.softmax_rows(out.logits);
    out.loss = g.nll_rows(out.logits, labels);
    return out;
}

PooledOutput predict_response_trait(Graph& g, ModelParams& m, Node flow, int label) {
    return pooled_head(g, m, m.pool_pre, m.w_p, flow, label, m.cfg.t);
}

PooledOutput recognize_dialogue_emotion(Graph& g, ModelParams& m, Node flow, int label) {
    return pooled_head(g, m, m.pool_dia, m.w_d, flow, label, m.cfg.q);
}

} // namespace seek
