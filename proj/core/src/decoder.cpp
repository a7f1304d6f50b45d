#include "seek/decoder.hpp"

#include <cmath>
#include <numeric>

#include "seek/encoder.hpp"
#include "seek/error.hpp"

namespace seek {

namespace {

void check_finite_scalar(Graph& g, Node n, const char* name) {
    const Tensor& t = g.value(n);
    if (t.numel() != 1) fail("NonScalarLoss", std::string(name) + " is not a scalar");
    if (!std::isfinite(t.data[0])) {
        fail("NonFinite", std::string(name) + " is not finite");
    }
}

// Decoder input rows for a (possibly partial) target prefix.
Node decoder_inputs(Graph& g, ModelParams& m, Node sos, const std::vector<int>& prefix) {
    std::vector<Node> rows;
    rows.push_back(sos);
    if (!prefix.empty()) rows.push_back(g.embedding(m.word_emb, prefix));
    Node x = rows.size() == 1 ? rows[0] : g.concat_rows(rows);
    int len = static_cast<int>(prefix.size()) + 1;
    std::vector<int> pos_ids(static_cast<std::size_t>(len));
    std::iota(pos_ids.begin(), pos_ids.end(), 0);
    return g.add(x, g.embedding(m.pos_emb, pos_ids));
}

Node decoder_stack(Graph& g, ModelParams& m, Node x, Node memory,
                   const std::vector<bool>& memory_mask) {
    for (DecoderLayerP& layer : m.decoder) {
        Node self = multi_head_attention(g, layer.self_attn, m.cfg.heads, x, x, nullptr, true, nullptr);
        x = layer_norm(g, layer.ln1, g.add(x, self));
        Node cross =
            multi_head_attention(g, layer.cross_attn, m.cfg.heads, x, memory, &memory_mask, false, nullptr);
        x = layer_norm(g, layer.ln2, g.add(x, cross));
        Node ff = feed_forward(g, layer.ffn, x);
        x = layer_norm(g, layer.ln3, g.add(x, ff));
    }
    return x;
}

Node output_logits(Graph& g, ModelParams& m, Node states) {
    return linear(g, m.out_proj, states);
}

} // namespace

SelectOutput select_knowledge(Graph& g, ModelParams& m, Node flow, Node knowledge_states,
                              const std::vector<bool>& knowledge_mask) {
    if (g.value(knowledge_states).rows() != static_cast<int>(knowledge_mask.size())) {
        fail("LengthMismatch", "knowledge mask length does not match the state rows");
    }
    bool any_real = false;
    for (bool b : knowledge_mask) any_real = any_real || b;
    if (!any_real) fail("MaskAllFalse", "knowledge selection needs at least one real token");

    SelectOutput out;
    out.trace.n_layers = m.cfg.s;
    out.trace.n_heads = m.cfg.heads;

    Node q = g.matmul(flow, g.param(m.sel_query));
    for (SelectorLayerP& layer : m.selector) {
        std::vector<Node> head_weights;
        Node attn = multi_head_attention(g, layer.cross, m.cfg.heads, q, knowledge_states,
                                         &knowledge_mask, false, &head_weights);
        std::vector<Tensor> captured;
        captured.reserve(head_weights.size());
        for (Node w : head_weights) captured.push_back(g.value(w));
        out.trace.weights.push_back(std::move(captured));
        q = layer_norm(g, layer.ln1, g.add(q, attn));
        Node ff = feed_forward(g, layer.ffn, q);
        q = layer_norm(g, layer.ln2, g.add(q, ff));
    }
    out.summary = g.mean_rows(q);
    return out;
}

Node make_sos(Graph& g, ModelParams& m, Node knowledge_summary, Node trait_vector) {
    if (g.value(knowledge_summary).cols() != m.cfg.d ||
        g.value(trait_vector).cols() != 2 * m.cfg.d) {
        fail("ShapeMismatch", "start vector expects [1 x d; 1 x 2d] inputs");
    }
    Node joined = g.concat_cols({knowledge_summary, trait_vector});
    return g.matmul(joined, g.param(m.w_k));
}

DecodeTrainOutput decode_train(Graph& g, ModelParams& m, Node memory,
                               const std::vector<bool>& memory_mask, Node sos,
                               const std::vector<int>& target_ids) {
    if (target_ids.empty()) fail("EmptyText", "decoding needs at least one target token");
    int t_len = static_cast<int>(target_ids.size());
    if (t_len > m.cfg.max_pos) {
        fail("LengthExceeded",
             "target length " + std::to_string(t_len) + " exceeds the positional table");
    }
    for (int id : target_ids) {
        if (id < 0 || id >= m.vocab_size) {
            fail("LabelOutOfRange", "target id " + std::to_string(id) + " outside the vocabulary");
        }
    }
    std::vector<int> shifted(target_ids.begin(), target_ids.end() - 1);
    Node x = decoder_inputs(g, m, sos, shifted);
    Node states = decoder_stack(g, m, x, memory, memory_mask);
    DecodeTrainOutput out;
    out.logits = output_logits(g, m, states);
    out.nll = g.nll_rows(out.logits, target_ids);
    return out;
}

std::vector<double> face_weights(const Vocabulary& vocab) {
    const int v = vocab.size();
    const int first = Vocabulary::kNumSpecials;
    if (v <= first) fail("EmptyFrequencyTable", "vocabulary has no countable tokens");

    double total = 0.0;
    for (int id = first; id < v; ++id) total += static_cast<double>(vocab.frequency(id));
    double rf_max = 0.0;
    for (int id = first; id < v; ++id) {
        rf_max = std::max(rf_max, static_cast<double>(vocab.frequency(id)) / total);
    }

    std::vector<double> raw(static_cast<std::size_t>(v - first));
    double raw_mean = 0.0;
    for (int id = first; id < v; ++id) {
        double rf = static_cast<double>(vocab.frequency(id)) / total;
        raw[static_cast<std::size_t>(id - first)] = 1.0 - rf / rf_max;
        raw_mean += raw[static_cast<std::size_t>(id - first)];
    }
    raw_mean /= static_cast<double>(v - first);

    std::vector<double> weights(static_cast<std::size_t>(v), 1.0);
    for (int id = first; id < v; ++id) {
        double w = raw[static_cast<std::size_t>(id - first)] - raw_mean + 1.0;
        weights[static_cast<std::size_t>(id)] = std::min(2.0, std::max(0.0, w));
    }
    return weights;
}

Node face_loss(Graph& g, Node logits, const std::vector<int>& target_ids,
               const std::vector<double>& weights) {
    if (static_cast<int>(weights.size()) != g.value(logits).cols()) {
        fail("LengthMismatch", "one weight per vocabulary id is required");
    }
    std::vector<double> row_weights(target_ids.size());
    for (std::size_t r = 0; r < target_ids.size(); ++r) {
        int id = target_ids[r];
        if (id < 0 || id >= static_cast<int>(weights.size())) {
            fail("LabelOutOfRange", "target id " + std::to_string(id) + " outside the vocabulary");
        }
        row_weights[r] = weights[static_cast<std::size_t>(id)];
    }
    return g.nll_rows(logits, target_ids, row_weights);
}

Node total_loss(Graph& g, Node nll, Node emo, Node pre, Node dia, Node div,
                const LossWeights& w) {
    if (!nll.valid()) fail("NonScalarLoss", "the generation loss is always required");
    check_finite_scalar(g, nll, "generation loss");
    Node total = g.scale(nll, w.alpha);
    for (auto [node, name] : {std::pair<Node, const char*>{emo, "tagging loss"},
                              {pre, "response trait loss"},
                              {dia, "dialogue emotion loss"}}) {
        if (!node.valid()) continue;
        check_finite_scalar(g, node, name);
        total = g.add(total, g.scale(node, w.beta));
    }
    if (div.valid()) {
        check_finite_scalar(g, div, "diversity loss");
        total = g.add(total, g.scale(div, w.gamma));
    }
    check_finite_scalar(g, total, "total loss");
    return total;
}

double total_loss_value(double nll, double emo, double pre, double dia, double div,
                        const LossWeights& w) {
    double total = w.alpha * nll + w.beta * (emo + pre + dia) + w.gamma * div;
    if (!std::isfinite(total)) fail("NonFinite", "total loss is not finite");
    return total;
}

GenerateOutput generate(ModelParams& m, const Tensor& memory, const std::vector<bool>& memory_mask,
                        const Tensor& sos, int max_steps) {
    if (max_steps < 1) fail("BadFlag", "max_steps must be at least 1");
    GenerateOutput out;
    for (int step = 0; step < max_steps; ++step) {
        if (static_cast<int>(out.ids.size()) + 1 > m.cfg.max_pos) break;
        Graph g;
        Node mem = g.input(memory);
        Node start = g.input(sos);
        Node x = decoder_inputs(g, m, start, out.ids);
        Node states = decoder_stack(g, m, x, mem, memory_mask);
        Node logits = output_logits(g, m, states);
        int last = g.value(logits).rows() - 1;
        Node row = g.slice_rows(logits, last, 1);
        Node probs = g.softmax_rows(row);

        const Tensor& p = g.value(probs);
        int best = 0;
        for (int j = 1; j < p.cols(); ++j) {
            if (p.data[static_cast<std::size_t>(j)] > p.data[static_cast<std::size_t>(best)]) best = j;
        }
        out.step_logits.push_back(g.value(row));
        out.step_nll.push_back(-std::log(p.data[static_cast<std::size_t>(best)]));
        if (best == Vocabulary::kEos) break;
        out.ids.push_back(best);
    }
    return out;
}

} // namespace seek
