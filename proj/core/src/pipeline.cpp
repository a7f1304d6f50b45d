#include "seek/pipeline.hpp"

#include <algorithm>

#include "seek/encoder.hpp"
#include "seek/error.hpp"

namespace seek {

std::vector<int> response_targets(const std::string& text, const Vocabulary& vocab, int max_len) {
    if (max_len < 1) fail("BadFlag", "max_len must be at least 1");
    std::vector<std::string> tokens = tokenize_text(text);
    if (tokens.empty()) fail("EmptyText", "response has no tokens");
    std::vector<int> ids;
    ids.reserve(tokens.size() + 1);
    for (const std::string& tok : tokens) ids.push_back(vocab.id(tok));
    if (static_cast<int>(ids.size()) > max_len - 1) {
        ids.resize(static_cast<std::size_t>(max_len - 1));
    }
    ids.push_back(Vocabulary::kEos);
    return ids;
}

DialogueForward forward_dialogue(Graph& g, ModelParams& m, const Dialogue& dlg,
                                 const Vocabulary& vocab, const KnowledgeProvider& provider,
                                 const ForwardOptions& opt) {
    if (!opt.face_w) fail("EmptyFrequencyTable", "diversity weights are required");
    if (opt.extra_pad < 0) fail("BadFlag", "extra_pad must be non-negative");
    if (vocab.size() != m.vocab_size) {
        fail("ShapeMismatch", "vocabulary size does not match the model");
    }

    DialogueForward out;
    const int n_ctx = dlg.context_size();
    out.n_context = n_ctx;
    const std::vector<int> states = dialogue_state_ids(dlg);
    const AblationFlags& ab = opt.ablate;

    // Serial encoding of the context plus per-utterance knowledge.
    std::vector<Node> utter_sum;
    std::vector<Node> know_sum;
    std::vector<Node> know_state_parts;
    std::vector<bool> know_mask;
    utter_sum.reserve(static_cast<std::size_t>(n_ctx));
    know_sum.reserve(static_cast<std::size_t>(n_ctx));
    for (int i = 0; i < n_ctx; ++i) {
        const Utterance& u = dlg.utterances[static_cast<std::size_t>(i)];
        TokenSeq seq = tokenize_utterance(u.text, vocab, m.cfg.L_n);
        if (opt.extra_pad > 0) {
            int padded = std::min(m.cfg.L_n, static_cast<int>(seq.ids.size()) + opt.extra_pad);
            seq = pad_to(seq, padded);
        }
        Encoded enc = encode_utterance(g, m, seq, states[static_cast<std::size_t>(i)]);
        utter_sum.push_back(enc.summary);

        if (!out.memory.valid()) {
            out.memory = enc.states;
            out.memory_mask = seq.mask;
        } else {
            out.memory = g.concat_rows({out.memory, enc.states});
            out.memory_mask.insert(out.memory_mask.end(), seq.mask.begin(), seq.mask.end());
        }

        if (ab.no_knowledge) {
            know_sum.push_back(g.zeros(1, m.cfg.d));
        } else {
            KnowledgeBundle bundle = assemble(u.text, provider, vocab, m.cfg.L_s);
            Encoded kenc = encode_knowledge(g, m, bundle.tokens);
            know_sum.push_back(kenc.summary);
            know_state_parts.push_back(kenc.states);
            know_mask.insert(know_mask.end(), bundle.tokens.mask.begin(), bundle.tokens.mask.end());
        }
    }

    Node flow = fuse_and_flow(g, m, utter_sum, know_sum);

    // Supervision heads; ablations drop loss terms, not the distributions.
    std::vector<int> tag_labels;
    tag_labels.reserve(static_cast<std::size_t>(n_ctx));
    for (int i = 0; i < n_ctx; ++i) {
        tag_labels.push_back(dlg.utterances[static_cast<std::size_t>(i)].ei_label);
    }
    TagOutput tag = tag_utterances(g, m, flow, tag_labels);
    out.p_tag = tag.probs;
    if (!ab.no_utter_tagging) out.emo = tag.loss;

    PooledOutput pre = predict_response_trait(g, m, flow, dlg.response().ei_label);
    out.p_pre = pre.probs;
    out.pool_pre_attn = pre.attn;
    if (!ab.no_response_prediction) out.pre = pre.loss;

    PooledOutput dia = recognize_dialogue_emotion(g, m, flow, dlg.dialogue_emotion);
    out.p_dia = dia.probs;
    out.pool_dia_attn = dia.attn;
    out.dia = dia.loss;

    // Knowledge summary for the start vector.
    Node summary;
    if (ab.no_knowledge) {
        summary = g.zeros(1, m.cfg.d);
    } else {
        Node know_states = know_state_parts.size() == 1 ? know_state_parts[0]
                                                        : g.concat_rows(know_state_parts);
        if (ab.no_emotion_harmonization) {
            summary = g.mean_pool_rows(know_states, know_mask);
        } else {
            SelectOutput sel = select_knowledge(g, m, flow, know_states, know_mask);
            summary = sel.summary;
            out.trace = std::move(sel.trace);
        }
    }

    Node trait = ab.no_response_prediction ? g.zeros(1, 2 * m.cfg.d) : pre.pooled;
    out.sos = make_sos(g, m, summary, trait);

    out.target_ids = response_targets(dlg.response().text, vocab, m.cfg.L_n);
    DecodeTrainOutput dec = decode_train(g, m, out.memory, out.memory_mask, out.sos, out.target_ids);
    out.nll = dec.nll;
    out.logits = dec.logits;
    out.div = face_loss(g, dec.logits, out.target_ids, *opt.face_w);

    out.total = total_loss(g, out.nll, out.emo, out.pre, out.dia, out.div, opt.weights);
    return out;
}

} // namespace seek
