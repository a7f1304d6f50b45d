// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each check is self-contained and seeded.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seek/decoder.hpp"
#include "seek/encoder.hpp"
#include "seek/error.hpp"
#include "seek/metrics.hpp"
#include "seek/pipeline.hpp"
#include "seek/trainer.hpp"

using namespace seek;

namespace {

int g_failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
    if (!pass) ++g_failures;
}

void run_criterion(const char* name, const std::function<std::pair<bool, std::string>()>& fn) {
    try {
        auto [pass, detail] = fn();
        report(name, pass, detail);
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

Tensor random_tensor(int r, int c, Rng& rng, double lo = -3.0, double hi = 3.0) {
    Tensor t = Tensor::zeros({r, c});
    for (double& x : t.data) x = rng.uniform(lo, hi);
    return t;
}

// ---- the reference desk rig: d x 1-layer x 2-head model over a synthetic
// three-utterance dialogue with a 30-entry vocabulary ----

struct DeskRig {
    Vocabulary vocab;
    Dialogue dlg;
    ModelParams m;
    std::vector<double> face_w;
    TemplateKnowledgeProvider provider;

    static Vocabulary make_vocab(int n_tokens) {
        std::vector<std::string> tokens;
        std::vector<std::int64_t> freqs;
        for (int i = 0; i < n_tokens; ++i) {
            tokens.push_back("w" + std::to_string(i));
            freqs.push_back(1 + i % 5);
        }
        return Vocabulary(tokens, freqs);
    }

    static ModelConfig make_config(int d) {
        ModelConfig mc;
        mc.d = d;
        mc.layers = 1;
        mc.heads = 2;
        mc.L_n = 24;
        mc.L_s = 40;
        mc.s = 2;
        mc.ffn_mult = 4;
        mc.max_pos = 64;
        return mc;
    }

    DeskRig(int d, int vocab_n, unsigned seed)
        : vocab(make_vocab(vocab_n - Vocabulary::kNumSpecials)),
          dlg(), m(make_params(d, vocab, seed, dlg)), face_w(face_weights(vocab)) {}

    // Builds the dialogue as a side effect so one Rng seeds everything.
    static ModelParams make_params(int d, const Vocabulary& vocab, unsigned seed, Dialogue& dlg) {
        Rng rng(seed);
        std::vector<std::string> tokens = vocab.indexed_tokens();
        auto sample_text = [&](int len) {
            std::string text;
            for (int i = 0; i < len; ++i) {
                if (i) text += ' ';
                text += tokens[rng.index(tokens.size())];
            }
            return text;
        };
        dlg.id = "desk";
        dlg.dialogue_emotion = static_cast<int>(rng.index(kNumEmotions));
        for (int u = 0; u < 3; ++u) {
            dlg.utterances.push_back(Utterance{sample_text(4 + static_cast<int>(rng.index(3))),
                                               u % 2 == 0 ? Role::Speaker : Role::Listener,
                                               static_cast<int>(rng.index(kNumTags))});
        }
        return ModelParams(make_config(d), vocab.size(), rng);
    }
};

std::pair<bool, std::string> full_model_gradient_check() {
    DeskRig rig(8, 30, 7);
    ForwardOptions opt;
    opt.face_w = &rig.face_w;
    auto closure = [&](bool with_grad) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, rig.m, rig.dlg, rig.vocab, rig.provider, opt);
        if (with_grad) g.backward(fwd.total);
        return g.value(fwd.total).data[0];
    };

    auto start = std::chrono::steady_clock::now();
    GradCheckReport rep = grad_check(closure, rig.m.all(), 1e-5, 1e-5);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool pass = rep.pass() && seconds < 60.0 && rep.entries.size() == rig.m.all().size();
    return {pass, "worst rel err " + fmt(rep.worst) + " over " + std::to_string(rep.entries.size()) +
                      " parameters in " + fmt(seconds) + " s (limit 1e-5, 60 s)"};
}

std::pair<bool, std::string> face_reduction() {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int t_len = 1 + static_cast<int>(rng.index(8));
        int v = 6 + static_cast<int>(rng.index(40));
        Tensor logits = random_tensor(t_len, v, rng, -6.0, 6.0);
        std::vector<int> targets;
        for (int r = 0; r < t_len; ++r) {
            targets.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(v))));
        }
        Graph g;
        Node lg = g.input(logits);
        double plain = g.value(g.nll_rows(lg, targets)).data[0];
        double unit =
            g.value(face_loss(g, lg, targets, std::vector<double>(static_cast<std::size_t>(v), 1.0)))
                .data[0];
        worst = std::max(worst, std::abs(plain - unit));
    }
    return {worst < 1e-12, "max |face - nll| = " + fmt(worst) + " over 100 random logit sets"};
}

std::pair<bool, std::string> loss_composition() {
    LossWeights w; // alpha 1, beta 1, gamma 1.5
    double direct = total_loss_value(2.0, 3.0, 0.0, 0.0, 1.0, w);
    Graph g;
    Node total =
        total_loss(g, g.constant(2.0), g.constant(3.0), Node{}, Node{}, g.constant(1.0), w);
    double graph = g.value(total).data[0];
    bool pass = direct == 6.5 && graph == 6.5;
    return {pass, "scalar " + fmt(direct) + ", graph " + fmt(graph) + " (expected exactly 6.5)"};
}

std::pair<bool, std::string> overfit_memorization() {
    auto start = std::chrono::steady_clock::now();

    std::vector<Dialogue> corpus;
    for (int i = 0; i < 10; ++i) {
        Dialogue d;
        d.id = "syn" + std::to_string(i);
        d.dialogue_emotion = i;
        std::string tag = std::to_string(i);
        d.utterances = {
            Utterance{"cue" + tag + " mark" + tag + " note" + tag, Role::Speaker, i},
            Utterance{"echo" + tag + " reply" + tag + " done", Role::Listener, i + 20}};
        corpus.push_back(std::move(d));
    }
    Vocabulary vocab = with_separator(build_vocab(corpus, 1));

    ModelConfig mc;
    mc.d = 16;
    mc.layers = 1;
    mc.heads = 2;
    mc.L_n = 12;
    mc.L_s = 25;
    mc.s = 1;
    mc.ffn_mult = 2;
    mc.max_pos = 25;
    Rng rng(11);
    ModelParams m(mc, vocab.size(), rng);
    TemplateKnowledgeProvider provider;

    TrainConfig tc;
    tc.batch_size = 10;
    tc.use_schedule = false;
    tc.base_lr = 0.01;
    tc.max_steps = 300;
    tc.eval_every = 50;
    tc.patience = 50;
    tc.seed = 11;
    TrainResult res = train(m, corpus, {}, vocab, provider, tc);

    EvalOptions eopt;
    EvalReport rep = evaluate(m, corpus, vocab, provider, eopt);
    double nll = std::log(rep.ppl);
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool pass = res.steps <= 300 && nll < 0.1 && rep.de_acc == 1.0 && rep.uei_acc == 1.0 &&
                rep.rei_acc == 1.0 && seconds < 300.0;
    return {pass, "per-token NLL " + fmt(nll) + " (< 0.1), DE " + fmt(rep.de_acc) + " UEI " +
                      fmt(rep.uei_acc) + " REI " + fmt(rep.rei_acc) + " (= 1.0), " +
                      std::to_string(res.steps) + " steps in " + fmt(seconds) + " s (< 300 s)"};
}

std::pair<bool, std::string> metric_oracles() {
    double l2 = std::log(2.0);
    double l4 = std::log(4.0);
    double ppl = perplexity({l2, l4});
    bool ppl_ok = std::abs(ppl - 2.0 * std::sqrt(2.0)) <= 1e-9;

    bool dist_ok = dist_n({{7, 8, 7}}, 1) == 2.0 / 3.0;

    Rng rng(102);
    int mismatches = 0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<int>> responses;
        int n_resp = 1 + static_cast<int>(rng.index(6));
        for (int i = 0; i < n_resp; ++i) {
            int len = 1 + static_cast<int>(rng.index(9));
            std::vector<int> ids;
            for (int j = 0; j < len; ++j) ids.push_back(5 + static_cast<int>(rng.index(8)));
            responses.push_back(std::move(ids));
        }
        for (int n : {1, 2}) {
            std::set<std::vector<int>> grams;
            int total = 0;
            for (const std::vector<int>& r : responses) {
                for (int i = 0; i + n <= static_cast<int>(r.size()); ++i) {
                    grams.insert(std::vector<int>(r.begin() + i, r.begin() + i + n));
                    ++total;
                }
            }
            if (total == 0) continue;
            double oracle = static_cast<double>(grams.size()) / static_cast<double>(total);
            if (dist_n(responses, n) != oracle) ++mismatches;
        }
    }
    bool pass = ppl_ok && dist_ok && mismatches == 0;
    return {pass, "two-token PPL " + fmt(ppl) + " (2*sqrt(2) +- 1e-9), dist-1 worked example " +
                      std::string(dist_ok ? "exact" : "WRONG") + ", " +
                      std::to_string(mismatches) + " brute-force mismatches over 50 corpora"};
}

Dialogue fuzz_dialogue(Rng& rng, const std::vector<std::string>& pool, int idx) {
    Dialogue d;
    d.id = "fuzz" + std::to_string(idx);
    d.dialogue_emotion = static_cast<int>(rng.index(kNumEmotions));
    int n_utt = 2 + static_cast<int>(rng.index(3));
    for (int u = 0; u < n_utt; ++u) {
        int len = 2 + static_cast<int>(rng.index(5));
        std::string text;
        for (int i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += pool[rng.index(pool.size())];
        }
        d.utterances.push_back(Utterance{text, u % 2 == 0 ? Role::Speaker : Role::Listener,
                                         static_cast<int>(rng.index(kNumTags))});
    }
    return d;
}

std::pair<bool, std::string> padding_invariance() {
    DeskRig rig(8, 30, 13);
    ForwardOptions opt;
    opt.face_w = &rig.face_w;
    Rng rng(103);
    std::vector<std::string> pool = rig.vocab.indexed_tokens();

    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Dialogue dlg = fuzz_dialogue(rng, pool, trial);
        Graph g1;
        DialogueForward a = forward_dialogue(g1, rig.m, dlg, rig.vocab, rig.provider, opt);

        ForwardOptions padded = opt;
        padded.extra_pad = 1 + static_cast<int>(rng.index(8));
        Graph g2;
        DialogueForward b = forward_dialogue(g2, rig.m, dlg, rig.vocab, rig.provider, padded);

        auto diff_scalar = [&](Node x, Node y) {
            return std::abs(g1.value(x).data[0] - g2.value(y).data[0]);
        };
        worst = std::max(worst, diff_scalar(a.total, b.total));
        worst = std::max(worst, diff_scalar(a.nll, b.nll));
        worst = std::max(worst, diff_scalar(a.emo, b.emo));
        worst = std::max(worst, diff_scalar(a.pre, b.pre));
        worst = std::max(worst, diff_scalar(a.dia, b.dia));
        worst = std::max(worst, diff_scalar(a.div, b.div));
        std::vector<std::pair<Node, Node>> heads = {
            {a.p_tag, b.p_tag},   {a.p_pre, b.p_pre},
            {a.p_dia, b.p_dia},   {a.pool_pre_attn, b.pool_pre_attn},
            {a.pool_dia_attn, b.pool_dia_attn}, {a.sos, b.sos}};
        for (auto [x, y] : heads) {
            const Tensor& tx = g1.value(x);
            const Tensor& ty = g2.value(y);
            for (std::size_t i = 0; i < tx.data.size(); ++i) {
                worst = std::max(worst, std::abs(tx.data[i] - ty.data[i]));
            }
        }
    }
    return {worst <= 1e-9,
            "max deviation " + fmt(worst) + " over 20 dialogues with 1-8 extra pads (limit 1e-9)"};
}

std::pair<bool, std::string> distribution_sanity() {
    DeskRig rig(8, 30, 17);
    ForwardOptions opt;
    opt.face_w = &rig.face_w;
    Rng rng(104);
    std::vector<std::string> pool = rig.vocab.indexed_tokens();

    double worst = 0.0;
    long long rows = 0;
    auto check_rows = [&](const Tensor& t) {
        for (int r = 0; r < t.rows(); ++r) {
            double sum = 0.0;
            for (int c = 0; c < t.cols(); ++c) sum += t.at(r, c);
            worst = std::max(worst, std::abs(sum - 1.0));
            ++rows;
        }
    };
    for (int trial = 0; trial < 100; ++trial) {
        Dialogue dlg = fuzz_dialogue(rng, pool, trial);
        Graph g;
        DialogueForward f = forward_dialogue(g, rig.m, dlg, rig.vocab, rig.provider, opt);
        check_rows(g.value(f.p_tag));
        check_rows(g.value(f.p_pre));
        check_rows(g.value(f.p_dia));
        check_rows(g.value(f.pool_pre_attn));
        check_rows(g.value(f.pool_dia_attn));
        for (const auto& layer : f.trace.weights) {
            for (const Tensor& w : layer) check_rows(w);
        }
    }
    return {worst <= 1e-9, "max |row sum - 1| = " + fmt(worst) + " over " + std::to_string(rows) +
                               " distribution rows from 100 dialogues (limit 1e-9)"};
}

std::pair<bool, std::string> ablation_wiring() {
    DeskRig rig(8, 30, 19);
    ForwardOptions opt;
    opt.face_w = &rig.face_w;
    opt.ablate.no_knowledge = true;

    Graph g;
    DialogueForward f = forward_dialogue(g, rig.m, rig.dlg, rig.vocab, rig.provider, opt);
    rig.m.zero_grads();
    g.backward(f.total);
    double sel_mass = 0.0;
    double other_mass = 0.0;
    for (Parameter* p : rig.m.all()) {
        double mass = 0.0;
        for (double gv : p->value.grad) mass += std::abs(gv);
        if (p->name.rfind("sel", 0) == 0) {
            sel_mass += mass;
        } else {
            other_mass += mass;
        }
    }

    ForwardOptions full;
    full.face_w = &rig.face_w;
    Graph g2;
    DialogueForward all_on = forward_dialogue(g2, rig.m, rig.dlg, rig.vocab, rig.provider, full);
    bool five_terms = all_on.nll.valid() && all_on.emo.valid() && all_on.pre.valid() &&
                      all_on.dia.valid() && all_on.div.valid();
    double composed = g2.value(all_on.nll).data[0] + g2.value(all_on.emo).data[0] +
                      g2.value(all_on.pre).data[0] + g2.value(all_on.dia).data[0] +
                      1.5 * g2.value(all_on.div).data[0];
    bool composition = std::abs(composed - g2.value(all_on.total).data[0]) <= 1e-12;

    bool pass = sel_mass == 0.0 && other_mass > 0.0 && five_terms && composition;
    return {pass, "knowledge-path grad mass " + fmt(sel_mass) + " (exactly 0), other " +
                      fmt(other_mass) + " (> 0); five terms " +
                      (five_terms ? "present" : "MISSING") + ", composition error " +
                      fmt(std::abs(composed - g2.value(all_on.total).data[0]))};
}

std::pair<bool, std::string> determinism() {
    std::vector<Dialogue> corpus;
    for (int i = 0; i < 4; ++i) {
        Dialogue d;
        d.id = "det" + std::to_string(i);
        d.dialogue_emotion = i;
        std::string tag = std::to_string(i);
        d.utterances = {Utterance{"left" + tag + " mid" + tag, Role::Speaker, i},
                        Utterance{"right" + tag + " end", Role::Listener, i + 10}};
        corpus.push_back(std::move(d));
    }
    Vocabulary vocab = with_separator(build_vocab(corpus, 1));
    TemplateKnowledgeProvider provider;

    ModelConfig mc;
    mc.d = 8;
    mc.layers = 1;
    mc.heads = 2;
    mc.L_n = 10;
    mc.L_s = 25;
    mc.s = 1;
    mc.ffn_mult = 2;
    mc.max_pos = 25;
    TrainConfig tc;
    tc.batch_size = 4;
    tc.use_schedule = false;
    tc.base_lr = 0.005;
    tc.max_steps = 30;
    tc.eval_every = 10;
    tc.patience = 50;
    tc.seed = 3;
    Config cfg;
    cfg.model = mc;
    cfg.train = tc;

    auto run_once = [&](const std::string& path) {
        Rng rng(21);
        ModelParams m(mc, vocab.size(), rng);
        TrainResult res = train(m, corpus, {}, vocab, provider, tc);
        save_bundle(path, m, vocab, cfg, res.steps);
        return corpus_loss(m, corpus, vocab, provider, tc);
    };
    std::string p1 = (std::filesystem::temp_directory_path() / "seek_acc_run1.bin").string();
    std::string p2 = (std::filesystem::temp_directory_path() / "seek_acc_run2.bin").string();
    double loss1 = run_once(p1);
    double loss2 = run_once(p2);

    auto file_bytes = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    bool ckpt_identical = file_bytes(p1) == file_bytes(p2) && !file_bytes(p1).empty();
    bool sidecar_identical = file_bytes(p1 + ".json") == file_bytes(p2 + ".json");

    Bundle bundle = load_bundle(p1);
    double reloaded = corpus_loss(*bundle.params, corpus, bundle.vocab, provider,
                                  bundle.cfg.train);
    bool roundtrip = reloaded == loss1;

    for (const std::string& p : {p1, p2, p1 + ".json", p2 + ".json"}) std::remove(p.c_str());

    bool pass = loss1 == loss2 && ckpt_identical && sidecar_identical && roundtrip;
    return {pass, std::string("checkpoints ") + (ckpt_identical ? "bitwise identical" : "DIFFER") +
                      ", losses " + (loss1 == loss2 ? "equal" : "DIFFER") + ", reload loss " +
                      (roundtrip ? "identical" : "DIFFERS") + " (" + fmt(reloaded) + ")"};
}

} // namespace

int main() {
    run_criterion("full-model gradient check", full_model_gradient_check);
    run_criterion("diversity-loss unit-weight reduction", face_reduction);
    run_criterion("loss composition", loss_composition);
    run_criterion("overfit memorization", overfit_memorization);
    run_criterion("metric oracles", metric_oracles);
    run_criterion("padding invariance", padding_invariance);
    run_criterion("distribution sanity", distribution_sanity);
    run_criterion("ablation wiring", ablation_wiring);
    run_criterion("determinism", determinism);

    if (g_failures == 0) {
        std::printf("all 9 criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
