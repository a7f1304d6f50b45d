#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/decoder.hpp"
#include "seek/error.hpp"
#include "seek/knowledge.hpp"
#include "seek/metrics.hpp"
#include "seek/model.hpp"
#include "seek/pipeline.hpp"
#include "seek/trainer.hpp"

namespace {

using namespace seek;

struct Flags {
    std::string config;
    std::string checkpoint;
    std::string corpus;
    std::string knowledge;
    std::string out;
    std::string input;
    std::string ablate;
    long long seed = -1;
    int d = 8;
    int vocab = 30;
};

std::unique_ptr<KnowledgeProvider> make_provider(const std::string& knowledge_path) {
    if (knowledge_path.empty()) return std::make_unique<TemplateKnowledgeProvider>();
    return std::make_unique<PrecomputedKnowledgeProvider>(knowledge_path, true);
}

void require_flag(const std::string& value, const char* flag, const char* cmd) {
    if (value.empty()) {
        fail("BadFlag", std::string(cmd) + " requires " + flag);
    }
}

Config load_or_default(const Flags& f) {
    Config cfg = f.config.empty() ? Config{} : load_config(f.config);
    if (f.seed >= 0) cfg.train.seed = static_cast<unsigned>(f.seed);
    if (!f.ablate.empty()) cfg.train.ablate = parse_ablations(f.ablate);
    return cfg;
}

int cmd_train(const Flags& f) {
    require_flag(f.corpus, "--corpus", "train");
    Config cfg = load_or_default(f);
    std::string out_path = f.out.empty() ? "seek_ckpt.bin" : f.out;

    std::vector<Dialogue> dialogues = load_corpus(f.corpus);
    Vocabulary vocab = with_separator(build_vocab(dialogues, cfg.train.min_freq));
    Rng rng(cfg.train.seed);
    ModelParams m(cfg.model, vocab.size(), rng);
    std::unique_ptr<KnowledgeProvider> provider = make_provider(f.knowledge);

    TrainResult res = train(m, dialogues, {}, vocab, *provider, cfg.train);
    save_bundle(out_path, m, vocab, cfg, res.steps);

    nlohmann::json history;
    history["steps"] = res.steps;
    history["best_val"] = res.best_val;
    history["stopped_early"] = res.stopped_early;
    history["val_history"] = res.val_history;
    history["train_trace"] = res.train_trace;
    history["lr_trace"] = res.lr_trace;
    std::ofstream hist_out(out_path + ".history.json");
    if (!hist_out) fail("MissingFile", "cannot write " + out_path + ".history.json");
    hist_out << history.dump() << '\n';

    std::cout << "trained " << res.steps << " steps over " << dialogues.size()
              << " dialogues, best validation loss " << res.best_val << ", checkpoint "
              << out_path << '\n';
    return 0;
}

int cmd_eval(const Flags& f) {
    require_flag(f.checkpoint, "--checkpoint", "eval");
    require_flag(f.corpus, "--corpus", "eval");
    Bundle bundle = load_bundle(f.checkpoint);
    std::vector<Dialogue> dialogues = load_corpus(f.corpus);
    std::unique_ptr<KnowledgeProvider> provider = make_provider(f.knowledge);

    EvalOptions opt;
    opt.ablate = f.ablate.empty() ? bundle.cfg.train.ablate : parse_ablations(f.ablate);
    opt.weights = bundle.cfg.train.weights;
    opt.max_decode_steps = bundle.cfg.train.max_decode_steps;

    EvalReport report = evaluate(*bundle.params, dialogues, bundle.vocab, *provider, opt);
    if (!f.out.empty()) write_report(f.out, report);
    std::cout << report_to_json(report) << '\n';
    return 0;
}

int cmd_generate(const Flags& f) {
    require_flag(f.checkpoint, "--checkpoint", "generate");
    require_flag(f.input, "--input", "generate");
    Bundle bundle = load_bundle(f.checkpoint);
    std::vector<Dialogue> dialogues = load_corpus(f.input);
    std::unique_ptr<KnowledgeProvider> provider = make_provider(f.knowledge);

    EvalOptions opt;
    opt.ablate = f.ablate.empty() ? bundle.cfg.train.ablate : parse_ablations(f.ablate);
    opt.weights = bundle.cfg.train.weights;
    opt.max_decode_steps = bundle.cfg.train.max_decode_steps;

    std::vector<GeneratedResponse> responses;
    evaluate(*bundle.params, dialogues, bundle.vocab, *provider, opt, &responses);

    std::ostream* sink = &std::cout;
    std::ofstream file;
    if (!f.out.empty()) {
        file.open(f.out);
        if (!file) fail("MissingFile", "cannot write " + f.out);
        sink = &file;
    }
    for (const GeneratedResponse& r : responses) {
        nlohmann::json line;
        line["dialogue_id"] = r.dialogue_id;
        line["response"] = r.text;
        line["pred_ei"] = r.pred_ei;
        *sink << line.dump() << '\n';
    }
    return 0;
}

int cmd_gradcheck(const Flags& f) {
    if (f.d < 2 || f.d % 2 != 0) fail("BadFlag", "--d must be even and at least 2");
    if (f.vocab < Vocabulary::kNumSpecials + 4) fail("BadFlag", "--vocab is too small");

    ModelConfig mc;
    mc.d = f.d;
    mc.layers = 1;
    mc.heads = 2;
    mc.L_n = 24;
    mc.L_s = 40;
    mc.s = 2;
    mc.ffn_mult = 4;
    mc.max_pos = 64;

    std::vector<std::string> tokens;
    std::vector<std::int64_t> freqs;
    for (int i = 0; i < f.vocab - Vocabulary::kNumSpecials; ++i) {
        tokens.push_back("w" + std::to_string(i));
        freqs.push_back(1 + i % 5);
    }
    Vocabulary vocab(tokens, freqs);

    unsigned seed = f.seed >= 0 ? static_cast<unsigned>(f.seed) : 7u;
    Rng rng(seed);
    auto sample_text = [&](int len) {
        std::string text;
        for (int i = 0; i < len; ++i) {
            if (i) text += ' ';
            text += tokens[rng.index(tokens.size())];
        }
        return text;
    };
    Dialogue dlg;
    dlg.id = "desk";
    dlg.dialogue_emotion = static_cast<int>(rng.index(kNumEmotions));
    for (int u = 0; u < 3; ++u) {
        dlg.utterances.push_back(Utterance{sample_text(4 + static_cast<int>(rng.index(3))),
                                           u % 2 == 0 ? Role::Speaker : Role::Listener,
                                           static_cast<int>(rng.index(kNumTags))});
    }

    ModelParams m(mc, vocab.size(), rng);
    TemplateKnowledgeProvider provider;
    std::vector<double> face_w = face_weights(vocab);
    ForwardOptions opt;
    opt.face_w = &face_w;

    auto closure = [&](bool with_grad) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, m, dlg, vocab, provider, opt);
        if (with_grad) g.backward(fwd.total);
        return g.value(fwd.total).data[0];
    };

    const double tol = 1e-5;
    GradCheckReport report = grad_check(closure, m.all(), 1e-5, tol);
    for (const GradCheckEntry& e : report.entries) {
        std::cout << e.name << " max_rel_err " << e.max_rel_err << '\n';
    }
    if (report.pass()) {
        std::cout << "all < 1e-5 (worst " << report.worst << " over " << report.entries.size()
                  << " parameters)\n";
        return 0;
    }
    std::cout << "FAIL: worst " << report.worst << " >= 1e-5\n";
    return 1;
}

int cmd_prep_knowledge(const Flags& f) {
    require_flag(f.corpus, "--corpus", "prep-knowledge");
    require_flag(f.out, "--out", "prep-knowledge");
    std::vector<Dialogue> dialogues = load_corpus(f.corpus);
    std::vector<std::string> keys;
    std::set<std::string> seen;
    for (const Dialogue& d : dialogues) {
        for (const Utterance& u : d.utterances) {
            if (seen.insert(u.text).second) keys.push_back(u.text);
        }
    }
    TemplateKnowledgeProvider provider;
    write_knowledge_file(f.out, keys, provider);
    std::cout << "wrote " << keys.size() << " knowledge keys to " << f.out << '\n';
    return 0;
}

int cmd_export_attn(const Flags& f) {
    require_flag(f.checkpoint, "--checkpoint", "export-attn");
    require_flag(f.corpus, "--corpus", "export-attn");
    require_flag(f.out, "--out", "export-attn");
    Bundle bundle = load_bundle(f.checkpoint);
    std::vector<Dialogue> dialogues = load_corpus(f.corpus);
    std::unique_ptr<KnowledgeProvider> provider = make_provider(f.knowledge);

    std::vector<double> face_w = face_weights(bundle.vocab);
    ForwardOptions opt;
    opt.ablate = f.ablate.empty() ? bundle.cfg.train.ablate : parse_ablations(f.ablate);
    opt.weights = bundle.cfg.train.weights;
    opt.face_w = &face_w;

    std::ofstream out(f.out);
    if (!out) fail("MissingFile", "cannot write " + f.out);
    for (const Dialogue& dlg : dialogues) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, *bundle.params, dlg, bundle.vocab, *provider,
                                               opt);
        write_selection_trace(out, dlg.id, fwd.trace);
    }
    std::cout << "exported selection traces for " << dialogues.size() << " dialogues to "
              << f.out << '\n';
    return 0;
}

const char* kUsage =
    "usage: seek <command> [flags]\n"
    "commands:\n"
    "  train          --corpus PATH [--config PATH] [--knowledge PATH] [--out PATH]\n"
    "                 [--seed N] [--ablate FLAG,...]\n"
    "  eval           --checkpoint PATH --corpus PATH [--knowledge PATH] [--out PATH]\n"
    "                 [--ablate FLAG,...]\n"
    "  generate       --checkpoint PATH --input PATH [--knowledge PATH] [--out PATH]\n"
    "  gradcheck      [--d N] [--vocab N] [--seed N]\n"
    "  prep-knowledge --corpus PATH --out PATH\n"
    "  export-attn    --checkpoint PATH --corpus PATH --out PATH [--knowledge PATH]\n";

int run(int argc, char** argv) {
    static const std::set<std::string> known{"train",     "eval",           "generate",
                                             "gradcheck", "prep-knowledge", "export-attn"};
    if (argc < 2) fail("BadFlag", std::string("a command is required\n") + kUsage);
    std::string cmd = argv[1];
    if (cmd == "-h" || cmd == "--help" || cmd == "help") {
        std::cout << kUsage;
        return 0;
    }
    if (!known.count(cmd)) fail("UnknownCommand", "unknown command '" + cmd + "'");

    Flags f;
    CLI::App app{"seek " + cmd};
    if (cmd == "train" || cmd == "eval" || cmd == "generate" || cmd == "prep-knowledge" ||
        cmd == "export-attn") {
        app.add_option("--config", f.config, "key=value config file");
        app.add_option("--checkpoint", f.checkpoint, "checkpoint bundle path");
        app.add_option("--corpus", f.corpus, "dialogue JSONL path");
        app.add_option("--knowledge", f.knowledge, "precomputed knowledge JSONL");
        app.add_option("--out", f.out, "output path");
        app.add_option("--seed", f.seed, "seed override");
        app.add_option("--ablate", f.ablate, "comma-separated ablation flags");
        if (cmd == "generate") app.add_option("--input", f.input, "context JSONL path");
    } else {
        app.add_option("--d", f.d, "model width");
        app.add_option("--vocab", f.vocab, "vocabulary size");
        app.add_option("--seed", f.seed, "rig seed");
    }
    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("BadFlag", e.what());
    }

    if (cmd == "train") return cmd_train(f);
    if (cmd == "eval") return cmd_eval(f);
    if (cmd == "generate") return cmd_generate(f);
    if (cmd == "gradcheck") return cmd_gradcheck(f);
    if (cmd == "prep-knowledge") return cmd_prep_knowledge(f);
    return cmd_export_attn(f);
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "Internal: " << e.what() << '\n';
        return 1;
    }
}
