#include "seek/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "seek/autograd.hpp"
#include "seek/decoder.hpp"
#include "seek/error.hpp"
#include "seek/pipeline.hpp"

namespace seek {

Adam::Adam(std::vector<Parameter*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Parameter* p : params_) {
        m_.emplace_back(p->value.numel(), 0.0);
        v_.emplace_back(p->value.numel(), 0.0);
    }
}

void Adam::step(double lr) {
    if (!(lr > 0.0) || !std::isfinite(lr)) fail("BadFlag", "learning rate must be positive");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Parameter& p = *params_[pi];
        if (!p.trainable) continue;
        std::vector<double>& m = m_[pi];
        std::vector<double>& v = v_[pi];
        const bool has_grad = !p.value.grad.empty();
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            double grad = has_grad ? p.value.grad[i] : 0.0;
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad * grad;
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            p.value.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }
}

double lr_at(long long step, int d, int warmup, double factor) {
    if (step < 1) fail("BadFlag", "schedule steps are 1-based");
    if (d < 1 || warmup < 1 || factor <= 0.0) fail("BadFlag", "bad schedule constants");
    double s = static_cast<double>(step);
    double w = static_cast<double>(warmup);
    return factor * std::pow(static_cast<double>(d), -0.5) *
           std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

bool early_stop(const std::vector<double>& val_history, int patience) {
    if (patience < 1) fail("BadFlag", "patience must be at least 1");
    if (val_history.empty()) return false;
    std::size_t best = 0;
    for (std::size_t i = 1; i < val_history.size(); ++i) {
        if (val_history[i] < val_history[best]) best = i;
    }
    return val_history.size() - 1 - best >= static_cast<std::size_t>(patience);
}

namespace {

double mean_corpus_loss(ModelParams& m, const std::vector<Dialogue>& corpus,
                        const Vocabulary& vocab, const KnowledgeProvider& provider,
                        const ForwardOptions& opt) {
    if (corpus.empty()) fail("EmptyCorpus", "no dialogues to score");
    double total = 0.0;
    for (const Dialogue& dlg : corpus) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, m, dlg, vocab, provider, opt);
        total += g.value(fwd.total).data[0];
    }
    return total / static_cast<double>(corpus.size());
}

// Fisher-Yates over indices; self-contained so the order is identical on
// every standard library.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.index(i));
        std::swap(idx[i - 1], idx[j]);
    }
}

void clip_gradients(std::vector<Parameter*>& params, double max_norm) {
    double sq = 0.0;
    for (const Parameter* p : params) {
        for (double gv : p->value.grad) sq += gv * gv;
    }
    double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    double scale = max_norm / norm;
    for (Parameter* p : params) {
        for (double& gv : p->value.grad) gv *= scale;
    }
}

} // namespace

double corpus_loss(ModelParams& m, const std::vector<Dialogue>& corpus, const Vocabulary& vocab,
                   const KnowledgeProvider& provider, const TrainConfig& tc) {
    std::vector<double> face_w = face_weights(vocab);
    ForwardOptions opt;
    opt.ablate = tc.ablate;
    opt.weights = tc.weights;
    opt.face_w = &face_w;
    return mean_corpus_loss(m, corpus, vocab, provider, opt);
}

TrainResult train(ModelParams& m, const std::vector<Dialogue>& train_set,
                  const std::vector<Dialogue>& val_set, const Vocabulary& vocab,
                  const KnowledgeProvider& provider, const TrainConfig& tc) {
    tc.validate();
    if (train_set.empty()) fail("EmptyCorpus", "training corpus is empty");
    const std::vector<Dialogue>& validation = val_set.empty() ? train_set : val_set;

    std::vector<double> face_w = face_weights(vocab);
    ForwardOptions opt;
    opt.ablate = tc.ablate;
    opt.weights = tc.weights;
    opt.face_w = &face_w;

    std::vector<Parameter*> params = m.all();
    Adam adam(params);
    Rng rng(tc.seed);

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_indices(order, rng);
    std::size_t cursor = 0;

    TrainResult result;
    std::vector<Tensor> best_snapshot;

    for (int step = 1; step <= tc.max_steps; ++step) {
        m.zero_grads();
        int batch_n = std::min<int>(tc.batch_size, static_cast<int>(train_set.size()));
        double batch_loss = 0.0;
        for (int b = 0; b < batch_n; ++b) {
            if (cursor >= order.size()) {
                shuffle_indices(order, rng);
                cursor = 0;
            }
            const Dialogue& dlg = train_set[order[cursor++]];
            Graph g;
            DialogueForward fwd = forward_dialogue(g, m, dlg, vocab, provider, opt);
            Node scaled = g.scale(fwd.total, 1.0 / static_cast<double>(batch_n));
            batch_loss += g.value(scaled).data[0];
            g.backward(scaled);
        }
        if (!std::isfinite(batch_loss)) {
            fail("DivergedLoss", "training loss became non-finite at step " +
                                              std::to_string(step));
        }
        if (tc.grad_clip > 0.0) clip_gradients(params, tc.grad_clip);

        double lr = tc.use_schedule ? lr_at(step, m.cfg.d, tc.warmup_steps, tc.noam_factor)
                                    : tc.base_lr;
        adam.step(lr);
        result.lr_trace.push_back(lr);
        result.train_trace.push_back(batch_loss);
        result.steps = step;

        if (step % tc.eval_every == 0 || step == tc.max_steps) {
            double val = mean_corpus_loss(m, validation, vocab, provider, opt);
            result.val_history.push_back(val);
            if (val < result.best_val) {
                result.best_val = val;
                best_snapshot.clear();
                best_snapshot.reserve(params.size());
                for (const Parameter* p : params) best_snapshot.push_back(p->value);
            }
            if (early_stop(result.val_history, tc.patience)) {
                result.stopped_early = true;
                break;
            }
        }
    }

    if (!best_snapshot.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i]->value.data = best_snapshot[i].data;
        }
    }
    return result;
}

void save_bundle(const std::string& path, const ModelParams& m, const Vocabulary& vocab,
                 const Config& cfg, long long step) {
    save_checkpoint(path, m.all());

    nlohmann::json meta;
    meta["step"] = step;
    nlohmann::json config_obj = nlohmann::json::object();
    std::istringstream lines(config_to_string(cfg));
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        config_obj[line.substr(0, eq)] = line.substr(eq + 1);
    }
    meta["config"] = config_obj;
    meta["vocab"] = vocab.indexed_tokens();
    meta["freqs"] = vocab.indexed_freqs();

    std::ofstream out(path + ".json");
    if (!out) fail("MissingFile", "cannot write checkpoint sidecar: " + path + ".json");
    out << meta.dump() << '\n';
}

Bundle load_bundle(const std::string& path) {
    std::ifstream in(path + ".json");
    if (!in) fail("MissingFile", "cannot open checkpoint sidecar: " + path + ".json");
    nlohmann::json meta;
    try {
        in >> meta;
    } catch (const nlohmann::json::exception& e) {
        fail("ParseError", std::string("checkpoint sidecar: ") + e.what());
    }

    Bundle bundle;
    try {
        bundle.step = meta.at("step").get<long long>();
        for (auto& [key, value] : meta.at("config").items()) {
            set_key(bundle.cfg, key, value.get<std::string>());
        }
        std::vector<std::string> tokens = meta.at("vocab").get<std::vector<std::string>>();
        std::vector<std::int64_t> freqs = meta.at("freqs").get<std::vector<std::int64_t>>();
        bundle.vocab = Vocabulary(tokens, freqs);
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        fail("ParseError", std::string("checkpoint sidecar: ") + e.what());
    }
    bundle.cfg.model.validate();
    bundle.cfg.train.validate();

    Rng rng(0);
    bundle.params = std::make_unique<ModelParams>(bundle.cfg.model, bundle.vocab.size(), rng);
    load_checkpoint(path, bundle.params->all());
    return bundle;
}

} // namespace seek
