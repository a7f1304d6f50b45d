#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"

#include "seek/error.hpp"
#include "seek/pipeline.hpp"
#include "seek/trainer.hpp"

using namespace seek;

namespace {

ModelConfig small_config(int d = 8) {
    ModelConfig cfg;
    cfg.d = d;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.L_n = 10;
    cfg.L_s = 25;
    cfg.s = 1;
    cfg.ffn_mult = 2;
    cfg.max_pos = 25;
    return cfg;
}

std::vector<Dialogue> tiny_corpus() {
    Dialogue a;
    a.id = "t0";
    a.dialogue_emotion = 3;
    a.utterances = {Utterance{"my dog ran away", Role::Speaker, 5},
                    Utterance{"oh no i am sorry", Role::Listener, 8}};
    Dialogue b;
    b.id = "t1";
    b.dialogue_emotion = 11;
    b.utterances = {Utterance{"i got the job", Role::Speaker, 14},
                    Utterance{"that is great news", Role::Listener, 2}};
    return {a, b};
}

struct Rig {
    std::vector<Dialogue> corpus;
    Vocabulary vocab;
    ModelParams m;
    TemplateKnowledgeProvider provider;

    explicit Rig(unsigned seed = 71, int d = 8)
        : corpus(tiny_corpus()), vocab(with_separator(build_vocab(corpus, 1))),
          m(make_params(vocab, seed, d)) {}

    static ModelParams make_params(const Vocabulary& vocab, unsigned seed, int d) {
        Rng rng(seed);
        return ModelParams(small_config(d), vocab.size(), rng);
    }
};

TrainConfig quick_tc() {
    TrainConfig tc;
    tc.batch_size = 2;
    tc.use_schedule = false;
    tc.base_lr = 5e-3;
    tc.max_steps = 40;
    tc.eval_every = 10;
    tc.patience = 50;
    tc.seed = 7;
    return tc;
}

} // namespace

TEST_CASE("warmup schedule peaks at the warmup step") {
    const int d = 512;
    const int warmup = 4000;
    for (long long step : {1LL, 100LL, 4000LL, 16000LL}) {
        double s = static_cast<double>(step);
        double w = static_cast<double>(warmup);
        double expect = (1.0 / std::sqrt(static_cast<double>(d))) *
                        std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
        CHECK(std::abs(lr_at(step, d, warmup, 1.0) - expect) <= 1e-15);
    }
    CHECK(lr_at(1, d, warmup, 1.0) < lr_at(2000, d, warmup, 1.0));
    CHECK(lr_at(2000, d, warmup, 1.0) < lr_at(4000, d, warmup, 1.0));
    CHECK(lr_at(16000, d, warmup, 1.0) < lr_at(4000, d, warmup, 1.0));
    CHECK(lr_at(100, d, warmup, 2.5) == doctest::Approx(2.5 * lr_at(100, d, warmup, 1.0)));

    CHECK_THROWS_AS(lr_at(0, d, warmup, 1.0), Error);
    CHECK_THROWS_AS(lr_at(1, 0, warmup, 1.0), Error);
    CHECK_THROWS_AS(lr_at(1, d, 0, 1.0), Error);
    CHECK_THROWS_AS(lr_at(1, d, warmup, 0.0), Error);
}

TEST_CASE("early stopping counts evaluations since the best one") {
    CHECK(early_stop({3.0, 2.0, 2.5, 2.6}, 2));
    CHECK(!early_stop({5.0, 4.0}, 1));
    CHECK(early_stop({5.0, 4.0, 4.0}, 1));
    CHECK(!early_stop({}, 1));
    CHECK(!early_stop({9.0}, 1));
    CHECK_THROWS_AS(early_stop({1.0}, 0), Error);
}

TEST_CASE("optimizer first step matches the closed form") {
    Tensor t = Tensor::zeros({1, 2});
    t.at(0, 0) = 1.0;
    t.at(0, 1) = -2.0;
    Parameter p{"w", t, true};
    p.value.zero_grad();
    p.value.grad[0] = 0.3;
    p.value.grad[1] = -0.2;

    Adam adam({&p});
    adam.step(0.01);
    CHECK(adam.steps() == 1);
    for (int i = 0; i < 2; ++i) {
        double g = i == 0 ? 0.3 : -0.2;
        double start = i == 0 ? 1.0 : -2.0;
        double expect = start - 0.01 * g / (std::sqrt(g * g) + 1e-9);
        CHECK(std::abs(p.value.data[static_cast<std::size_t>(i)] - expect) <= 1e-15);
    }
}

TEST_CASE("optimizer trajectory matches an independent recurrence") {
    Tensor t = Tensor::zeros({1, 1});
    t.at(0, 0) = 0.5;
    Parameter p{"w", t, true};
    Adam adam({&p});

    const double beta1 = 0.9;
    const double beta2 = 0.98;
    const double eps = 1e-9;
    const double lr = 0.02;
    double w = 0.5;
    double m = 0.0;
    double v = 0.0;
    std::vector<double> grads{0.4, -0.1, 0.25, 0.0, -0.6};
    for (std::size_t step = 0; step < grads.size(); ++step) {
        p.value.zero_grad();
        p.value.grad[0] = grads[step];
        adam.step(lr);

        double g = grads[step];
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g * g;
        double t_num = static_cast<double>(step + 1);
        double m_hat = m / (1.0 - std::pow(beta1, t_num));
        double v_hat = v / (1.0 - std::pow(beta2, t_num));
        w -= lr * m_hat / (std::sqrt(v_hat) + eps);
        CHECK(p.value.data[0] == doctest::Approx(w).epsilon(1e-14));
    }
}

TEST_CASE("optimizer skips frozen parameters and zero gradients") {
    Tensor t = Tensor::zeros({1, 1});
    t.at(0, 0) = 3.0;
    Parameter frozen{"frozen", t, false};
    frozen.value.zero_grad();
    frozen.value.grad[0] = 5.0;
    Parameter idle{"idle", t, true};

    Adam adam({&frozen, &idle});
    adam.step(0.1);
    CHECK(frozen.value.data[0] == 3.0);
    CHECK(idle.value.data[0] == 3.0);

    CHECK_THROWS_AS(adam.step(0.0), Error);
    CHECK_THROWS_AS(adam.step(-1.0), Error);
}

TEST_CASE("training reduces the loss and is bitwise reproducible") {
    Rig rig;
    TrainConfig tc = quick_tc();
    double before = corpus_loss(rig.m, rig.corpus, rig.vocab, rig.provider, tc);
    TrainResult r1 = train(rig.m, rig.corpus, {}, rig.vocab, rig.provider, tc);
    double after = corpus_loss(rig.m, rig.corpus, rig.vocab, rig.provider, tc);
    CHECK(after < before);
    CHECK(r1.steps == 40);
    CHECK(r1.lr_trace.size() == 40);
    CHECK(r1.train_trace.size() == 40);
    CHECK(r1.val_history.size() == 4);
    CHECK(r1.best_val == *std::min_element(r1.val_history.begin(), r1.val_history.end()));
    CHECK(corpus_loss(rig.m, rig.corpus, rig.vocab, rig.provider, tc) == r1.best_val);

    Rig rig2;
    TrainResult r2 = train(rig2.m, rig2.corpus, {}, rig2.vocab, rig2.provider, tc);
    CHECK(r1.val_history == r2.val_history);
    CHECK(r1.train_trace == r2.train_trace);
    CHECK(r1.lr_trace == r2.lr_trace);
    std::vector<Parameter*> pa = rig.m.all();
    std::vector<Parameter*> pb = rig2.m.all();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value.data == pb[i]->value.data);
    }
}

TEST_CASE("the diversity weight changes the training trajectory") {
    Rig a(72);
    Rig b(72);
    TrainConfig tc = quick_tc();
    tc.max_steps = 6;
    tc.eval_every = 6;
    TrainConfig no_div = tc;
    no_div.weights.gamma = 0.0;

    TrainResult ra = train(a.m, a.corpus, {}, a.vocab, a.provider, tc);
    TrainResult rb = train(b.m, b.corpus, {}, b.vocab, b.provider, no_div);
    CHECK(ra.train_trace != rb.train_trace);
}

TEST_CASE("training aborts on a poisoned model and rejects empty corpora") {
    Rig rig(73);
    TrainConfig tc = quick_tc();
    rig.m.w_a.value.data[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        train(rig.m, rig.corpus, {}, rig.vocab, rig.provider, tc);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK((e.kind() == "NonFinite" || e.kind() == "DivergedLoss"));
    }

    Rig ok(74);
    CHECK_THROWS_AS(train(ok.m, {}, {}, ok.vocab, ok.provider, tc), Error);
    CHECK_THROWS_AS(corpus_loss(ok.m, {}, ok.vocab, ok.provider, tc), Error);
}

TEST_CASE("validation on a conflicting dialogue stops training early") {
    Rig rig(75);
    std::vector<Dialogue> train_set{rig.corpus[0]};
    Dialogue conflict = rig.corpus[0];
    conflict.id = "t2";
    conflict.dialogue_emotion = 29;
    conflict.utterances.back().text = "that is great news";
    conflict.utterances.back().ei_label = 30;

    TrainConfig tc = quick_tc();
    tc.batch_size = 1;
    tc.base_lr = 0.05;
    tc.max_steps = 60;
    tc.eval_every = 1;
    tc.patience = 2;
    TrainResult r = train(rig.m, train_set, {conflict}, rig.vocab, rig.provider, tc);
    CHECK(r.stopped_early);
    CHECK(r.steps < 60);
    CHECK(r.val_history.size() >= 3);
}

TEST_CASE("checkpoint bundles rebuild the model exactly") {
    Rig rig(76);
    Config cfg;
    cfg.model = small_config();
    cfg.train = quick_tc();
    std::string path = "/tmp/seek_bundle_test.bin";
    save_bundle(path, rig.m, rig.vocab, cfg, 123);

    Bundle bundle = load_bundle(path);
    CHECK(bundle.step == 123);
    CHECK(config_to_string(bundle.cfg) == config_to_string(cfg));
    CHECK(bundle.vocab.size() == rig.vocab.size());
    for (int id = 0; id < rig.vocab.size(); ++id) {
        CHECK(bundle.vocab.token(id) == rig.vocab.token(id));
        CHECK(bundle.vocab.frequency(id) == rig.vocab.frequency(id));
    }

    std::vector<Parameter*> pa = rig.m.all();
    std::vector<Parameter*> pb = bundle.params->all();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        REQUIRE(pa[i]->name == pb[i]->name);
        CHECK(pa[i]->value.data == pb[i]->value.data);
    }

    double la = corpus_loss(rig.m, rig.corpus, rig.vocab, rig.provider, cfg.train);
    double lb = corpus_loss(*bundle.params, rig.corpus, bundle.vocab, rig.provider, cfg.train);
    CHECK(la == lb);

    std::remove(path.c_str());
    std::remove((path + ".json").c_str());
}

TEST_CASE("checkpoint bundle failure modes") {
    CHECK_THROWS_AS(load_bundle("/tmp/definitely_missing_seek_bundle.bin"), Error);
    try {
        load_bundle("/tmp/definitely_missing_seek_bundle.bin");
    } catch (const Error& e) {
        CHECK(e.kind() == "MissingFile");
    }

    std::string path = "/tmp/seek_bundle_corrupt.bin";
    {
        std::ofstream sidecar(path + ".json");
        sidecar << "{ not json";
    }
    try {
        load_bundle(path);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == "ParseError");
    }
    std::remove((path + ".json").c_str());
}

TEST_CASE("corpus loss is the mean of the per-dialogue losses") {
    Rig rig(77);
    TrainConfig tc = quick_tc();
    std::vector<double> face_w = face_weights(rig.vocab);
    ForwardOptions opt;
    opt.weights = tc.weights;
    opt.face_w = &face_w;

    double manual = 0.0;
    for (const Dialogue& dlg : rig.corpus) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, rig.m, dlg, rig.vocab, rig.provider, opt);
        manual += g.value(fwd.total).data[0];
    }
    manual /= static_cast<double>(rig.corpus.size());
    CHECK(std::abs(corpus_loss(rig.m, rig.corpus, rig.vocab, rig.provider, tc) - manual) <= 1e-12);
}
