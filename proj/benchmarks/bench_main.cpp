// Microbenchmarks for the hot paths: the matmul kernel, a full dialogue
// forward pass, forward+backward, and greedy decoding.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "seek/decoder.hpp"
#include "seek/pipeline.hpp"

using namespace seek;

namespace {

Tensor random_tensor(int r, int c, Rng& rng) {
    Tensor t = Tensor::zeros({r, c});
    for (double& x : t.data) x = rng.uniform(-1.0, 1.0);
    return t;
}

struct BenchRig {
    Vocabulary vocab;
    Dialogue dlg;
    ModelParams m;
    std::vector<double> face_w;
    TemplateKnowledgeProvider provider;
    ForwardOptions opt;

    explicit BenchRig(int d)
        : vocab(make_vocab()), dlg(make_dialogue()), m(make_params(d, vocab)),
          face_w(face_weights(vocab)) {
        opt.face_w = &face_w;
    }

    static Vocabulary make_vocab() {
        std::vector<std::string> tokens;
        std::vector<std::int64_t> freqs;
        for (int i = 0; i < 25; ++i) {
            tokens.push_back("w" + std::to_string(i));
            freqs.push_back(1 + i % 5);
        }
        return Vocabulary(tokens, freqs);
    }

    static Dialogue make_dialogue() {
        Dialogue d;
        d.id = "bench";
        d.dialogue_emotion = 5;
        d.utterances = {Utterance{"w0 w3 w7 w11 w19", Role::Speaker, 2},
                        Utterance{"w2 w5 w9 w13", Role::Listener, 8},
                        Utterance{"w1 w6 w14 w21 w24", Role::Speaker, 4}};
        return d;
    }

    static ModelParams make_params(int d, const Vocabulary& vocab) {
        ModelConfig mc;
        mc.d = d;
        mc.layers = 1;
        mc.heads = 2;
        mc.L_n = 24;
        mc.L_s = 40;
        mc.s = 2;
        mc.ffn_mult = 4;
        mc.max_pos = 64;
        Rng rng(7);
        return ModelParams(mc, vocab.size(), rng);
    }
};

BenchRig& rig(int d) {
    static BenchRig r8(8);
    static BenchRig r32(32);
    return d == 8 ? r8 : r32;
}

void BM_MatmulForwardBackward(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Rng rng(1);
    Tensor a = random_tensor(n, n, rng);
    Tensor b = random_tensor(n, n, rng);
    for (auto _ : state) {
        Graph g;
        Node out = g.sum_all(g.matmul(g.input(a), g.input(b)));
        g.backward(out);
        benchmark::DoNotOptimize(g.value(out).data[0]);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n * n);
}
BENCHMARK(BM_MatmulForwardBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_DialogueForward(benchmark::State& state) {
    BenchRig& r = rig(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        Graph g;
        DialogueForward f = forward_dialogue(g, r.m, r.dlg, r.vocab, r.provider, r.opt);
        benchmark::DoNotOptimize(g.value(f.total).data[0]);
    }
}
BENCHMARK(BM_DialogueForward)->Arg(8)->Arg(32);

void BM_DialogueForwardBackward(benchmark::State& state) {
    BenchRig& r = rig(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        r.m.zero_grads();
        Graph g;
        DialogueForward f = forward_dialogue(g, r.m, r.dlg, r.vocab, r.provider, r.opt);
        g.backward(f.total);
        benchmark::DoNotOptimize(g.value(f.total).data[0]);
    }
}
BENCHMARK(BM_DialogueForwardBackward)->Arg(8)->Arg(32);

void BM_GreedyDecode(benchmark::State& state) {
    BenchRig& r = rig(static_cast<int>(state.range(0)));
    Graph g;
    DialogueForward f = forward_dialogue(g, r.m, r.dlg, r.vocab, r.provider, r.opt);
    Tensor memory = g.value(f.memory);
    Tensor sos = g.value(f.sos);
    for (auto _ : state) {
        GenerateOutput out = generate(r.m, memory, f.memory_mask, sos, 30);
        benchmark::DoNotOptimize(out.ids.size());
    }
}
BENCHMARK(BM_GreedyDecode)->Arg(8)->Arg(32);

} // namespace

BENCHMARK_MAIN();
