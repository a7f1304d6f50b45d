#include "seek/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "seek/error.hpp"

namespace seek {

namespace {

Tensor uniform_tensor(int rows, int cols, double lo, double hi, Rng& rng) {
    Tensor t = Tensor::zeros({rows, cols});
    for (double& x : t.data) x = rng.uniform(lo, hi);
    return t;
}

Parameter make_embedding(const std::string& name, int rows, int cols, Rng& rng) {
    return Parameter{name, uniform_tensor(rows, cols, -0.1, 0.1, rng)};
}

Parameter make_weight(const std::string& name, int fan_in, int fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    return Parameter{name, uniform_tensor(fan_in, fan_out, -bound, bound, rng)};
}

Parameter make_zeros(const std::string& name, int rows, int cols) {
    return Parameter{name, Tensor::zeros({rows, cols})};
}

Parameter make_ones(const std::string& name, int cols) {
    Tensor t = Tensor::zeros({1, cols});
    for (double& x : t.data) x = 1.0;
    return Parameter{name, t};
}

LinearP make_linear(const std::string& prefix, int in, int out, Rng& rng) {
    return LinearP{make_weight(prefix + ".W", in, out, rng), make_zeros(prefix + ".b", 1, out)};
}

LayerNormP make_layer_norm(const std::string& prefix, int d) {
    return LayerNormP{make_ones(prefix + ".gain", d), make_zeros(prefix + ".bias", 1, d)};
}

MhaP make_mha(const std::string& prefix, int d, Rng& rng) {
    return MhaP{make_linear(prefix + ".q", d, d, rng), make_linear(prefix + ".k", d, d, rng),
                make_linear(prefix + ".v", d, d, rng), make_linear(prefix + ".o", d, d, rng)};
}

FfnP make_ffn(const std::string& prefix, int d, int hidden, Rng& rng) {
    return FfnP{make_linear(prefix + ".w1", d, hidden, rng),
                make_linear(prefix + ".w2", hidden, d, rng)};
}

LstmDirP make_lstm_dir(const std::string& prefix, int d, Rng& rng) {
    return LstmDirP{make_weight(prefix + ".w_x", d, 4 * d, rng),
                    make_weight(prefix + ".w_h", d, 4 * d, rng),
                    make_zeros(prefix + ".b", 1, 4 * d)};
}

AttnPoolP make_pool(const std::string& prefix, int d2, Rng& rng) {
    return AttnPoolP{make_weight(prefix + ".W", d2, d2, rng),
                     make_weight(prefix + ".v", 1, d2, rng)};
}

void push_linear(std::vector<Parameter*>& out, LinearP& l) {
    out.push_back(&l.W);
    out.push_back(&l.b);
}

void push_norm(std::vector<Parameter*>& out, LayerNormP& n) {
    out.push_back(&n.gain);
    out.push_back(&n.bias);
}

void push_mha(std::vector<Parameter*>& out, MhaP& m) {
    push_linear(out, m.q);
    push_linear(out, m.k);
    push_linear(out, m.v);
    push_linear(out, m.o);
}

void push_ffn(std::vector<Parameter*>& out, FfnP& f) {
    push_linear(out, f.w1);
    push_linear(out, f.w2);
}

} // namespace

ModelParams::ModelParams(const ModelConfig& config, int vocab, Rng& rng)
    : cfg(config), vocab_size(vocab) {
    cfg.validate();
    if (vocab_size < Vocabulary::kNumSpecials) {
        fail("BadFlag", "vocabulary smaller than the reserved specials");
    }
    const int d = cfg.d;
    const int d2 = 2 * d;
    const int hidden = cfg.ffn_mult * d;

    word_emb = make_embedding("word_emb", vocab_size, d, rng);
    pos_emb = make_embedding("pos_emb", cfg.max_pos, d, rng);
    state_emb = make_embedding("state_emb", 2, d, rng);

    encoder.reserve(static_cast<std::size_t>(cfg.layers));
    for (int i = 0; i < cfg.layers; ++i) {
        std::string p = "enc" + std::to_string(i);
        encoder.push_back(EncoderLayerP{make_mha(p + ".attn", d, rng), make_layer_norm(p + ".ln1", d),
                                        make_ffn(p + ".ffn", d, hidden, rng),
                                        make_layer_norm(p + ".ln2", d)});
    }

    w_a = make_weight("w_a", d2, d, rng);
    lstm_fwd = make_lstm_dir("lstm.fwd", d, rng);
    lstm_bwd = make_lstm_dir("lstm.bwd", d, rng);
    w_e = make_weight("w_e", d2, cfg.t, rng);
    pool_pre = make_pool("pool_pre", d2, rng);
    w_p = make_weight("w_p", d2, cfg.t, rng);
    pool_dia = make_pool("pool_dia", d2, rng);
    w_d = make_weight("w_d", d2, cfg.q, rng);

    sel_query = make_weight("sel_query", d2, d, rng);
    selector.reserve(static_cast<std::size_t>(cfg.s));
    for (int i = 0; i < cfg.s; ++i) {
        std::string p = "sel" + std::to_string(i);
        selector.push_back(SelectorLayerP{make_mha(p + ".cross", d, rng),
                                          make_layer_norm(p + ".ln1", d),
                                          make_ffn(p + ".ffn", d, hidden, rng),
                                          make_layer_norm(p + ".ln2", d)});
    }

    w_k = make_weight("w_k", 3 * d, d, rng);

    decoder.reserve(static_cast<std::size_t>(cfg.layers));
    for (int i = 0; i < cfg.layers; ++i) {
        std::string p = "dec" + std::to_string(i);
        decoder.push_back(DecoderLayerP{make_mha(p + ".self", d, rng), make_layer_norm(p + ".ln1", d),
                                        make_mha(p + ".cross", d, rng), make_layer_norm(p + ".ln2", d),
                                        make_ffn(p + ".ffn", d, hidden, rng),
                                        make_layer_norm(p + ".ln3", d)});
    }

    out_proj = make_linear("out", d, vocab_size, rng);
}

std::vector<Parameter*> ModelParams::all() {
    std::vector<Parameter*> out;
    out.push_back(&word_emb);
    out.push_back(&pos_emb);
    out.push_back(&state_emb);
    for (EncoderLayerP& l : encoder) {
        push_mha(out, l.attn);
        push_norm(out, l.ln1);
        push_ffn(out, l.ffn);
        push_norm(out, l.ln2);
    }
    out.push_back(&w_a);
    for (LstmDirP* dir : {&lstm_fwd, &lstm_bwd}) {
        out.push_back(&dir->w_x);
        out.push_back(&dir->w_h);
        out.push_back(&dir->b);
    }
    out.push_back(&w_e);
    out.push_back(&pool_pre.W);
    out.push_back(&pool_pre.v);
    out.push_back(&w_p);
    out.push_back(&pool_dia.W);
    out.push_back(&pool_dia.v);
    out.push_back(&w_d);
    out.push_back(&sel_query);
    for (SelectorLayerP& l : selector) {
        push_mha(out, l.cross);
        push_norm(out, l.ln1);
        push_ffn(out, l.ffn);
        push_norm(out, l.ln2);
    }
    out.push_back(&w_k);
    for (DecoderLayerP& l : decoder) {
        push_mha(out, l.self_attn);
        push_norm(out, l.ln1);
        push_mha(out, l.cross_attn);
        push_norm(out, l.ln2);
        push_ffn(out, l.ffn);
        push_norm(out, l.ln3);
    }
    push_linear(out, out_proj);
    return out;
}

std::vector<const Parameter*> ModelParams::all() const {
    std::vector<Parameter*> mut = const_cast<ModelParams*>(this)->all();
    return std::vector<const Parameter*>(mut.begin(), mut.end());
}

Parameter* ModelParams::find(const std::string& name) {
    for (Parameter* p : all()) {
        if (p->name == name) return p;
    }
    return nullptr;
}

void ModelParams::zero_grads() {
    for (Parameter* p : all()) p->value.zero_grad();
}

std::size_t ModelParams::count_scalars() const {
    std::size_t n = 0;
    for (const Parameter* p : all()) n += p->value.numel();
    return n;
}

int load_word_vectors(ModelParams& params, const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) fail("MissingFile", "cannot open word vector file: " + path);
    if (vocab.size() != params.vocab_size) {
        fail("ShapeMismatch", "vocabulary size does not match the embedding table");
    }
    const int d = params.cfg.d;
    std::string line;
    int line_no = 0;
    int loaded = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string token;
        if (!(row >> token)) continue;
        std::vector<double> values;
        double v;
        while (row >> v) values.push_back(v);
        if (!row.eof()) {
            fail("ParseError",
                 "word vector line " + std::to_string(line_no) + ": non-numeric component");
        }
        if (static_cast<int>(values.size()) != d) {
            fail("ShapeMismatch",
                 "word vector line " + std::to_string(line_no) + ": expected " +
                     std::to_string(d) + " components, got " + std::to_string(values.size()));
        }
        int id = vocab.id(token);
        if (id == Vocabulary::kUnk && token != vocab.token(Vocabulary::kUnk)) continue;
        for (int j = 0; j < d; ++j) {
            params.word_emb.value.at(id, j) = values[static_cast<std::size_t>(j)];
        }
        ++loaded;
    }
    return loaded;
}

} // namespace seek
