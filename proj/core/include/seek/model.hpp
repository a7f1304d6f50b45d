#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/rng.hpp"
#include "seek/tensor.hpp"

namespace seek {

// y = x W + b with W stored input-major (in x out).
struct LinearP {
    Parameter W;
    Parameter b;
};

struct LayerNormP {
    Parameter gain;
    Parameter bias;
};

struct MhaP {
    LinearP q, k, v, o; // all d -> d
};

struct FfnP {
    LinearP w1; // d -> ffn
    LinearP w2; // ffn -> d
};

struct EncoderLayerP {
    MhaP attn;
    LayerNormP ln1;
    FfnP ffn;
    LayerNormP ln2;
};

struct SelectorLayerP {
    MhaP cross;
    LayerNormP ln1;
    FfnP ffn;
    LayerNormP ln2;
};

struct DecoderLayerP {
    MhaP self_attn;
    LayerNormP ln1;
    MhaP cross_attn;
    LayerNormP ln2;
    FfnP ffn;
    LayerNormP ln3;
};

// Recurrent direction with gates packed (input, forget, cell, output).
struct LstmDirP {
    Parameter w_x; // d  x 4d
    Parameter w_h; // d  x 4d
    Parameter b;   // 1  x 4d
};

// score_i = v . tanh(u_i W); two independent sets exist, one per pooling head.
struct AttnPoolP {
    Parameter W; // 2d x 2d
    Parameter v; // 1  x 2d
};

// Every trainable weight, created in a fixed order so parameter names are
// stable checkpoint keys. Weights start Xavier-uniform, embeddings
// uniform(-0.1, 0.1), biases and norm offsets zero, norm gains one.
struct ModelParams {
    ModelConfig cfg;
    int vocab_size = 0;

    Parameter word_emb;  // V x d
    Parameter pos_emb;   // max_pos x d
    Parameter state_emb; // 2 x d, speaker/listener
    std::vector<EncoderLayerP> encoder;
    Parameter w_a; // 2d x d, fuses [utterance; knowledge]
    LstmDirP lstm_fwd;
    LstmDirP lstm_bwd;
    Parameter w_e; // 2d x t, per-utterance tagging
    AttnPoolP pool_pre;
    Parameter w_p; // 2d x t, response trait
    AttnPoolP pool_dia;
    Parameter w_d; // 2d x q, dialogue emotion
    Parameter sel_query; // 2d x d, selector query projection
    std::vector<SelectorLayerP> selector;
    Parameter w_k; // 3d x d, start-of-sequence fusion
    std::vector<DecoderLayerP> decoder;
    LinearP out_proj; // d -> V

    ModelParams(const ModelConfig& config, int vocab, Rng& rng);

    // Creation order; a parameter's name is its checkpoint key.
    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    Parameter* find(const std::string& name);
    void zero_grads();
    std::size_t count_scalars() const;
};

// Loads "token v1 v2 ... vd" lines into matching word embedding rows;
// tokens absent from the file keep their random rows. Vector width must
// equal cfg.d.
int load_word_vectors(ModelParams& params, const std::string& path, const Vocabulary& vocab);

} // namespace seek
