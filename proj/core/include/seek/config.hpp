#pragma once

#include <cstdint>
#include <string>

#include "seek/corpus.hpp"

namespace seek {

// Architecture sizes. Desk-scale defaults; d=300 reproduces the published
// geometry but is never required by the tests.
struct ModelConfig {
    int d = 32;       // embedding/hidden size
    int layers = 1;   // encoder and decoder depth
    int heads = 2;    // attention heads (d % heads == 0)
    int L_n = 24;     // max utterance length, CLS included; also caps the target
    int L_s = 40;     // max knowledge length
    int t = kNumTags;     // 41 utterance tag classes
    int q = kNumEmotions; // 32 dialogue emotion classes
    int s = 2;        // cross-attention selector depth
    int ffn_mult = 4; // feed-forward width = ffn_mult * d
    int max_pos = 64; // positional table rows; >= max(L_n, L_s)

    void validate() const;
};

// Table 2 variants. A set flag removes the corresponding subgraph from
// the tape entirely, so the detached parameters get exactly zero gradient.
struct AblationFlags {
    bool no_utter_tagging = false;        // drop the per-utterance tagging loss
    bool no_response_prediction = false;  // drop the response-trait loss, zero its vector in SOS
    bool no_emotion_harmonization = false; // selector replaced by a masked mean of knowledge states
    bool no_knowledge = false;            // knowledge vectors and selection replaced by zeros

    bool any() const {
        return no_utter_tagging || no_response_prediction || no_emotion_harmonization || no_knowledge;
    }
};

// Comma-separated flag names, e.g. "no_knowledge,no_utter_tagging".
AblationFlags parse_ablations(const std::string& csv);
std::string ablations_to_string(const AblationFlags& flags);

struct LossWeights {
    double alpha = 1.0; // generation NLL
    double beta = 1.0;  // summed classification losses
    double gamma = 1.5; // frequency-aware diversity loss
};

struct TrainConfig {
    int batch_size = 32;
    double base_lr = 1e-4;   // constant rate when use_schedule is off
    int warmup_steps = 400;
    double noam_factor = 1.0; // factor of the inverse-sqrt warmup schedule
    bool use_schedule = true;
    LossWeights weights;
    int patience = 3;
    std::uint64_t seed = 7;
    int max_steps = 2000;
    int eval_every = 50;   // optimizer steps between validation passes
    int min_freq = 1;      // vocabulary threshold
    double grad_clip = 0.0; // global norm; 0 disables
    int max_decode_steps = 30;
    AblationFlags ablate;

    void validate() const;
};

struct Config {
    ModelConfig model;
    TrainConfig train;
};

// Flat key=value text, one per line; '#' starts a comment. CLI flags
// override by calling set_key again.
Config load_config(const std::string& path);
void set_key(Config& cfg, const std::string& key, const std::string& value);
std::string config_to_string(const Config& cfg); // round-trips through set_key

} // namespace seek
