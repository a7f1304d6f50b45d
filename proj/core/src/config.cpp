#include "seek/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include "seek/error.hpp"
#include "seek/knowledge.hpp"

namespace seek {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) fail("ParseError", "trailing characters in value for " + key);
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail("ParseError", "expected integer for " + key + ", got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) fail("ParseError", "trailing characters in value for " + key);
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail("ParseError", "expected number for " + key + ", got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    fail("ParseError", "expected boolean for " + key + ", got '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) fail("ParseError", "trailing characters in value for " + key);
        return static_cast<std::uint64_t>(v);
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        fail("ParseError", "expected unsigned integer for " + key + ", got '" + value + "'");
    }
}

} // namespace

void ModelConfig::validate() const {
    if (d < 1) fail("BadFlag", "d must be positive");
    if (layers < 1) fail("BadFlag", "layers must be positive");
    if (heads < 1) fail("BadFlag", "heads must be positive");
    if (d % heads != 0) fail("BadFlag", "d must be divisible by heads");
    if (L_n < 2) fail("BadFlag", "L_n must be at least 2");
    if (L_s < kInferencesPerBundle) {
        fail("BadFlag", "L_s must fit one inference per slot (>= 25)");
    }
    if (t != kNumTags) fail("BadFlag", "tag class count is fixed at 41");
    if (q != kNumEmotions) fail("BadFlag", "emotion class count is fixed at 32");
    if (s < 1) fail("BadFlag", "selector depth must be positive");
    if (ffn_mult < 1) fail("BadFlag", "ffn_mult must be positive");
    if (max_pos < L_n || max_pos < L_s) {
        fail("BadFlag", "max_pos must cover L_n and L_s");
    }
}

void TrainConfig::validate() const {
    if (batch_size < 1) fail("BadFlag", "batch_size must be at least 1");
    if (base_lr <= 0.0) fail("BadFlag", "base_lr must be positive");
    if (warmup_steps < 1) fail("BadFlag", "warmup_steps must be at least 1");
    if (noam_factor <= 0.0) fail("BadFlag", "noam_factor must be positive");
    if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
        fail("BadFlag", "loss weights must be non-negative");
    }
    if (patience < 1) fail("BadFlag", "patience must be at least 1");
    if (max_steps < 1) fail("BadFlag", "max_steps must be at least 1");
    if (eval_every < 1) fail("BadFlag", "eval_every must be at least 1");
    if (min_freq < 1) fail("BadFlag", "min_freq must be at least 1");
    if (grad_clip < 0.0) fail("BadFlag", "grad_clip must be non-negative");
    if (max_decode_steps < 1) fail("BadFlag", "max_decode_steps must be at least 1");
}

AblationFlags parse_ablations(const std::string& csv) {
    AblationFlags flags;
    std::string rest = csv;
    while (!rest.empty()) {
        std::size_t comma = rest.find(',');
        std::string name = trim(rest.substr(0, comma));
        rest = (comma == std::string::npos) ? std::string() : rest.substr(comma + 1);
        if (name.empty()) continue;
        if (name == "no_utter_tagging") flags.no_utter_tagging = true;
        else if (name == "no_response_prediction") flags.no_response_prediction = true;
        else if (name == "no_emotion_harmonization") flags.no_emotion_harmonization = true;
        else if (name == "no_knowledge") flags.no_knowledge = true;
        else fail("BadFlag", "unknown ablation flag '" + name + "'");
    }
    return flags;
}

std::string ablations_to_string(const AblationFlags& flags) {
    std::vector<std::string> names;
    if (flags.no_utter_tagging) names.push_back("no_utter_tagging");
    if (flags.no_response_prediction) names.push_back("no_response_prediction");
    if (flags.no_emotion_harmonization) names.push_back("no_emotion_harmonization");
    if (flags.no_knowledge) names.push_back("no_knowledge");
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ',';
        out += names[i];
    }
    return out;
}

void set_key(Config& cfg, const std::string& key, const std::string& value) {
    if (key == "d") cfg.model.d = parse_int(key, value);
    else if (key == "layers") cfg.model.layers = parse_int(key, value);
    else if (key == "heads") cfg.model.heads = parse_int(key, value);
    else if (key == "l_n") cfg.model.L_n = parse_int(key, value);
    else if (key == "l_s") cfg.model.L_s = parse_int(key, value);
    else if (key == "selector_layers") cfg.model.s = parse_int(key, value);
    else if (key == "ffn_mult") cfg.model.ffn_mult = parse_int(key, value);
    else if (key == "max_pos") cfg.model.max_pos = parse_int(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_int(key, value);
    else if (key == "base_lr") cfg.train.base_lr = parse_double(key, value);
    else if (key == "warmup_steps") cfg.train.warmup_steps = parse_int(key, value);
    else if (key == "noam_factor") cfg.train.noam_factor = parse_double(key, value);
    else if (key == "use_schedule") cfg.train.use_schedule = parse_bool(key, value);
    else if (key == "alpha") cfg.train.weights.alpha = parse_double(key, value);
    else if (key == "beta") cfg.train.weights.beta = parse_double(key, value);
    else if (key == "gamma") cfg.train.weights.gamma = parse_double(key, value);
    else if (key == "patience") cfg.train.patience = parse_int(key, value);
    else if (key == "seed") cfg.train.seed = parse_u64(key, value);
    else if (key == "max_steps") cfg.train.max_steps = parse_int(key, value);
    else if (key == "eval_every") cfg.train.eval_every = parse_int(key, value);
    else if (key == "min_freq") cfg.train.min_freq = parse_int(key, value);
    else if (key == "grad_clip") cfg.train.grad_clip = parse_double(key, value);
    else if (key == "max_decode_steps") cfg.train.max_decode_steps = parse_int(key, value);
    else if (key == "ablate") cfg.train.ablate = parse_ablations(value);
    else fail("BadFlag", "unknown config key '" + key + "'");
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("MissingFile", "cannot open config file: " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail("ParseError",
                 "config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            fail("ParseError", "config line " + std::to_string(line_no) + ": empty key");
        }
        set_key(cfg, key, value);
    }
    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

std::string config_to_string(const Config& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "d=" << cfg.model.d << '\n'
        << "layers=" << cfg.model.layers << '\n'
        << "heads=" << cfg.model.heads << '\n'
        << "l_n=" << cfg.model.L_n << '\n'
        << "l_s=" << cfg.model.L_s << '\n'
        << "selector_layers=" << cfg.model.s << '\n'
        << "ffn_mult=" << cfg.model.ffn_mult << '\n'
        << "max_pos=" << cfg.model.max_pos << '\n'
        << "batch_size=" << cfg.train.batch_size << '\n'
        << "base_lr=" << cfg.train.base_lr << '\n'
        << "warmup_steps=" << cfg.train.warmup_steps << '\n'
        << "noam_factor=" << cfg.train.noam_factor << '\n'
        << "use_schedule=" << (cfg.train.use_schedule ? "true" : "false") << '\n'
        << "alpha=" << cfg.train.weights.alpha << '\n'
        << "beta=" << cfg.train.weights.beta << '\n'
        << "gamma=" << cfg.train.weights.gamma << '\n'
        << "patience=" << cfg.train.patience << '\n'
        << "seed=" << cfg.train.seed << '\n'
        << "max_steps=" << cfg.train.max_steps << '\n'
        << "eval_every=" << cfg.train.eval_every << '\n'
        << "min_freq=" << cfg.train.min_freq << '\n'
        << "grad_clip=" << cfg.train.grad_clip << '\n'
        << "max_decode_steps=" << cfg.train.max_decode_steps << '\n';
    std::string ab = ablations_to_string(cfg.train.ablate);
    if (!ab.empty()) out << "ablate=" << ab << '\n';
    return out.str();
}

} // namespace seek
