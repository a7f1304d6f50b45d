#pragma once

#include <string>
#include <vector>

#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/decoder.hpp"
#include "seek/knowledge.hpp"
#include "seek/model.hpp"
#include "seek/tensor.hpp"

namespace seek {

// -(log softmax) of the target entry, one value per row.
std::vector<double> per_row_nll(const Tensor& logits, const std::vector<int>& targets);

// exp(mean of the per-token negative log likelihoods).
double perplexity(const std::vector<double>& per_token_nll);

// Corpus-level distinct n-gram ratio over token id sequences.
double dist_n(const std::vector<std::vector<int>>& responses, int n);

// Lowest index wins ties, so results are deterministic.
int argmax_row(const Tensor& t, int row);

// Raw fractions in [0, 1]; result tables conventionally show them x100.
struct EvalReport {
    double ppl = 0.0;
    double dist1 = 0.0;
    double dist2 = 0.0;
    double de_acc = 0.0;  // dialogue emotion, per dialogue
    double uei_acc = 0.0; // utterance tags, per context utterance
    double rei_acc = 0.0; // response trait, per dialogue
    int n_dialogues = 0;
};

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
void write_report(const std::string& path, const EvalReport& report);

struct EvalOptions {
    AblationFlags ablate;
    LossWeights weights;
    int max_decode_steps = 30;
};

struct GeneratedResponse {
    std::string dialogue_id;
    std::vector<int> ids;
    std::string text;
    int pred_ei = -1; // predicted response trait id
};

// Teacher-forced perplexity and head accuracies over gold labels, plus
// greedy generation for the distinct-n ratios.
EvalReport evaluate(ModelParams& m, const std::vector<Dialogue>& corpus, const Vocabulary& vocab,
                    const KnowledgeProvider& provider, const EvalOptions& opt,
                    std::vector<GeneratedResponse>* responses = nullptr);

// ---- selection trace files ----
// One JSON object per line: dialogue id, layer, head, and the full
// row-stochastic weight matrix; numbers survive a round-trip exactly.

struct TraceRecord {
    std::string dialogue_id;
    int layer = 0;
    int head = 0;
    Tensor weights = Tensor::zeros({1, 1});
};

void write_selection_trace(std::ostream& out, const std::string& dialogue_id,
                           const SelectionTrace& trace);
std::vector<TraceRecord> read_trace_file(const std::string& path);

} // namespace seek
