#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "seek/config.hpp"
#include "seek/corpus.hpp"
#include "seek/knowledge.hpp"
#include "seek/model.hpp"
#include "seek/tensor.hpp"

namespace seek {

// Adam with bias correction. Parameters with no accumulated gradient are
// treated as having zero gradient for the step.
class Adam {
  public:
    explicit Adam(std::vector<Parameter*> params, double beta1 = 0.9, double beta2 = 0.98,
                  double eps = 1e-9);
    void step(double lr);
    long long steps() const { return t_; }

  private:
    std::vector<Parameter*> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double beta1_;
    double beta2_;
    double eps_;
    long long t_ = 0;
};

// Inverse-sqrt warmup rate:
// factor * d^-0.5 * min(step^-0.5, step * warmup^-1.5), step >= 1.
double lr_at(long long step, int d, int warmup, double factor);

// True when the best (lowest) entry lies more than `patience` recorded
// evaluations before the latest one.
bool early_stop(const std::vector<double>& val_history, int patience);

struct TrainResult {
    std::vector<double> val_history; // one entry per validation pass
    std::vector<double> lr_trace;    // rate used at each optimizer step
    std::vector<double> train_trace; // mean batch loss at each optimizer step
    long long steps = 0;
    double best_val = std::numeric_limits<double>::infinity();
    bool stopped_early = false;
};

// Mini-batch training with per-interval validation; the parameters that
// scored the best validation loss are restored before returning. Batch
// order is a pure function of the seed.
TrainResult train(ModelParams& m, const std::vector<Dialogue>& train_set,
                  const std::vector<Dialogue>& val_set, const Vocabulary& vocab,
                  const KnowledgeProvider& provider, const TrainConfig& tc);

// Forward-only mean total loss over a corpus.
double corpus_loss(ModelParams& m, const std::vector<Dialogue>& corpus, const Vocabulary& vocab,
                   const KnowledgeProvider& provider, const TrainConfig& tc);

// ---- checkpoint bundle ----
// The binary weight file is accompanied by a <path>.json sidecar holding
// the config, step counter, and the vocabulary with its frequency table,
// so a bundle is sufficient to rebuild the model.

void save_bundle(const std::string& path, const ModelParams& m, const Vocabulary& vocab,
                 const Config& cfg, long long step);

struct Bundle {
    Config cfg;
    Vocabulary vocab;
    std::unique_ptr<ModelParams> params;
    long long step = 0;
};

Bundle load_bundle(const std::string& path);

} // namespace seek
