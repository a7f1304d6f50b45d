#include "seek/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "seek/autograd.hpp"
#include "seek/error.hpp"
#include "seek/pipeline.hpp"

namespace seek {

std::vector<double> per_row_nll(const Tensor& logits, const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != logits.rows()) {
        fail("LengthMismatch", "one target per logit row is required");
    }
    std::vector<double> out(targets.size());
    for (int r = 0; r < logits.rows(); ++r) {
        int target = targets[static_cast<std::size_t>(r)];
        if (target < 0 || target >= logits.cols()) {
            fail("LabelOutOfRange", "target id " + std::to_string(target) + " outside row width");
        }
        double mx = logits.at(r, 0);
        for (int j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits.at(r, j));
        double sum = 0.0;
        for (int j = 0; j < logits.cols(); ++j) sum += std::exp(logits.at(r, j) - mx);
        double lse = mx + std::log(sum);
        out[static_cast<std::size_t>(r)] = lse - logits.at(r, target);
    }
    return out;
}

double perplexity(const std::vector<double>& per_token_nll) {
    if (per_token_nll.empty()) fail("EmptyCorpus", "no tokens to score");
    double sum = 0.0;
    for (double v : per_token_nll) sum += v;
    return std::exp(sum / static_cast<double>(per_token_nll.size()));
}

double dist_n(const std::vector<std::vector<int>>& responses, int n) {
    if (n < 1) fail("BadFlag", "n-gram order must be at least 1");
    std::set<std::vector<int>> distinct;
    long long total = 0;
    for (const std::vector<int>& ids : responses) {
        if (static_cast<int>(ids.size()) < n) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= ids.size(); ++i) {
            distinct.insert(std::vector<int>(ids.begin() + static_cast<std::ptrdiff_t>(i),
                                             ids.begin() + static_cast<std::ptrdiff_t>(i) + n));
            ++total;
        }
    }
    if (total == 0) fail("NoNGrams", "no n-grams of order " + std::to_string(n));
    return static_cast<double>(distinct.size()) / static_cast<double>(total);
}

int argmax_row(const Tensor& t, int row) {
    if (row < 0 || row >= t.rows()) fail("ShapeMismatch", "argmax row out of range");
    int best = 0;
    for (int j = 1; j < t.cols(); ++j) {
        if (t.at(row, j) > t.at(row, best)) best = j;
    }
    return best;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["ppl"] = report.ppl;
    j["dist1"] = report.dist1;
    j["dist2"] = report.dist2;
    j["de_acc"] = report.de_acc;
    j["uei_acc"] = report.uei_acc;
    j["rei_acc"] = report.rei_acc;
    j["n_dialogues"] = report.n_dialogues;
    return j.dump();
}

EvalReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        EvalReport report;
        report.ppl = j.at("ppl").get<double>();
        report.dist1 = j.at("dist1").get<double>();
        report.dist2 = j.at("dist2").get<double>();
        report.de_acc = j.at("de_acc").get<double>();
        report.uei_acc = j.at("uei_acc").get<double>();
        report.rei_acc = j.at("rei_acc").get<double>();
        report.n_dialogues = j.at("n_dialogues").get<int>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        fail("ParseError", std::string("evaluation report: ") + e.what());
    }
}

void write_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) fail("MissingFile", "cannot write report: " + path);
    out << report_to_json(report) << '\n';
}

EvalReport evaluate(ModelParams& m, const std::vector<Dialogue>& corpus, const Vocabulary& vocab,
                    const KnowledgeProvider& provider, const EvalOptions& opt,
                    std::vector<GeneratedResponse>* responses) {
    if (corpus.empty()) fail("EmptyCorpus", "no dialogues to evaluate");

    std::vector<double> face_w = face_weights(vocab);
    ForwardOptions fopt;
    fopt.ablate = opt.ablate;
    fopt.weights = opt.weights;
    fopt.face_w = &face_w;

    std::vector<double> all_nll;
    long long de_hits = 0;
    long long uei_hits = 0;
    long long uei_total = 0;
    long long rei_hits = 0;
    std::vector<std::vector<int>> generated;

    for (const Dialogue& dlg : corpus) {
        Graph g;
        DialogueForward fwd = forward_dialogue(g, m, dlg, vocab, provider, fopt);

        std::vector<double> nll = per_row_nll(g.value(fwd.logits), fwd.target_ids);
        all_nll.insert(all_nll.end(), nll.begin(), nll.end());

        if (argmax_row(g.value(fwd.p_dia), 0) == dlg.dialogue_emotion) ++de_hits;
        const Tensor& p_tag = g.value(fwd.p_tag);
        for (int i = 0; i < fwd.n_context; ++i) {
            if (argmax_row(p_tag, i) == dlg.utterances[static_cast<std::size_t>(i)].ei_label) {
                ++uei_hits;
            }
            ++uei_total;
        }
        int pred_ei = argmax_row(g.value(fwd.p_pre), 0);
        if (pred_ei == dlg.response().ei_label) ++rei_hits;

        GenerateOutput gen = generate(m, g.value(fwd.memory), fwd.memory_mask, g.value(fwd.sos),
                                      opt.max_decode_steps);
        generated.push_back(gen.ids);
        if (responses) {
            responses->push_back(GeneratedResponse{dlg.id, gen.ids, detokenize(gen.ids, vocab), pred_ei});
        }
    }

    EvalReport report;
    report.n_dialogues = static_cast<int>(corpus.size());
    report.ppl = perplexity(all_nll);
    auto safe_dist = [&](int n) {
        try {
            return dist_n(generated, n);
        } catch (const Error& e) {
            if (e.kind() == "NoNGrams") return 0.0;
            throw;
        }
    };
    report.dist1 = safe_dist(1);
    report.dist2 = safe_dist(2);
    report.de_acc = static_cast<double>(de_hits) / static_cast<double>(corpus.size());
    report.uei_acc = uei_total == 0
                         ? 0.0
                         : static_cast<double>(uei_hits) / static_cast<double>(uei_total);
    report.rei_acc = static_cast<double>(rei_hits) / static_cast<double>(corpus.size());
    return report;
}

void write_selection_trace(std::ostream& out, const std::string& dialogue_id,
                           const SelectionTrace& trace) {
    for (int layer = 0; layer < static_cast<int>(trace.weights.size()); ++layer) {
        const std::vector<Tensor>& heads = trace.weights[static_cast<std::size_t>(layer)];
        for (int head = 0; head < static_cast<int>(heads.size()); ++head) {
            const Tensor& w = heads[static_cast<std::size_t>(head)];
            nlohmann::json rows = nlohmann::json::array();
            for (int r = 0; r < w.rows(); ++r) {
                nlohmann::json row = nlohmann::json::array();
                for (int c = 0; c < w.cols(); ++c) row.push_back(w.at(r, c));
                rows.push_back(std::move(row));
            }
            nlohmann::json record;
            record["dialogue_id"] = dialogue_id;
            record["layer"] = layer;
            record["head"] = head;
            record["weights"] = std::move(rows);
            out << record.dump() << '\n';
        }
    }
}

std::vector<TraceRecord> read_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("MissingFile", "cannot open trace file: " + path);
    std::vector<TraceRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            TraceRecord rec;
            rec.dialogue_id = j.at("dialogue_id").get<std::string>();
            rec.layer = j.at("layer").get<int>();
            rec.head = j.at("head").get<int>();
            const nlohmann::json& rows = j.at("weights");
            if (!rows.is_array() || rows.empty()) {
                fail("ParseError", "trace line " + std::to_string(line_no) + ": empty weights");
            }
            int n_rows = static_cast<int>(rows.size());
            int n_cols = static_cast<int>(rows.at(0).size());
            rec.weights = Tensor::zeros({n_rows, n_cols});
            for (int r = 0; r < n_rows; ++r) {
                const nlohmann::json& row = rows.at(static_cast<std::size_t>(r));
                if (static_cast<int>(row.size()) != n_cols) {
                    fail("ParseError",
                         "trace line " + std::to_string(line_no) + ": ragged weight rows");
                }
                for (int c = 0; c < n_cols; ++c) {
                    rec.weights.at(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
                }
            }
            records.push_back(std::move(rec));
        } catch (const Error&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            fail("ParseError",
                 "trace line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

} // namespace seek
