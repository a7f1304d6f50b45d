#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "seek/tensor.hpp"

namespace seek {

class Graph;

// Cheap handle to a tape node.
struct Node {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction, so backward() is a single reverse
// sweep. One graph is confined to one thread; parameters it binds are
// read during forward and written (grad accumulation) during backward.
class Graph {
  public:
    // ---- leaves ----
    Node input(Tensor t);                 // constant, no gradient
    Node param(Parameter& p);             // trainable leaf; backward accumulates into p.value.grad
    Node zeros(int r, int c);
    Node constant(double v) { return input(Tensor::scalar(v)); }

    // ---- core ops ----
    Node matmul(Node a, Node b);          // (m x k)(k x n)
    Node matmul_nt(Node a, Node b);       // (m x k)(n x k)^T -> m x n
    Node add(Node a, Node b);             // same shape
    Node add_row(Node m, Node row);       // broadcast 1 x c over rows
    Node scale(Node a, double c);
    Node mul(Node a, Node b);             // elementwise
    Node concat_cols(const std::vector<Node>& parts);
    Node concat_rows(const std::vector<Node>& parts);
    Node slice_rows(Node a, int r0, int n);
    Node slice_cols(Node a, int c0, int n);
    Node tanh_(Node a);
    Node sigmoid(Node a);
    Node relu(Node a);
    Node softmax_rows(Node logits);                        // last axis
    Node softmax_rows(Node logits, const Tensor& additive); // additive mask: 1 x c or r x c
    Node layer_norm_rows(Node x, Node gain, Node bias);
    Node mean_pool_rows(Node x, const std::vector<bool>& mask); // 1 x c over mask-true rows
    Node mean_rows(Node x);
    Node sum_all(Node a);                                  // 1 x 1
    // Embedding lookup straight from the table parameter; backward scatter-adds.
    Node embedding(Parameter& table, const std::vector<int>& ids);
    // Sum over rows of row_weight[r] * (logsumexp(logits[r]) - logits[r][target[r]]).
    // With unit weights this is the plain summed cross-entropy from logits.
    Node nll_rows(Node logits, const std::vector<int>& targets, const std::vector<double>& row_weights);
    Node nll_rows(Node logits, const std::vector<int>& targets);

    // ---- execution ----
    const Tensor& value(Node n) const { return nodes_[n.id].val; }
    const std::vector<double>& grad_of(Node n) const { return nodes_[n.id].grad; }
    // Seeds d(loss)/d(loss)=1 and sweeps the tape once. Grads of bound
    // parameters accumulate (+=); callers zero them beforehand.
    void backward(Node loss);
    std::size_t size() const { return nodes_.size(); }

    static constexpr double kMaskFill = -1e9;

  private:
    struct NodeData {
        Tensor val;
        std::vector<double> grad;                 // allocated lazily by backward()
        std::function<void(Graph&)> back;         // empty for constants
        Parameter* bound = nullptr;
    };

    int push(Tensor val, std::function<void(Graph&)> back = {});
    std::vector<double>& g(int id);               // grad buffer of a node (backward only)
    const Tensor& v(int id) const { return nodes_[id].val; }

    // deque keeps value/grad references stable while later ops are pushed
    std::deque<NodeData> nodes_;
};

// ---- gradient checking ----

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double worst = 0.0;
    double tol = 0.0;
    bool pass() const { return worst < tol; }
};

// closure(true) must run forward+backward and return the loss, leaving
// gradients accumulated in the parameters; closure(false) is forward only.
// Central differences with step eps against the analytic gradients;
// relative error |ga - gn| / max(1e-3, |ga| + |gn|) per element; the floor
// makes tiny-gradient elements an absolute check at tol * 1e-3, above the
// rounding noise of the central differences themselves.
GradCheckReport grad_check(const std::function<double(bool)>& closure,
                           const std::vector<Parameter*>& params, double eps, double tol);

} // namespace seek
