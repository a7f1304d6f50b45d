#include "seek/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seek {

int Graph::push(Tensor val, std::function<void(Graph&)> back) {
    NodeData nd;
    nd.val = std::move(val);
    nd.back = std::move(back);
    nodes_.push_back(std::move(nd));
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Graph::g(int id) {
    NodeData& nd = nodes_[id];
    if (nd.grad.size() != nd.val.data.size()) nd.grad.assign(nd.val.data.size(), 0.0);
    return nd.grad;
}

Node Graph::input(Tensor t) { return {push(std::move(t))}; }

Node Graph::param(Parameter& p) {
    int id = push(p.value); // copy keeps graph values immutable if the caller perturbs p
    nodes_[id].bound = &p;
    return {id};
}

Node Graph::zeros(int r, int c) { return input(Tensor::zeros({r, c})); }

Node Graph::matmul(Node a, Node b) {
    const Tensor& A = v(a.id);
    const Tensor& B = v(b.id);
    int m = A.rows(), k = A.cols(), n = B.cols();
    if (B.rows() != k)
        fail("ShapeMismatch", "matmul " + shape_str(A.shape) + " x " + shape_str(B.shape));
    Tensor C = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double aip = A.at(i, p);
            if (aip == 0.0) continue;
            for (int j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
        }
    int ai = a.id, bi = b.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, bi, id, m, k, n](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const Tensor& A = gr.v(ai);
        const Tensor& B = gr.v(bi);
        std::vector<double>& dA = gr.g(ai);
        std::vector<double>& dB = gr.g(bi);
        // dA += dC * B^T ; dB += A^T * dC
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                double d = dC[static_cast<std::size_t>(i) * n + j];
                if (d == 0.0) continue;
                for (int p = 0; p < k; ++p) {
                    dA[static_cast<std::size_t>(i) * k + p] += d * B.at(p, j);
                    dB[static_cast<std::size_t>(p) * n + j] += A.at(i, p) * d;
                }
            }
    };
    return {id};
}

Node Graph::matmul_nt(Node a, Node b) {
    const Tensor& A = v(a.id);
    const Tensor& B = v(b.id);
    int m = A.rows(), k = A.cols(), n = B.rows();
    if (B.cols() != k)
        fail("ShapeMismatch", "matmul_nt " + shape_str(A.shape) + " x " + shape_str(B.shape) + "^T");
    Tensor C = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += A.at(i, p) * B.at(j, p);
            C.at(i, j) = s;
        }
    int ai = a.id, bi = b.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, bi, id, m, k, n](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const Tensor& A = gr.v(ai);
        const Tensor& B = gr.v(bi);
        std::vector<double>& dA = gr.g(ai);
        std::vector<double>& dB = gr.g(bi);
        // C = A B^T: dA += dC * B ; dB += dC^T * A
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) {
                double d = dC[static_cast<std::size_t>(i) * n + j];
                if (d == 0.0) continue;
                for (int p = 0; p < k; ++p) {
                    dA[static_cast<std::size_t>(i) * k + p] += d * B.at(j, p);
                    dB[static_cast<std::size_t>(j) * k + p] += d * A.at(i, p);
                }
            }
    };
    return {id};
}

Node Graph::add(Node a, Node b) {
    const Tensor& A = v(a.id);
    const Tensor& B = v(b.id);
    if (!A.same_shape(B))
        fail("ShapeMismatch", "add " + shape_str(A.shape) + " vs " + shape_str(B.shape));
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] += B.data[i];
    int ai = a.id, bi = b.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, bi, id](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        std::vector<double>& dB = gr.g(bi);
        for (std::size_t i = 0; i < dC.size(); ++i) {
            dA[i] += dC[i];
            dB[i] += dC[i];
        }
    };
    return {id};
}

Node Graph::add_row(Node m, Node row) {
    const Tensor& A = v(m.id);
    const Tensor& R = v(row.id);
    int r = A.rows(), c = A.cols();
    if (R.rows() != 1 || R.cols() != c)
        fail("ShapeMismatch", "add_row " + shape_str(A.shape) + " + " + shape_str(R.shape));
    Tensor C = A;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) C.at(i, j) += R.data[j];
    int ai = m.id, ri = row.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, ri, id, r, c](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        std::vector<double>& dR = gr.g(ri);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                double d = dC[static_cast<std::size_t>(i) * c + j];
                dA[static_cast<std::size_t>(i) * c + j] += d;
                dR[j] += d;
            }
    };
    return {id};
}

Node Graph::scale(Node a, double cfac) {
    Tensor C = v(a.id);
    for (double& x : C.data) x *= cfac;
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id, cfac](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        for (std::size_t i = 0; i < dC.size(); ++i) dA[i] += cfac * dC[i];
    };
    return {id};
}

Node Graph::mul(Node a, Node b) {
    const Tensor& A = v(a.id);
    const Tensor& B = v(b.id);
    if (!A.same_shape(B))
        fail("ShapeMismatch", "mul " + shape_str(A.shape) + " vs " + shape_str(B.shape));
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] *= B.data[i];
    int ai = a.id, bi = b.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, bi, id](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const Tensor& A = gr.v(ai);
        const Tensor& B = gr.v(bi);
        std::vector<double>& dA = gr.g(ai);
        std::vector<double>& dB = gr.g(bi);
        for (std::size_t i = 0; i < dC.size(); ++i) {
            dA[i] += dC[i] * B.data[i];
            dB[i] += dC[i] * A.data[i];
        }
    };
    return {id};
}

Node Graph::concat_cols(const std::vector<Node>& parts) {
    if (parts.empty()) fail("ShapeMismatch", "concat_cols of nothing");
    int r = v(parts[0].id).rows();
    int total = 0;
    for (Node p : parts) {
        if (v(p.id).rows() != r) fail("ShapeMismatch", "concat_cols row mismatch");
        total += v(p.id).cols();
    }
    Tensor C = Tensor::zeros({r, total});
    int off = 0;
    std::vector<int> ids, widths, offs;
    for (Node p : parts) {
        const Tensor& A = v(p.id);
        int c = A.cols();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) C.at(i, off + j) = A.at(i, j);
        ids.push_back(p.id);
        widths.push_back(c);
        offs.push_back(off);
        off += c;
    }
    int id = push(std::move(C));
    nodes_[id].back = [ids, widths, offs, id, r, total](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            std::vector<double>& dA = gr.g(ids[k]);
            int c = widths[k], o = offs[k];
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    dA[static_cast<std::size_t>(i) * c + j] += dC[static_cast<std::size_t>(i) * total + o + j];
        }
    };
    return {id};
}

Node Graph::concat_rows(const std::vector<Node>& parts) {
    if (parts.empty()) fail("ShapeMismatch", "concat_rows of nothing");
    int c = v(parts[0].id).cols();
    int total = 0;
    for (Node p : parts) {
        if (v(p.id).cols() != c) fail("ShapeMismatch", "concat_rows col mismatch");
        total += v(p.id).rows();
    }
    Tensor C = Tensor::zeros({total, c});
    int off = 0;
    std::vector<int> ids, heights, offs;
    for (Node p : parts) {
        const Tensor& A = v(p.id);
        int r = A.rows();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) C.at(off + i, j) = A.at(i, j);
        ids.push_back(p.id);
        heights.push_back(r);
        offs.push_back(off);
        off += r;
    }
    int id = push(std::move(C));
    nodes_[id].back = [ids, heights, offs, id, c](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            std::vector<double>& dA = gr.g(ids[k]);
            int r = heights[k], o = offs[k];
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    dA[static_cast<std::size_t>(i) * c + j] += dC[static_cast<std::size_t>(o + i) * c + j];
        }
    };
    return {id};
}

Node Graph::slice_rows(Node a, int r0, int n) {
    const Tensor& A = v(a.id);
    int c = A.cols();
    if (r0 < 0 || n <= 0 || r0 + n > A.rows()) fail("ShapeMismatch", "slice_rows out of range");
    Tensor C = Tensor::zeros({n, c});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) C.at(i, j) = A.at(r0 + i, j);
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id, r0, n, c](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j)
                dA[static_cast<std::size_t>(r0 + i) * c + j] += dC[static_cast<std::size_t>(i) * c + j];
    };
    return {id};
}

Node Graph::slice_cols(Node a, int c0, int n) {
    const Tensor& A = v(a.id);
    int r = A.rows(), c = A.cols();
    if (c0 < 0 || n <= 0 || c0 + n > c) fail("ShapeMismatch", "slice_cols out of range");
    Tensor C = Tensor::zeros({r, n});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < n; ++j) C.at(i, j) = A.at(i, c0 + j);
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id, c0, n, r, c](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < n; ++j)
                dA[static_cast<std::size_t>(i) * c + c0 + j] += dC[static_cast<std::size_t>(i) * n + j];
    };
    return {id};
}

Node Graph::tanh_(Node a) {
    Tensor C = v(a.id);
    for (double& x : C.data) x = std::tanh(x);
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const std::vector<double>& y = gr.v(id).data;
        std::vector<double>& dA = gr.g(ai);
        for (std::size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i] * (1.0 - y[i] * y[i]);
    };
    return {id};
}

Node Graph::sigmoid(Node a) {
    Tensor C = v(a.id);
    for (double& x : C.data) x = 1.0 / (1.0 + std::exp(-x));
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const std::vector<double>& y = gr.v(id).data;
        std::vector<double>& dA = gr.g(ai);
        for (std::size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i] * y[i] * (1.0 - y[i]);
    };
    return {id};
}

Node Graph::relu(Node a) {
    Tensor C = v(a.id);
    for (double& x : C.data) x = x > 0.0 ? x : 0.0;
    int ai = a.id;
    int id = push(std::move(C));
    nodes_[id].back = [ai, id](Graph& gr) {
        const std::vector<double>& dC = gr.nodes_[id].grad;
        const std::vector<double>& x = gr.v(ai).data;
        std::vector<double>& dA = gr.g(ai);
        for (std::size_t i = 0; i < dC.size(); ++i)
            if (x[i] > 0.0) dA[i] += dC[i];
    };
    return {id};
}

Node Graph::softmax_rows(Node logits) { return softmax_rows(logits, Tensor()); }

Node Graph::softmax_rows(Node logits, const Tensor& additive) {
    const Tensor& X = v(logits.id);
    int r = X.rows(), c = X.cols();
    bool has_mask = !additive.data.empty();
    if (has_mask) {
        bool row_bcast = additive.rows() == 1 && additive.cols() == c;
        bool full = additive.rows() == r && additive.cols() == c;
        if (!row_bcast && !full)
            fail("ShapeMismatch", "softmax additive mask " + shape_str(additive.shape) + " for logits " +
                                      shape_str(X.shape));
    }
    Tensor Y = Tensor::zeros({r, c});
    for (int i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < c; ++j) {
            double z = X.at(i, j);
            if (has_mask) z += additive.rows() == 1 ? additive.data[j] : additive.at(i, j);
            Y.at(i, j) = z;
            mx = std::max(mx, z);
        }
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            double e = std::exp(Y.at(i, j) - mx);
            Y.at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < c; ++j) Y.at(i, j) /= sum;
    }
    int ai = logits.id;
    int id = push(std::move(Y));
    nodes_[id].back = [ai, id, r, c](Graph& gr) {
        const std::vector<double>& dY = gr.nodes_[id].grad;
        const Tensor& Yv = gr.v(id);
        std::vector<double>& dX = gr.g(ai);
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += dY[static_cast<std::size_t>(i) * c + j] * Yv.at(i, j);
            for (int j = 0; j < c; ++j)
                dX[static_cast<std::size_t>(i) * c + j] +=
                    Yv.at(i, j) * (dY[static_cast<std::size_t>(i) * c + j] - dot);
        }
    };
    return {id};
}

Node Graph::layer_norm_rows(Node x, Node gain, Node bias) {
    const Tensor& X = v(x.id);
    const Tensor& G = v(gain.id);
    const Tensor& B = v(bias.id);
    int r = X.rows(), c = X.cols();
    if (G.rows() != 1 || G.cols() != c || B.rows() != 1 || B.cols() != c)
        fail("ShapeMismatch", "layer_norm gain/bias must be 1x" + std::to_string(c));
    constexpr double eps = 1e-5;
    Tensor Y = Tensor::zeros({r, c});
    std::vector<double> inv_std(r), xhat(static_cast<std::size_t>(r) * c);
    for (int i = 0; i < r; ++i) {
        double mean = 0.0;
        for (int j = 0; j < c; ++j) mean += X.at(i, j);
        mean /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) {
            double d = X.at(i, j) - mean;
            var += d * d;
        }
        var /= c;
        double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (int j = 0; j < c; ++j) {
            double xh = (X.at(i, j) - mean) * is;
            xhat[static_cast<std::size_t>(i) * c + j] = xh;
            Y.at(i, j) = G.data[j] * xh + B.data[j];
        }
    }
    int xi = x.id, gi = gain.id, bi = bias.id;
    int id = push(std::move(Y));
    nodes_[id].back = [xi, gi, bi, id, r, c, inv_std = std::move(inv_std), xhat = std::move(xhat)](Graph& gr) {
        const std::vector<double>& dY = gr.nodes_[id].grad;
        const Tensor& G = gr.v(gi);
        std::vector<double>& dX = gr.g(xi);
        std::vector<double>& dG = gr.g(gi);
        std::vector<double>& dB = gr.g(bi);
        for (int i = 0; i < r; ++i) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (int j = 0; j < c; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * c + j;
                double dxh = dY[k] * G.data[j];
                mean_dxh += dxh;
                mean_dxh_xh += dxh * xhat[k];
                dG[j] += dY[k] * xhat[k];
                dB[j] += dY[k];
            }
            mean_dxh /= c;
            mean_dxh_xh /= c;
            for (int j = 0; j < c; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * c + j;
                double dxh = dY[k] * G.data[j];
                dX[k] += inv_std[i] * (dxh - mean_dxh - xhat[k] * mean_dxh_xh);
            }
        }
    };
    return {id};
}

Node Graph::mean_pool_rows(Node x, const std::vector<bool>& mask) {
    const Tensor& X = v(x.id);
    int r = X.rows(), c = X.cols();
    if (static_cast<int>(mask.size()) != r)
        fail("ShapeMismatch", "mean_pool mask length " + std::to_string(mask.size()) + " for " +
                                  std::to_string(r) + " rows");
    int cnt = 0;
    for (bool b : mask) cnt += b ? 1 : 0;
    if (cnt == 0) fail("MaskAllFalse", "mean pooling over zero real positions");
    Tensor Y = Tensor::zeros({1, c});
    for (int i = 0; i < r; ++i) {
        if (!mask[i]) continue;
        for (int j = 0; j < c; ++j) Y.data[j] += X.at(i, j);
    }
    for (int j = 0; j < c; ++j) Y.data[j] /= cnt;
    int ai = x.id;
    int id = push(std::move(Y));
    nodes_[id].back = [ai, id, mask, cnt, r, c](Graph& gr) {
        const std::vector<double>& dY = gr.nodes_[id].grad;
        std::vector<double>& dA = gr.g(ai);
        for (int i = 0; i < r; ++i) {
            if (!mask[i]) continue;
            for (int j = 0; j < c; ++j) dA[static_cast<std::size_t>(i) * c + j] += dY[j] / cnt;
        }
    };
    return {id};
}

Node Graph::mean_rows(Node x) {
    return mean_pool_rows(x, std::vector<bool>(v(x.id).rows(), true));
}

Node Graph::sum_all(Node a) {
    const Tensor& A = v(a.id);
    double s = 0.0;
    for (double x : A.data) s += x;
    int ai = a.id;
    int id = push(Tensor::scalar(s));
    nodes_[id].back = [ai, id](Graph& gr) {
        double d = gr.nodes_[id].grad[0];
        std::vector<double>& dA = gr.g(ai);
        for (double& x : dA) x += d;
    };
    return {id};
}

Node Graph::embedding(Parameter& table, const std::vector<int>& ids) {
    const Tensor& T = table.value;
    int vocab = T.rows(), d = T.cols();
    int n = static_cast<int>(ids.size());
    if (n == 0) fail("ShapeMismatch", "embedding lookup of zero ids");
    Tensor Y = Tensor::zeros({n, d});
    for (int i = 0; i < n; ++i) {
        if (ids[i] < 0 || ids[i] >= vocab)
            fail("ShapeMismatch", "embedding id " + std::to_string(ids[i]) + " outside table of " +
                                      std::to_string(vocab) + " rows");
        for (int j = 0; j < d; ++j) Y.at(i, j) = T.at(ids[i], j);
    }
    Parameter* tp = &table;
    int id = push(std::move(Y));
    nodes_[id].back = [tp, id, ids, d](Graph& gr) {
        if (!tp->trainable) return;
        const std::vector<double>& dY = gr.nodes_[id].grad;
        tp->value.ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (int j = 0; j < d; ++j)
                tp->value.grad[static_cast<std::size_t>(ids[i]) * d + j] += dY[i * d + j];
    };
    return {id};
}

Node Graph::nll_rows(Node logits, const std::vector<int>& targets, const std::vector<double>& row_weights) {
    const Tensor& X = v(logits.id);
    int r = X.rows(), c = X.cols();
    if (static_cast<int>(targets.size()) != r || static_cast<int>(row_weights.size()) != r)
        fail("ShapeMismatch", "nll targets/weights must match row count " + std::to_string(r));
    std::vector<double> lse(r);
    double loss = 0.0;
    for (int i = 0; i < r; ++i) {
        if (targets[i] < 0 || targets[i] >= c)
            fail("LabelOutOfRange", "target " + std::to_string(targets[i]) + " for " + std::to_string(c) +
                                        " classes");
        double mx = X.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, X.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < c; ++j) sum += std::exp(X.at(i, j) - mx);
        lse[i] = mx + std::log(sum);
        loss += row_weights[i] * (lse[i] - X.at(i, targets[i]));
    }
    int ai = logits.id;
    int id = push(Tensor::scalar(loss));
    nodes_[id].back = [ai, id, targets, row_weights, lse = std::move(lse), r, c](Graph& gr) {
        double d = gr.nodes_[id].grad[0];
        const Tensor& X = gr.v(ai);
        std::vector<double>& dX = gr.g(ai);
        for (int i = 0; i < r; ++i) {
            double w = d * row_weights[i];
            if (w == 0.0) continue;
            for (int j = 0; j < c; ++j) {
                double p = std::exp(X.at(i, j) - lse[i]);
                dX[static_cast<std::size_t>(i) * c + j] += w * (p - (j == targets[i] ? 1.0 : 0.0));
            }
        }
    };
    return {id};
}

Node Graph::nll_rows(Node logits, const std::vector<int>& targets) {
    return nll_rows(logits, targets, std::vector<double>(targets.size(), 1.0));
}

void Graph::backward(Node loss) {
    const Tensor& L = v(loss.id);
    if (L.numel() != 1) fail("NonScalarLoss", "backward needs a scalar, got " + shape_str(L.shape));
    g(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        NodeData& nd = nodes_[id];
        if (nd.grad.empty()) continue; // never reached from the loss
        if (nd.back) nd.back(*this);
        if (nd.bound && nd.bound->trainable) {
            nd.bound->value.ensure_grad();
            for (std::size_t i = 0; i < nd.grad.size(); ++i) nd.bound->value.grad[i] += nd.grad[i];
        }
    }
}

GradCheckReport grad_check(const std::function<double(bool)>& closure,
                           const std::vector<Parameter*>& params, double eps, double tol) {
    if (!(eps > 0.0 && eps <= 1e-3)) fail("BadFlag", "grad_check eps must be in (0, 1e-3]");

    double probe1 = closure(false);
    double probe2 = closure(false);
    if (probe1 != probe2)
        fail("NonDeterministicClosure", "two forward passes disagree: " + std::to_string(probe1) + " vs " +
                                            std::to_string(probe2));

    for (Parameter* p : params) p->value.zero_grad();
    closure(true);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) {
        p->value.ensure_grad(); // params the loss never touches check against zeros
        analytic.push_back(p->value.grad);
    }

    GradCheckReport report;
    report.tol = tol;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        GradCheckEntry entry{p->name, 0.0};
        for (std::size_t i = 0; i < p->value.data.size(); ++i) {
            double saved = p->value.data[i];
            p->value.data[i] = saved + eps;
            double fp = closure(false);
            p->value.data[i] = saved - eps;
            double fm = closure(false);
            p->value.data[i] = saved;
            double gn = (fp - fm) / (2.0 * eps);
            double ga = analytic[pi][i];
            // Floor turns near-zero elements into an absolute check at tol * 1e-3;
            // central differences carry ~|f|*ulp/eps rounding noise, which a pure
            // relative test would amplify without bound.
            double rel = std::abs(ga - gn) / std::max(1e-3, std::abs(ga) + std::abs(gn));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace seek
