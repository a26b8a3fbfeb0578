#pragma once

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "bmseg/common.hpp"

namespace bmseg::nn {

using Mat = Eigen::MatrixXd;

// A learnable tensor living outside any tape. Gradients accumulate across
// backward passes until zero_grad().
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;

    Parameter() = default;
    Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat::Zero(value.rows(), value.cols());
    }
    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    Eigen::Index size() const { return value.size(); }
};

class Tape;

struct Node {
    Mat value;
    Mat grad; // allocated lazily on first accumulation
    bool requires_grad = false;
    std::function<void(Tape&)> backward; // empty for leaves/constants

    void accumulate(const Mat& g) {
        if (grad.size() == 0) {
            grad = g;
        } else {
            grad += g;
        }
    }
    bool has_grad() const { return grad.size() != 0; }
};

using Var = Node*;

// Reverse-mode tape over Eigen double matrices. Nodes are created in forward
// order, which is already a topological order, so backward() is a single
// reverse sweep. One tape per forward pass; parameters persist outside it.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Mat value) {
        Node& n = fresh();
        n.value = std::move(value);
        return &n;
    }

    Var param(Parameter& p) {
        Node& n = fresh();
        n.value = p.value;
        n.requires_grad = true;
        Parameter* pp = &p;
        Node* self = &n;
        n.backward = [self, pp](Tape&) {
            if (self->has_grad()) pp->grad += self->grad;
        };
        return &n;
    }

    Node& fresh() {
        nodes_.emplace_back();
        return nodes_.back();
    }

    // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. `loss` must be
    // 1x1 and belong to this tape.
    void backward(Var loss) {
        if (loss->value.rows() != 1 || loss->value.cols() != 1) {
            throw ConfigError("backward() expects a 1x1 loss node");
        }
        loss->accumulate(Mat::Ones(1, 1));
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (it->requires_grad && it->has_grad() && it->backward) {
                it->backward(*this);
            }
        }
    }

    std::size_t size() const { return nodes_.size(); }

private:
    std::deque<Node> nodes_; // deque: stable addresses
};

// ---------------------------------------------------------------------------
// Ops. All return fresh nodes on `t`; shapes are validated eagerly.

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var hadamard(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var matmul(Tape& t, Var a, Var b);
// x (n x in) * w (in x out) + row-broadcast bias (1 x out)
Var linear(Tape& t, Var x, Var w, Var b);
Var relu(Tape& t, Var x);
Var sigmoid(Tape& t, Var x);
Var transpose(Tape& t, Var x);
Var concat_cols(Tape& t, const std::vector<Var>& xs);
Var slice_cols(Tape& t, Var x, int start, int count);
// out.row(r) = x.row(idx[r])
Var gather_rows(Tape& t, Var x, const std::vector<int>& idx);
// Grouped rows: m groups of k consecutive rows.
Var sub_group_center(Tape& t, Var neighbors, Var centers, int k); // (mk x C) - (m x C)
Var repeat_rows(Tape& t, Var x, int k);                           // (m x C) -> (mk x C)
Var group_max(Tape& t, Var x, int k);                             // (mk x C) -> (m x C)
Var group_mean(Tape& t, Var x, int k);                            // (mk x C) -> (m x C)
// weights (m x k) applied over each group: out(i) = sum_j w(i,j) x(i*k+j)
Var group_weighted_sum(Tape& t, Var x, Var weights);
// (mk x 1) -> (m x k)
Var rows_to_groups(Tape& t, Var x, int k);
// Normalize by the scalar standard deviation over all entries: x / (sigma + eps).
Var global_std_normalize(Tape& t, Var x, double eps);
// Per-column standardization over rows with learnable gain/bias (1 x C each).
Var feature_norm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-5);
// x * col-broadcast gain + bias (both 1 x C)
Var col_affine(Tape& t, Var x, Var gain, Var bias);
// x * row-broadcast scale s (n x 1)
Var row_scale(Tape& t, Var x, Var s);
Var row_softmax(Tape& t, Var x);
Var add_const(Tape& t, Var x, const Mat& c);
Var emax(Tape& t, Var a, Var b); // elementwise max, subgradient to the winner
Var dropout(Tape& t, Var x, double rate, Rng& rng, bool training);
Var sum_all(Tape& t, Var x);  // 1x1
Var mean_all(Tape& t, Var x); // 1x1
// Mean over rows of [logsumexp(row) - logit(row, label)], 1x1. Optional
// per-class weights w: sum(w_y * loss_row) / sum(w_y).
Var cross_entropy_with_logits(Tape& t, Var logits, const std::vector<int>& labels,
                              const std::vector<double>* class_weights = nullptr);

} // namespace bmseg::nn
