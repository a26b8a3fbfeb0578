#include "bmseg/nn/tape.hpp"

#include <cmath>
#include <memory>

namespace bmseg::nn {

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw ConfigError(std::string("tensor op shape error: ") + what);
}

Var new_node(Tape& t, Mat value, std::initializer_list<Var> parents) {
    Node& n = t.fresh();
    n.value = std::move(value);
    for (Var p : parents) {
        if (p->requires_grad) {
            n.requires_grad = true;
            break;
        }
    }
    return &n;
}

} // namespace

Var add(Tape& t, Var a, Var b) {
    require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(), "add");
    Var out = new_node(t, a->value + b->value, {a, b});
    if (out->requires_grad) {
        out->backward = [out, a, b](Tape&) {
            if (a->requires_grad) a->accumulate(out->grad);
            if (b->requires_grad) b->accumulate(out->grad);
        };
    }
    return out;
}

Var sub(Tape& t, Var a, Var b) {
    require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(), "sub");
    Var out = new_node(t, a->value - b->value, {a, b});
    if (out->requires_grad) {
        out->backward = [out, a, b](Tape&) {
            if (a->requires_grad) a->accumulate(out->grad);
            if (b->requires_grad) b->accumulate(-out->grad);
        };
    }
    return out;
}

Var hadamard(Tape& t, Var a, Var b) {
    require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(), "hadamard");
    Var out = new_node(t, a->value.cwiseProduct(b->value), {a, b});
    if (out->requires_grad) {
        out->backward = [out, a, b](Tape&) {
            if (a->requires_grad) a->accumulate(out->grad.cwiseProduct(b->value));
            if (b->requires_grad) b->accumulate(out->grad.cwiseProduct(a->value));
        };
    }
    return out;
}

Var scale(Tape& t, Var a, double s) {
    Var out = new_node(t, s * a->value, {a});
    if (out->requires_grad) {
        out->backward = [out, a, s](Tape&) {
            if (a->requires_grad) a->accumulate(s * out->grad);
        };
    }
    return out;
}

Var matmul(Tape& t, Var a, Var b) {
    require(a->value.cols() == b->value.rows(), "matmul inner dims");
    Var out = new_node(t, a->value * b->value, {a, b});
    if (out->requires_grad) {
        out->backward = [out, a, b](Tape&) {
            if (a->requires_grad) a->accumulate(out->grad * b->value.transpose());
            if (b->requires_grad) b->accumulate(a->value.transpose() * out->grad);
        };
    }
    return out;
}

Var linear(Tape& t, Var x, Var w, Var b) {
    require(x->value.cols() == w->value.rows(), "linear inner dims");
    require(b->value.rows() == 1 && b->value.cols() == w->value.cols(), "linear bias");
    Mat v = x->value * w->value;
    v.rowwise() += b->value.row(0);
    Var out = new_node(t, std::move(v), {x, w, b});
    if (out->requires_grad) {
        out->backward = [out, x, w, b](Tape&) {
            if (x->requires_grad) x->accumulate(out->grad * w->value.transpose());
            if (w->requires_grad) w->accumulate(x->value.transpose() * out->grad);
            if (b->requires_grad) b->accumulate(out->grad.colwise().sum());
        };
    }
    return out;
}

Var relu(Tape& t, Var x) {
    Var out = new_node(t, x->value.cwiseMax(0.0), {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (!x->requires_grad) return;
            Mat g = out->grad;
            for (Eigen::Index i = 0; i < g.rows(); ++i) {
                for (Eigen::Index j = 0; j < g.cols(); ++j) {
                    if (x->value(i, j) <= 0.0) g(i, j) = 0.0;
                }
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var sigmoid(Tape& t, Var x) {
    Mat y = (1.0 / (1.0 + (-x->value.array()).exp())).matrix();
    Var out = new_node(t, std::move(y), {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (!x->requires_grad) return;
            const auto& yv = out->value.array();
            x->accumulate((out->grad.array() * yv * (1.0 - yv)).matrix());
        };
    }
    return out;
}

Var transpose(Tape& t, Var x) {
    Var out = new_node(t, x->value.transpose(), {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (x->requires_grad) x->accumulate(out->grad.transpose());
        };
    }
    return out;
}

Var concat_cols(Tape& t, const std::vector<Var>& xs) {
    require(!xs.empty(), "concat of nothing");
    const Eigen::Index rows = xs[0]->value.rows();
    Eigen::Index cols = 0;
    for (Var x : xs) {
        require(x->value.rows() == rows, "concat row mismatch");
        cols += x->value.cols();
    }
    Mat v(rows, cols);
    Eigen::Index off = 0;
    for (Var x : xs) {
        v.middleCols(off, x->value.cols()) = x->value;
        off += x->value.cols();
    }
    Node& n = t.fresh();
    n.value = std::move(v);
    for (Var x : xs) n.requires_grad = n.requires_grad || x->requires_grad;
    if (n.requires_grad) {
        Node* out = &n;
        std::vector<Var> parents = xs;
        n.backward = [out, parents](Tape&) {
            Eigen::Index off2 = 0;
            for (Var x : parents) {
                if (x->requires_grad) {
                    x->accumulate(out->grad.middleCols(off2, x->value.cols()));
                }
                off2 += x->value.cols();
            }
        };
    }
    return &n;
}

Var slice_cols(Tape& t, Var x, int start, int count) {
    require(start >= 0 && start + count <= x->value.cols(), "slice_cols bounds");
    Var out = new_node(t, x->value.middleCols(start, count), {x});
    if (out->requires_grad) {
        out->backward = [out, x, start, count](Tape&) {
            if (!x->requires_grad) return;
            Mat g = Mat::Zero(x->value.rows(), x->value.cols());
            g.middleCols(start, count) = out->grad;
            x->accumulate(g);
        };
    }
    return out;
}

Var gather_rows(Tape& t, Var x, const std::vector<int>& idx) {
    Mat v(static_cast<Eigen::Index>(idx.size()), x->value.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        require(idx[r] >= 0 && idx[r] < x->value.rows(), "gather_rows index");
        v.row(static_cast<Eigen::Index>(r)) = x->value.row(idx[r]);
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        auto saved = std::make_shared<std::vector<int>>(idx);
        out->backward = [out, x, saved](Tape&) {
            if (!x->requires_grad) return;
            Mat g = Mat::Zero(x->value.rows(), x->value.cols());
            for (std::size_t r = 0; r < saved->size(); ++r) {
                g.row((*saved)[r]) += out->grad.row(static_cast<Eigen::Index>(r));
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var sub_group_center(Tape& t, Var neighbors, Var centers, int k) {
    require(k > 0 && neighbors->value.rows() == centers->value.rows() * k,
            "sub_group_center rows");
    require(neighbors->value.cols() == centers->value.cols(), "sub_group_center cols");
    const Eigen::Index m = centers->value.rows();
    Mat v = neighbors->value;
    for (Eigen::Index i = 0; i < m; ++i) {
        v.middleRows(i * k, k).rowwise() -= centers->value.row(i);
    }
    Var out = new_node(t, std::move(v), {neighbors, centers});
    if (out->requires_grad) {
        out->backward = [out, neighbors, centers, k](Tape&) {
            if (neighbors->requires_grad) neighbors->accumulate(out->grad);
            if (centers->requires_grad) {
                Mat g(centers->value.rows(), centers->value.cols());
                for (Eigen::Index i = 0; i < centers->value.rows(); ++i) {
                    g.row(i) = -out->grad.middleRows(i * k, k).colwise().sum();
                }
                centers->accumulate(g);
            }
        };
    }
    return out;
}

Var repeat_rows(Tape& t, Var x, int k) {
    require(k > 0, "repeat_rows k");
    const Eigen::Index m = x->value.rows();
    Mat v(m * k, x->value.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        v.middleRows(i * k, k).rowwise() = x->value.row(i);
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x, k](Tape&) {
            if (!x->requires_grad) return;
            Mat g(x->value.rows(), x->value.cols());
            for (Eigen::Index i = 0; i < x->value.rows(); ++i) {
                g.row(i) = out->grad.middleRows(i * k, k).colwise().sum();
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var group_max(Tape& t, Var x, int k) {
    require(k > 0 && x->value.rows() % k == 0, "group_max rows");
    const Eigen::Index m = x->value.rows() / k;
    const Eigen::Index c = x->value.cols();
    Mat v(m, c);
    auto arg = std::make_shared<Eigen::MatrixXi>(m, c);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            double best = x->value(i * k, j);
            int bestr = 0;
            for (int r = 1; r < k; ++r) {
                const double cand = x->value(i * k + r, j);
                if (cand > best) { // first max wins ties
                    best = cand;
                    bestr = r;
                }
            }
            v(i, j) = best;
            (*arg)(i, j) = bestr;
        }
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x, k, arg](Tape&) {
            if (!x->requires_grad) return;
            Mat g = Mat::Zero(x->value.rows(), x->value.cols());
            for (Eigen::Index i = 0; i < arg->rows(); ++i) {
                for (Eigen::Index j = 0; j < arg->cols(); ++j) {
                    g(i * k + (*arg)(i, j), j) += out->grad(i, j);
                }
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var group_mean(Tape& t, Var x, int k) {
    require(k > 0 && x->value.rows() % k == 0, "group_mean rows");
    const Eigen::Index m = x->value.rows() / k;
    Mat v(m, x->value.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        v.row(i) = x->value.middleRows(i * k, k).colwise().mean();
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x, k](Tape&) {
            if (!x->requires_grad) return;
            Mat g(x->value.rows(), x->value.cols());
            for (Eigen::Index i = 0; i < out->grad.rows(); ++i) {
                g.middleRows(i * k, k).rowwise() = out->grad.row(i) / static_cast<double>(k);
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var group_weighted_sum(Tape& t, Var x, Var weights) {
    const Eigen::Index m = weights->value.rows();
    const Eigen::Index k = weights->value.cols();
    require(x->value.rows() == m * k, "group_weighted_sum rows");
    Mat v = Mat::Zero(m, x->value.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            v.row(i) += weights->value(i, j) * x->value.row(i * k + j);
        }
    }
    Var out = new_node(t, std::move(v), {x, weights});
    if (out->requires_grad) {
        out->backward = [out, x, weights](Tape&) {
            const Eigen::Index m2 = weights->value.rows();
            const Eigen::Index k2 = weights->value.cols();
            if (x->requires_grad) {
                Mat g(x->value.rows(), x->value.cols());
                for (Eigen::Index i = 0; i < m2; ++i) {
                    for (Eigen::Index j = 0; j < k2; ++j) {
                        g.row(i * k2 + j) = weights->value(i, j) * out->grad.row(i);
                    }
                }
                x->accumulate(g);
            }
            if (weights->requires_grad) {
                Mat g(m2, k2);
                for (Eigen::Index i = 0; i < m2; ++i) {
                    for (Eigen::Index j = 0; j < k2; ++j) {
                        g(i, j) = out->grad.row(i).dot(x->value.row(i * k2 + j));
                    }
                }
                weights->accumulate(g);
            }
        };
    }
    return out;
}

Var rows_to_groups(Tape& t, Var x, int k) {
    require(x->value.cols() == 1 && x->value.rows() % k == 0, "rows_to_groups shape");
    const Eigen::Index m = x->value.rows() / k;
    Mat v(m, k);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (int j = 0; j < k; ++j) v(i, j) = x->value(i * k + j, 0);
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x, k](Tape&) {
            if (!x->requires_grad) return;
            Mat g(x->value.rows(), 1);
            for (Eigen::Index i = 0; i < out->grad.rows(); ++i) {
                for (int j = 0; j < k; ++j) g(i * k + j, 0) = out->grad(i, j);
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var global_std_normalize(Tape& t, Var x, double eps) {
    const double count = static_cast<double>(x->value.size());
    require(count > 0, "global_std_normalize on empty tensor");
    const double mean = x->value.mean();
    const double var = (x->value.array() - mean).square().sum() / count;
    const double sigma = std::sqrt(var);
    const double denom = sigma + eps;
    Var out = new_node(t, x->value / denom, {x});
    if (out->requires_grad) {
        out->backward = [out, x, mean, sigma, denom, count](Tape&) {
            if (!x->requires_grad) return;
            Mat g = out->grad / denom;
            if (sigma > 1e-300) {
                const double inner = out->grad.cwiseProduct(x->value).sum();
                g -= (inner / (count * sigma * denom * denom)) *
                     (x->value.array() - mean).matrix();
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var feature_norm(Tape& t, Var x, Var gain, Var bias, double eps) {
    const Eigen::Index n = x->value.rows();
    const Eigen::Index c = x->value.cols();
    require(n >= 1, "feature_norm needs rows");
    require(gain->value.rows() == 1 && gain->value.cols() == c, "feature_norm gain");
    require(bias->value.rows() == 1 && bias->value.cols() == c, "feature_norm bias");
    const Eigen::RowVectorXd mu = x->value.colwise().mean();
    Mat centered = x->value.rowwise() - mu;
    const Eigen::RowVectorXd var =
        centered.array().square().colwise().sum() / static_cast<double>(n);
    const Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt();
    auto xh = std::make_shared<Mat>((centered.array().rowwise() * inv_std.array()).matrix());
    Mat v = (xh->array().rowwise() * gain->value.row(0).array()).matrix();
    v.rowwise() += bias->value.row(0);
    Var out = new_node(t, std::move(v), {x, gain, bias});
    if (out->requires_grad) {
        auto istd = std::make_shared<Eigen::RowVectorXd>(inv_std);
        out->backward = [out, x, gain, bias, xh, istd, n](Tape&) {
            const Mat& g = out->grad;
            if (bias->requires_grad) bias->accumulate(g.colwise().sum());
            if (gain->requires_grad) gain->accumulate(g.cwiseProduct(*xh).colwise().sum());
            if (x->requires_grad) {
                const double dn = static_cast<double>(n);
                Mat dxhat = (g.array().rowwise() * gain->value.row(0).array()).matrix();
                const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
                const Eigen::RowVectorXd sum_dxhat_xhat =
                    dxhat.cwiseProduct(*xh).colwise().sum();
                Mat dx = dn * dxhat;
                dx.rowwise() -= sum_dxhat;
                dx -= (xh->array().rowwise() * sum_dxhat_xhat.array()).matrix();
                dx = (dx.array().rowwise() * (istd->array() / dn)).matrix();
                x->accumulate(dx);
            }
        };
    }
    return out;
}

Var col_affine(Tape& t, Var x, Var gain, Var bias) {
    const Eigen::Index c = x->value.cols();
    require(gain->value.rows() == 1 && gain->value.cols() == c, "col_affine gain");
    require(bias->value.rows() == 1 && bias->value.cols() == c, "col_affine bias");
    Mat v = (x->value.array().rowwise() * gain->value.row(0).array()).matrix();
    v.rowwise() += bias->value.row(0);
    Var out = new_node(t, std::move(v), {x, gain, bias});
    if (out->requires_grad) {
        out->backward = [out, x, gain, bias](Tape&) {
            if (x->requires_grad) {
                x->accumulate(
                    (out->grad.array().rowwise() * gain->value.row(0).array()).matrix());
            }
            if (gain->requires_grad) {
                gain->accumulate(out->grad.cwiseProduct(x->value).colwise().sum());
            }
            if (bias->requires_grad) bias->accumulate(out->grad.colwise().sum());
        };
    }
    return out;
}

Var row_scale(Tape& t, Var x, Var s) {
    require(s->value.cols() == 1 && s->value.rows() == x->value.rows(), "row_scale shape");
    Mat v = (x->value.array().colwise() * s->value.col(0).array()).matrix();
    Var out = new_node(t, std::move(v), {x, s});
    if (out->requires_grad) {
        out->backward = [out, x, s](Tape&) {
            if (x->requires_grad) {
                x->accumulate(
                    (out->grad.array().colwise() * s->value.col(0).array()).matrix());
            }
            if (s->requires_grad) {
                s->accumulate(out->grad.cwiseProduct(x->value).rowwise().sum());
            }
        };
    }
    return out;
}

Var row_softmax(Tape& t, Var x) {
    Mat v = x->value;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double mx = v.row(i).maxCoeff();
        v.row(i) = (v.row(i).array() - mx).exp();
        v.row(i) /= v.row(i).sum();
    }
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (!x->requires_grad) return;
            const Mat& y = out->value;
            Mat g(y.rows(), y.cols());
            for (Eigen::Index i = 0; i < y.rows(); ++i) {
                const double dot = out->grad.row(i).dot(y.row(i));
                g.row(i) = y.row(i).cwiseProduct(
                    (out->grad.row(i).array() - dot).matrix());
            }
            x->accumulate(g);
        };
    }
    return out;
}

Var add_const(Tape& t, Var x, const Mat& c) {
    require(c.rows() == x->value.rows() && c.cols() == x->value.cols(), "add_const shape");
    Var out = new_node(t, x->value + c, {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (x->requires_grad) x->accumulate(out->grad);
        };
    }
    return out;
}

Var emax(Tape& t, Var a, Var b) {
    require(a->value.rows() == b->value.rows() && a->value.cols() == b->value.cols(), "emax");
    Var out = new_node(t, a->value.cwiseMax(b->value), {a, b});
    if (out->requires_grad) {
        out->backward = [out, a, b](Tape&) {
            // ties route to a
            const Mat mask = (a->value.array() >= b->value.array()).cast<double>().matrix();
            if (a->requires_grad) a->accumulate(out->grad.cwiseProduct(mask));
            if (b->requires_grad) {
                b->accumulate(out->grad.cwiseProduct((1.0 - mask.array()).matrix()));
            }
        };
    }
    return out;
}

Var dropout(Tape& t, Var x, double rate, Rng& rng, bool training) {
    if (!training || rate <= 0.0) return x;
    require(rate < 1.0, "dropout rate must be < 1");
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<Mat>(x->value.rows(), x->value.cols());
    for (Eigen::Index i = 0; i < mask->rows(); ++i) {
        for (Eigen::Index j = 0; j < mask->cols(); ++j) {
            (*mask)(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
    }
    Var out = new_node(t, x->value.cwiseProduct(*mask), {x});
    if (out->requires_grad) {
        out->backward = [out, x, mask](Tape&) {
            if (x->requires_grad) x->accumulate(out->grad.cwiseProduct(*mask));
        };
    }
    return out;
}

Var sum_all(Tape& t, Var x) {
    Mat v(1, 1);
    v(0, 0) = x->value.sum();
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x](Tape&) {
            if (x->requires_grad) {
                x->accumulate(Mat::Constant(x->value.rows(), x->value.cols(), out->grad(0, 0)));
            }
        };
    }
    return out;
}

Var mean_all(Tape& t, Var x) {
    const double count = static_cast<double>(x->value.size());
    Mat v(1, 1);
    v(0, 0) = x->value.sum() / count;
    Var out = new_node(t, std::move(v), {x});
    if (out->requires_grad) {
        out->backward = [out, x, count](Tape&) {
            if (x->requires_grad) {
                x->accumulate(
                    Mat::Constant(x->value.rows(), x->value.cols(), out->grad(0, 0) / count));
            }
        };
    }
    return out;
}

Var cross_entropy_with_logits(Tape& t, Var logits, const std::vector<int>& labels,
                              const std::vector<double>* class_weights) {
    const Eigen::Index n = logits->value.rows();
    const Eigen::Index c = logits->value.cols();
    require(static_cast<Eigen::Index>(labels.size()) == n, "cross entropy label count");
    if (class_weights) {
        require(static_cast<Eigen::Index>(class_weights->size()) == c,
                "cross entropy class weight count");
    }
    auto probs = std::make_shared<Mat>(n, c);
    auto row_w = std::make_shared<Eigen::VectorXd>(n);
    double loss = 0.0;
    double total_w = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        require(labels[i] >= 0 && labels[i] < c, "cross entropy label range");
        const double w = class_weights ? (*class_weights)[labels[i]] : 1.0;
        (*row_w)(i) = w;
        total_w += w;
        const double mx = logits->value.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (logits->value.row(i).array() - mx).exp();
        const double sum = e.sum();
        probs->row(i) = e / sum;
        loss += w * (std::log(sum) + mx - logits->value(i, labels[i]));
    }
    require(total_w > 0.0, "cross entropy weights sum to zero");
    Mat v(1, 1);
    v(0, 0) = loss / total_w;
    Var out = new_node(t, std::move(v), {logits});
    if (out->requires_grad) {
        auto saved_labels = std::make_shared<std::vector<int>>(labels);
        out->backward = [out, logits, probs, saved_labels, row_w, total_w](Tape&) {
            if (!logits->requires_grad) return;
            Mat g = *probs;
            for (Eigen::Index i = 0; i < g.rows(); ++i) {
                g(i, (*saved_labels)[i]) -= 1.0;
                g.row(i) *= (*row_w)(i);
            }
            g *= out->grad(0, 0) / total_w;
            logits->accumulate(g);
        };
    }
    return out;
}

} // namespace bmseg::nn
