#include "bmseg/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace bmseg {

using namespace nn;
using nlohmann::json;

void TrainConfig::validate() const {
    if (lr < 0.0) throw ConfigError("learning rate must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!class_weights.empty() && static_cast<int>(class_weights.size()) != kNumClasses) {
        throw ConfigError("class_weights must have 8 entries when present");
    }
}

TrainConfig TrainConfig::desk_preset() {
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 4;
    cfg.model.points = 1024;
    return cfg;
}

json TrainConfig::to_json() const {
    json j;
    j["lr"] = lr;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["weight_decay"] = weight_decay;
    j["grad_clip"] = grad_clip;
    if (!class_weights.empty()) j["class_weights"] = class_weights;
    j["model"] = {{"ablation", to_string(model.ablation)},
                  {"points", model.points},
                  {"embed_dim", model.embed_dim},
                  {"branch_out", model.branch_out},
                  {"head_hidden", model.head_hidden},
                  {"head_dropout", model.head_dropout},
                  {"curve_k", model.curve_k},
                  {"n_curves", model.n_curves},
                  {"curve_length", model.curve_length},
                  {"geometry_k", model.geometry_k}};
    return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig cfg;
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    if (j.contains("class_weights")) {
        cfg.class_weights = j["class_weights"].get<std::vector<double>>();
    }
    if (j.contains("model")) {
        const json& m = j["model"];
        if (m.contains("ablation")) {
            cfg.model.ablation = ablation_from_string(m["ablation"].get<std::string>());
        }
        cfg.model.points = m.value("points", cfg.model.points);
        cfg.model.embed_dim = m.value("embed_dim", cfg.model.embed_dim);
        cfg.model.branch_out = m.value("branch_out", cfg.model.branch_out);
        cfg.model.head_hidden = m.value("head_hidden", cfg.model.head_hidden);
        cfg.model.head_dropout = m.value("head_dropout", cfg.model.head_dropout);
        cfg.model.curve_k = m.value("curve_k", cfg.model.curve_k);
        cfg.model.n_curves = m.value("n_curves", cfg.model.n_curves);
        cfg.model.curve_length = m.value("curve_length", cfg.model.curve_length);
        cfg.model.geometry_k = m.value("geometry_k", cfg.model.geometry_k);
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(std::vector<Parameter*> params, double lr, double weight_decay, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), weight_decay_(weight_decay), beta1_(beta1),
      beta2_(beta2), eps_(eps) {
    for (Parameter* p : params_) {
        m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Mat g = params_[i]->grad;
        if (weight_decay_ > 0.0) g += weight_decay_ * params_[i]->value;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        const Mat m_hat = m_[i] / bc1;
        const Mat v_hat = v_[i] / bc2;
        params_[i]->value -=
            lr_ * (m_hat.array() / (v_hat.array().sqrt() + eps_)).matrix();
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {
constexpr char kCkptMagic[8] = {'B', 'M', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kCkptVersion = 1;
} // namespace

Checkpoint Checkpoint::capture(const TrainConfig& cfg, SegModel& model, int epoch,
                               double val_dsc) {
    Checkpoint ckpt;
    ckpt.config = cfg;
    ckpt.epoch = epoch;
    ckpt.val_dsc = val_dsc;
    for (Parameter* p : model.parameters()) {
        ckpt.state[p->name] = p->value;
    }
    return ckpt;
}

void Checkpoint::apply_to(SegModel& model) const {
    for (Parameter* p : model.parameters()) {
        auto it = state.find(p->name);
        if (it == state.end()) {
            throw ValidationError("checkpoint is missing parameter '" + p->name + "'");
        }
        if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols()) {
            throw ValidationError("checkpoint shape mismatch for '" + p->name + "'");
        }
        p->value = it->second;
    }
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kCkptMagic, sizeof(kCkptMagic));
    auto write_pod = [&](const auto& v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    write_pod(kCkptVersion);
    json meta = config.to_json();
    meta["epoch"] = epoch;
    meta["val_dsc"] = val_dsc;
    const std::string meta_str = meta.dump();
    const std::uint64_t meta_len = meta_str.size();
    write_pod(meta_len);
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    const std::uint64_t count = state.size();
    write_pod(count);
    for (const auto& [name, value] : state) {
        const std::uint32_t name_len = static_cast<std::uint32_t>(name.size());
        write_pod(name_len);
        out.write(name.data(), name_len);
        const std::uint64_t rows = static_cast<std::uint64_t>(value.rows());
        const std::uint64_t cols = static_cast<std::uint64_t>(value.cols());
        write_pod(rows);
        write_pod(cols);
        for (Eigen::Index i = 0; i < value.rows(); ++i) {
            for (Eigen::Index j = 0; j < value.cols(); ++j) {
                const double d = value(i, j);
                write_pod(d);
            }
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0) {
        throw IoError("bad checkpoint magic in " + path.string());
    }
    auto read_pod = [&](auto& v) {
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw IoError("truncated checkpoint " + path.string());
    };
    std::uint32_t version = 0;
    read_pod(version);
    if (version != kCkptVersion) throw IoError("unsupported checkpoint version");
    std::uint64_t meta_len = 0;
    read_pod(meta_len);
    std::string meta_str(meta_len, '\0');
    in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
    const json meta = json::parse(meta_str, nullptr, false);
    if (meta.is_discarded()) throw IoError("corrupt checkpoint metadata");
    Checkpoint ckpt;
    ckpt.config = TrainConfig::from_json(meta);
    ckpt.epoch = meta.value("epoch", -1);
    ckpt.val_dsc = meta.value("val_dsc", 0.0);
    std::uint64_t count = 0;
    read_pod(count);
    for (std::uint64_t p = 0; p < count; ++p) {
        std::uint32_t name_len = 0;
        read_pod(name_len);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        std::uint64_t rows = 0, cols = 0;
        read_pod(rows);
        read_pod(cols);
        Mat value(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::uint64_t i = 0; i < rows; ++i) {
            for (std::uint64_t j = 0; j < cols; ++j) {
                double d;
                read_pod(d);
                value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
            }
        }
        ckpt.state.emplace(std::move(name), std::move(value));
    }
    return ckpt;
}

// ---------------------------------------------------------------------------
// Evaluation

Confusion evaluate_confusion(SegModel& model, const std::vector<CellCloud>& set) {
    Confusion total = Confusion::Zero();
    for (const CellCloud& cloud : set) {
        if (!cloud.has_labels()) {
            throw ValidationError("evaluation cloud without labels");
        }
        const std::vector<int> pred = model.predict(cloud);
        total += confusion_matrix(cloud.labels, pred);
    }
    return total;
}

double evaluate_dsc(SegModel& model, const std::vector<CellCloud>& set) {
    return compute_report(evaluate_confusion(model, set)).dsc;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const TrainConfig& cfg, const std::vector<CellCloud>& train_set,
                  const std::vector<CellCloud>& val_set, const TrainOptions& options) {
    cfg.validate();
    if (train_set.empty()) throw ValidationError("empty training set");
    if (val_set.empty()) throw ValidationError("empty validation set");
    for (const CellCloud& c : train_set) {
        if (!c.has_labels()) throw ValidationError("training cloud without labels");
    }

    Rng root(cfg.seed);
    Rng init_rng = root.fork(1);
    Rng shuffle_rng = root.fork(2);
    Rng dropout_rng = root.fork(3);

    SegModel model(cfg.model, init_rng);
    std::vector<Parameter*> params = model.parameters();
    Adam adam(params, cfg.lr, cfg.weight_decay);
    const std::vector<double>* weights = cfg.class_weights.empty() ? nullptr : &cfg.class_weights;

    TrainResult result;
    double best_dsc = -1.0;

    std::vector<int> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates shuffle off the dedicated stream.
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
            std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
        }

        double loss_sum = 0.0;
        int batch_id = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size, ++batch_id) {
            const int count =
                static_cast<int>(std::min<std::size_t>(cfg.batch_size, order.size() - at));
            adam.zero_grad();
            for (int b = 0; b < count; ++b) {
                const CellCloud& cloud = train_set[order[at + b]];
                Tape tape;
                Var feats = tape.constant(slice_features(cloud, cfg.model.ablation));
                Var logits =
                    model.forward(tape, feats, cloud.barycenters, true, &dropout_rng);
                Var loss = cross_entropy_with_logits(tape, logits, cloud.labels, weights);
                Var scaled = scale(tape, loss, 1.0 / count);
                const double value = loss->value(0, 0);
                if (!std::isfinite(value)) {
                    std::string diag = "non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(batch_id) + "; grad norms:";
                    for (Parameter* p : params) {
                        diag += " " + p->name + "=" + std::to_string(p->grad.norm());
                    }
                    throw TrainingError(diag);
                }
                loss_sum += value;
                tape.backward(scaled);
            }
            if (cfg.grad_clip > 0.0) {
                double norm2 = 0.0;
                for (Parameter* p : params) norm2 += p->grad.squaredNorm();
                const double norm = std::sqrt(norm2);
                if (norm > cfg.grad_clip) {
                    const double s = cfg.grad_clip / norm;
                    for (Parameter* p : params) p->grad *= s;
                }
            }
            adam.step();
        }

        EpochLog log;
        log.epoch = epoch;
        log.mean_loss = loss_sum / static_cast<double>(train_set.size());
        log.val_dsc = evaluate_dsc(model, val_set);
        result.log.push_back(log);
        if (options.on_epoch) options.on_epoch(log);

        if (log.val_dsc > best_dsc) {
            best_dsc = log.val_dsc;
            result.best = Checkpoint::capture(cfg, model, epoch, log.val_dsc);
        }
    }
    return result;
}

} // namespace bmseg
