#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "bmseg/metrics.hpp"
#include "bmseg/model.hpp"

namespace bmseg {

// Aborted optimization (non-finite loss) with a diagnostics payload.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    double lr = 1e-3;
    int epochs = 800;
    int batch_size = 24;
    std::uint64_t seed = 1;
    ModelConfig model;
    // Off by default; available for experiments.
    double weight_decay = 0.0;
    double grad_clip = 0.0;                // 0 = no clipping
    std::vector<double> class_weights;     // empty = unweighted CE

    void validate() const;
    // Scaled-down recipe for desk hardware: 1024 cells, 60 epochs, batch 4.
    static TrainConfig desk_preset();

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

class Adam {
public:
    Adam(std::vector<nn::Parameter*> params, double lr, double weight_decay = 0.0,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step();
    void zero_grad();
    void set_lr(double lr) { lr_ = lr; }

private:
    std::vector<nn::Parameter*> params_;
    std::vector<nn::Mat> m_, v_;
    double lr_, weight_decay_, beta1_, beta2_, eps_;
    long t_ = 0;
};

// Model parameters + metadata, round-tripping bit-exactly through the
// versioned container on disk.
struct Checkpoint {
    TrainConfig config;
    int epoch = -1;
    double val_dsc = 0.0;
    std::map<std::string, nn::Mat> state;

    static Checkpoint capture(const TrainConfig& cfg, SegModel& model, int epoch,
                              double val_dsc);
    void apply_to(SegModel& model) const;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double val_dsc = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
};

struct TrainOptions {
    std::function<void(const EpochLog&)> on_epoch; // e.g. JSONL logging
};

// Pooled confusion over a set of clouds using eval-mode argmax predictions.
Confusion evaluate_confusion(SegModel& model, const std::vector<CellCloud>& set);
double evaluate_dsc(SegModel& model, const std::vector<CellCloud>& set);

// Shuffled mini-batches, per-cell CE, Adam steps; after every epoch the
// validation DSC is computed and the best-scoring parameters are retained
// (first epoch wins ties). Deterministic given cfg.seed.
TrainResult train(const TrainConfig& cfg, const std::vector<CellCloud>& train_set,
                  const std::vector<CellCloud>& val_set, const TrainOptions& options = {});

} // namespace bmseg
