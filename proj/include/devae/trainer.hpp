#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "devae/data.hpp"
#include "devae/evaluation.hpp"
#include "devae/losses.hpp"
#include "devae/model.hpp"

namespace devae {

struct TrainSettings {
    double learning_rate = 0.001;
    std::size_t batch_size = 64;
    int max_epochs = 100;
    int patience = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class AdamState {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

    AdamState() = default;
    explicit AdamState(std::span<const Tensor> params);

    std::uint64_t step_count() const { return t_; }
    const std::vector<std::vector<double>>& first_moment() const { return m_; }
    const std::vector<std::vector<double>>& second_moment() const { return v_; }

private:
    friend void adam_step(std::span<Tensor>, std::span<const std::vector<double>>, AdamState&, double);
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::uint64_t t_ = 0;
};

// One bias-corrected Adam update, in place. Throws DimensionError on shape
// mismatch and DivergenceError on a non-finite gradient.
void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state,
               double lr);
// Same, taking each parameter's accumulated grad (missing grad = zeros).
void adam_step(std::span<Tensor> params, AdamState& state, double lr);

// Seeded shuffle, then 80% train / 10% val / 10% test; floor division with
// the remainder joining train. DataError for n < 10.
std::vector<Split> split_dataset(std::size_t n, std::uint64_t seed);

// Patience counter over validation totals; "improved" means strictly lower.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);

    // Feeds the total for the next epoch; returns true on improvement.
    bool update(double val_total);
    bool should_stop() const { return since_best_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best() const { return best_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    int since_best_ = 0;
    double best_;
};

struct EpochRecord {
    int epoch = 0;
    LossBreakdown train;
    LossBreakdown val;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int epochs_run = 0;
    int best_epoch = 0;
    double best_val_total = 0.0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
    ModelConfig config;
    TrainSettings settings;

    // Stable key names. Wall time is left out unless requested so that the
    // document is reproducible byte for byte.
    std::string to_json(bool include_timing = false) const;
};

struct TrainHooks {
    // Replaces the computed validation total for an epoch (1-based).
    std::function<double(int epoch, double computed)> validation_override;
    std::function<void(int epoch, const Model& model)> on_epoch_end;
};

struct TrainResult {
    Model model;  // weights from the best validation epoch
    TrainReport report;
};

// Per epoch: shuffle train rows, forward_train/backward/adam_step per batch,
// then an eps-free pass over the validation split. Stops at max_epochs or
// when patience runs out. DivergenceError names the epoch and batch.
TrainResult train(const Model& initial, const DatasetBundle& data, const TrainSettings& settings,
                  const TrainHooks& hooks = {});

struct RunOutcome {
    Head head = Head::none;
    std::uint64_t seed = 0;
    LossBreakdown test;
    int epochs_run = 0;
};

// Trains every head with seeds base, base+1, ... (model and training seed
// alike) and summarizes test losses and epochs. Up to `threads` runs are in
// flight at once; results do not depend on the thread count.
MetricsTable run_matrix(const DatasetBundle& data, std::span<const Head> heads, int n_seeds,
                        const ModelConfig& base_config, const TrainSettings& settings, unsigned threads = 1,
                        std::vector<RunOutcome>* outcomes = nullptr);

}  // namespace devae
