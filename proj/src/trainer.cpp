#include "devae/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <json.hpp>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "devae/errors.hpp"
#include "devae/random.hpp"

namespace devae {

void TrainSettings::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ContractError("learning rate must be positive");
    if (batch_size == 0) throw ContractError("batch size must be positive");
    if (max_epochs <= 0) throw ContractError("max_epochs must be positive");
    if (patience <= 0) throw ContractError("patience must be positive");
    if (patience > max_epochs) throw ContractError("patience must not exceed max_epochs");
}

// --- Adam ------------------------------------------------------------------------

AdamState::AdamState(std::span<const Tensor> params) {
    for (const auto& p : params) {
        m_.emplace_back(p.numel(), 0.0);
        v_.emplace_back(p.numel(), 0.0);
    }
}

void adam_step(std::span<Tensor> params, std::span<const std::vector<double>> grads, AdamState& state,
               double lr) {
    if (grads.size() != params.size()) throw DimensionError("adam_step: gradient count does not match parameters");
    if (state.m_.empty() && state.t_ == 0) state = AdamState(params);
    if (state.m_.size() != params.size()) throw DimensionError("adam_step: optimizer state does not match parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (grads[k].size() != params[k].numel() || state.m_[k].size() != params[k].numel()) {
            throw DimensionError("adam_step: shape mismatch for parameter " + std::to_string(k) + " " +
                                 shape_str(params[k].shape()));
        }
        for (double g : grads[k]) {
            if (!std::isfinite(g)) throw DivergenceError("non-finite gradient for parameter " + std::to_string(k));
        }
    }
    ++state.t_;
    const double t = static_cast<double>(state.t_);
    const double c1 = 1.0 - std::pow(AdamState::kBeta1, t);
    const double c2 = 1.0 - std::pow(AdamState::kBeta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto theta = params[k].mutable_values();
        auto& m = state.m_[k];
        auto& v = state.v_[k];
        const auto& g = grads[k];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = AdamState::kBeta1 * m[i] + (1.0 - AdamState::kBeta1) * g[i];
            v[i] = AdamState::kBeta2 * v[i] + (1.0 - AdamState::kBeta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            theta[i] -= lr * m_hat / (std::sqrt(v_hat) + AdamState::kEpsilon);
        }
    }
}

void adam_step(std::span<Tensor> params, AdamState& state, double lr) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (const auto& p : params) {
        if (p.has_grad()) {
            grads.emplace_back(p.grad().begin(), p.grad().end());
        } else {
            grads.emplace_back(p.numel(), 0.0);
        }
    }
    adam_step(params, grads, state, lr);
}

// --- splits and early stopping ------------------------------------------------------

std::vector<Split> split_dataset(std::size_t n, std::uint64_t seed) {
    if (n < 10) throw DataError("dataset too small to split: " + std::to_string(n) + " rows, need at least 10");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(seed, SeedStream::split);
    // Fisher-Yates with an explicit draw so the result does not depend on the
    // standard library's shuffle.
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    const std::size_t tenth = n / 10;
    const std::size_t n_train = n - 2 * tenth;
    std::vector<Split> out(n, Split::train);
    for (std::size_t r = n_train; r < n_train + tenth; ++r) out[order[r]] = Split::val;
    for (std::size_t r = n_train + tenth; r < n; ++r) out[order[r]] = Split::test;
    return out;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
    if (patience <= 0) throw ContractError("patience must be positive");
}

bool EarlyStopping::update(double val_total) {
    ++epoch_;
    if (val_total < best_) {
        best_ = val_total;
        best_epoch_ = epoch_;
        since_best_ = 0;
        return true;
    }
    ++since_best_;
    return false;
}

// --- report ----------------------------------------------------------------------------

namespace {

nlohmann::ordered_json breakdown_json(const LossBreakdown& b) {
    nlohmann::ordered_json j;
    j["recon"] = b.recon;
    j["proj"] = b.proj;
    j["ent"] = b.ent;
    j["total"] = b.total;
    return j;
}

}  // namespace

std::string TrainReport::to_json(bool include_timing) const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["config"] = nlohmann::ordered_json::parse(config.to_text());
    j["settings"] = {{"learning_rate", settings.learning_rate},
                     {"batch_size", settings.batch_size},
                     {"max_epochs", settings.max_epochs},
                     {"patience", settings.patience},
                     {"seed", settings.seed}};
    j["epochs_run"] = epochs_run;
    j["best_epoch"] = best_epoch;
    j["best_val_total"] = best_val_total;
    if (include_timing) j["wall_seconds"] = wall_seconds;
    auto& hist = j["epochs"] = nlohmann::ordered_json::array();
    for (const auto& e : epochs) {
        nlohmann::ordered_json r;
        r["epoch"] = e.epoch;
        r["train"] = breakdown_json(e.train);
        r["val"] = breakdown_json(e.val);
        hist.push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

// --- training ----------------------------------------------------------------------------

TrainResult train(const Model& initial, const DatasetBundle& data, const TrainSettings& settings,
                  const TrainHooks& hooks) {
    settings.validate();
    data.validate();
    const auto& cfg = initial.config();
    if (data.X.cols != cfg.input_dim) {
        throw DimensionError("model expects " + std::to_string(cfg.input_dim) + "-dimensional samples, data has " +
                             std::to_string(data.X.cols));
    }
    if (cfg.latent_dim != data.Y.cols) {
        throw DimensionError("latent dimension " + std::to_string(cfg.latent_dim) +
                             " does not match projection dimension " + std::to_string(data.Y.cols));
    }
    std::vector<std::size_t> train_rows = data.indices(Split::train);
    if (train_rows.empty()) throw DataError("training split is empty");
    if (data.indices(Split::val).empty()) throw DataError("validation split is empty");

    const auto started = std::chrono::steady_clock::now();
    Model model = initial;
    Model best = initial;
    auto params = model.parameters();
    AdamState adam(params);
    EarlyStopping stopper(settings.patience);
    Rng shuffle_rng = make_rng(settings.seed, SeedStream::shuffle);
    Rng noise_rng = make_rng(settings.seed, SeedStream::noise);
    std::normal_distribution<double> normal(0.0, 1.0);

    TrainReport report;
    report.seed = settings.seed;
    report.config = cfg;
    report.settings = settings;

    const std::size_t q = cfg.latent_dim;
    for (int epoch = 1; epoch <= settings.max_epochs; ++epoch) {
        for (std::size_t i = train_rows.size() - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng() % (i + 1));
            std::swap(train_rows[i], train_rows[j]);
        }

        LossBreakdown acc;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < train_rows.size(); start += settings.batch_size, ++batch_index) {
            const std::span<const std::size_t> rows(train_rows.data() + start,
                                                    std::min(settings.batch_size, train_rows.size() - start));
            const Tensor x = rows_to_tensor(data.X, rows);
            const Tensor y = rows_to_tensor(data.Y, rows);
            std::vector<double> eps(rows.size() * q, 0.0);
            if (cfg.head != Head::none) {
                for (auto& e : eps) e = normal(noise_rng);
            }
            try {
                const ForwardResult fr = forward_train(model, x, y, Tensor({rows.size(), q}, std::move(eps)));
                for (auto& p : params) p.zero_grad();
                fr.total.backward();
                adam_step(params, adam, settings.learning_rate);
                const double w = static_cast<double>(rows.size());
                acc.recon += w * fr.losses.recon;
                acc.proj += w * fr.losses.proj;
                acc.ent += w * fr.losses.ent;
            } catch (const DivergenceError& e) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batch_index + 1) + ": " + e.what());
            }
        }
        const double n_train = static_cast<double>(train_rows.size());
        EpochRecord rec;
        rec.epoch = epoch;
        try {
            rec.train = total_loss(acc.recon / n_train, acc.proj / n_train, acc.ent / n_train, cfg.weights);
            rec.val = evaluate(model, data, Split::val);
        } catch (const DivergenceError& e) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (hooks.validation_override) rec.val.total = hooks.validation_override(epoch, rec.val.total);
        report.epochs.push_back(rec);

        if (stopper.update(rec.val.total)) best.copy_parameters_from(model);
        if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
        if (stopper.should_stop()) break;
    }
    report.epochs_run = static_cast<int>(report.epochs.size());
    report.best_epoch = stopper.best_epoch();
    report.best_val_total = stopper.best();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(best), std::move(report)};
}

// --- run matrix --------------------------------------------------------------------------

MetricsTable run_matrix(const DatasetBundle& data, std::span<const Head> heads, int n_seeds,
                        const ModelConfig& base_config, const TrainSettings& settings, unsigned threads,
                        std::vector<RunOutcome>* outcomes) {
    if (n_seeds < 1) throw ContractError("run_matrix needs at least one seed");
    if (heads.empty()) throw ContractError("run_matrix needs at least one head");
    const std::size_t n_runs = heads.size() * static_cast<std::size_t>(n_seeds);
    std::vector<RunOutcome> results(n_runs);
    std::vector<std::exception_ptr> errors(n_runs);

    auto run_one = [&](std::size_t job) {
        const Head head = heads[job / static_cast<std::size_t>(n_seeds)];
        const std::uint64_t seed = settings.seed + job % static_cast<std::size_t>(n_seeds);
        try {
            ModelConfig cfg = base_config;
            cfg.head = head;
            cfg.seed = seed;
            TrainSettings s = settings;
            s.seed = seed;
            auto [model, report] = train(Model(cfg), data, s);
            results[job] = {head, seed, evaluate(model, data, Split::test), report.epochs_run};
        } catch (const DivergenceError& e) {
            errors[job] = std::make_exception_ptr(
                DivergenceError("head " + to_string(head) + ", seed " + std::to_string(seed) + ": " + e.what()));
        } catch (...) {
            errors[job] = std::current_exception();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_runs)));
    if (workers == 1) {
        for (std::size_t j = 0; j < n_runs; ++j) run_one(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < n_runs; j = next++) run_one(j);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    MetricsTable table;
    table.dataset = data.name;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        std::vector<double> proj, recon, epochs;
        for (int s = 0; s < n_seeds; ++s) {
            const auto& r = results[h * static_cast<std::size_t>(n_seeds) + static_cast<std::size_t>(s)];
            proj.push_back(r.test.proj);
            recon.push_back(r.test.recon);
            epochs.push_back(r.epochs_run);
        }
        table.rows.push_back({heads[h], mean_std(proj), mean_std(recon), mean_std(epochs),
                              static_cast<std::size_t>(n_seeds)});
    }
    if (outcomes) *outcomes = std::move(results);
    return table;
}

}  // namespace devae
