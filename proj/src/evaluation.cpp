#include "devae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <sstream>

#include "devae/errors.hpp"

namespace devae {

LatentBatch encode_rows(const Model& model, const Matrix& X, std::span<const std::size_t> rows) {
    NoGradGuard no_grad;
    return model.encode(rows_to_tensor(X, rows));
}

PerSampleLosses per_sample_losses(const Model& model, const Matrix& X, const Matrix& Y,
                                  std::span<const std::size_t> rows, std::size_t chunk) {
    if (chunk == 0) throw ContractError("evaluation chunk size must be positive");
    if (X.cols != model.config().input_dim) {
        throw DimensionError("model expects " + std::to_string(model.config().input_dim) + "-dimensional samples, data has " +
                             std::to_string(X.cols));
    }
    NoGradGuard no_grad;
    const auto& cfg = model.config();
    PerSampleLosses out;
    for (std::size_t start = 0; start < rows.size(); start += chunk) {
        const auto part = rows.subspan(start, std::min(chunk, rows.size() - start));
        const Tensor x = rows_to_tensor(X, part);
        const LatentBatch lat = model.encode(x);
        const Tensor x_hat = model.decode(lat.mu);
        const std::size_t d = x.cols();
        const auto xv = x.values();
        const auto hv = x_hat.values();
        const auto mv = lat.mu.values();
        for (std::size_t i = 0; i < part.size(); ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double t = xv[i * d + j];
                const double p = hv[i * d + j];
                if (cfg.recon == ReconKind::mse) {
                    r += (t - p) * (t - p);
                } else {
                    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("binary cross-entropy target outside [0,1]");
                    const double pc = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
                    r -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
                }
            }
            double pr = 0.0;
            for (std::size_t j = 0; j < cfg.latent_dim; ++j) {
                const double diff = Y.at(part[i], j) - mv[i * cfg.latent_dim + j];
                pr += diff * diff;
            }
            out.recon.push_back(r);
            out.proj.push_back(pr);
            out.ent.push_back(lat.head == Head::none ? 0.0 : -entropy(lat.at(i)));
        }
    }
    return out;
}

LossBreakdown evaluate_rows(const Model& model, const Matrix& X, const Matrix& Y,
                            std::span<const std::size_t> rows, std::size_t chunk) {
    if (rows.empty()) throw DataError("cannot evaluate an empty split");
    const auto per = per_sample_losses(model, X, Y, rows, chunk);
    auto avg = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    return total_loss(avg(per.recon), avg(per.proj), avg(per.ent), model.config().weights);
}

LossBreakdown evaluate(const Model& model, const DatasetBundle& data, Split split, std::size_t chunk) {
    const auto rows = data.indices(split);
    if (rows.empty()) throw DataError("split '" + to_string(split) + "' is empty");
    return evaluate_rows(model, data.X, data.Y, rows, chunk);
}

std::vector<Medoid> class_medoid(const Matrix& points, std::span<const int> labels) {
    if (points.cols != 2) throw DimensionError("medoids are computed on 2-D points");
    if (labels.size() != points.rows) throw DimensionError("label count does not match point count");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    std::vector<Medoid> out;
    for (const auto& [label, idx] : members) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = idx.front();
        for (std::size_t a : idx) {
            double s = 0.0;
            for (std::size_t b : idx) {
                s += std::hypot(points.at(a, 0) - points.at(b, 0), points.at(a, 1) - points.at(b, 1));
            }
            if (s < best) {  // strict: earlier index wins ties
                best = s;
                best_i = a;
            }
        }
        out.push_back({label, best_i, {points.at(best_i, 0), points.at(best_i, 1)}});
    }
    return out;
}

std::vector<ClassEllipses> class_ellipses(const Model& model, const Matrix& X, std::span<const int> labels,
                                          std::span<const int> k_list, bool average_class_covariance) {
    if (model.config().head == Head::none) {
        throw UnsupportedHeadError("head 'none' predicts no covariance to draw");
    }
    if (labels.size() != X.rows) throw DimensionError("label count does not match sample count");
    std::vector<std::size_t> rows(X.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const LatentBatch lat = encode_rows(model, X, rows);
    const Matrix mu = to_matrix(lat.mu);

    std::vector<ClassEllipses> out;
    for (const auto& m : class_medoid(mu, labels)) {
        Mat2 cov{};
        if (average_class_covariance) {
            std::size_t count = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] != m.label) continue;
                const Mat2 c = covariance_matrix(lat.at(i));
                for (int r = 0; r < 2; ++r) {
                    for (int s = 0; s < 2; ++s) cov[r][s] += c[r][s];
                }
                ++count;
            }
            for (auto& r : cov) {
                for (auto& v : r) v /= static_cast<double>(count);
            }
        } else {
            cov = covariance_matrix(lat.at(m.index));
        }
        ClassEllipses ce{m, {}};
        for (int k : k_list) ce.ellipses.push_back(ellipse_from_cov(m.point, cov, k));
        out.push_back(std::move(ce));
    }
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw ContractError("mean_std of an empty sample");
    MeanStd r;
    for (double v : values) r.mean += v;
    r.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return r;
}

std::string MetricsTable::to_json() const {
    nlohmann::ordered_json j;
    j["dataset"] = dataset;
    auto& heads = j["heads"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json h;
        h["head"] = to_string(r.head);
        h["n_runs"] = r.n_runs;
        h["proj_loss"] = {{"mean", r.proj.mean}, {"std", r.proj.std}};
        h["recon_loss"] = {{"mean", r.recon.mean}, {"std", r.recon.std}};
        h["epochs"] = {{"mean", r.epochs.mean}, {"std", r.epochs.std}};
        heads.push_back(std::move(h));
    }
    return j.dump(2);
}

std::string MetricsTable::to_text() const {
    auto cell = [](const MeanStd& m) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g +- %.3g", m.mean, m.std);
        return std::string(buf);
    };
    std::size_t label_w = dataset.size();
    std::size_t col_w = 10;
    for (const auto& r : rows) {
        col_w = std::max({col_w, to_string(r.head).size(), cell(r.proj).size(), cell(r.recon).size(),
                          cell(r.epochs).size()});
    }
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    std::ostringstream os;
    os << pad("", label_w);
    for (const auto& r : rows) os << "  " << pad(to_string(r.head), col_w);
    os << '\n';
    const std::pair<const char*, MeanStd MetricsRow::*> blocks[] = {
        {"Projection loss (test)", &MetricsRow::proj},
        {"Reconstruction loss (test)", &MetricsRow::recon},
        {"Training epochs", &MetricsRow::epochs},
    };
    for (const auto& [title, field] : blocks) {
        os << "-- " << title << " --\n";
        os << pad(dataset, label_w);
        for (const auto& r : rows) os << "  " << pad(cell(r.*field), col_w);
        os << '\n';
    }
    return os.str();
}

}  // namespace devae
