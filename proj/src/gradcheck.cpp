#include "devae/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "devae/errors.hpp"

namespace devae {

std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& f,
                                                  std::span<Tensor> params, double step) {
    if (!(step > 0.0)) throw ContractError("finite difference step must be positive");
    std::vector<std::vector<double>> out;
    out.reserve(params.size());
    for (auto& p : params) {
        auto v = p.mutable_values();
        std::vector<double> g(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double orig = v[i];
            v[i] = orig + step;
            const double up = f();
            v[i] = orig - step;
            const double down = f();
            v[i] = orig;
            g[i] = (up - down) / (2.0 * step);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::vector<double> point, double step) {
    if (!(step > 0.0)) throw ContractError("finite difference step must be positive");
    std::vector<double> g(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double orig = point[i];
        point[i] = orig + step;
        const double up = f(point);
        point[i] = orig - step;
        const double down = f(point);
        point[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                double step, double floor) {
    for (auto& p : params) p.zero_grad();
    loss().backward();
    const auto numeric = finite_diff_grad([&] { return loss().item(); }, params, step);

    GradCheckResult r;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto g = params[k].grad();
        for (std::size_t i = 0; i < numeric[k].size(); ++i) {
            const double analytic = g.empty() ? 0.0 : g[i];
            const double e = relative_error(analytic, numeric[k][i], floor);
            ++r.checked;
            if (e > r.max_relative_error) {
                r.max_relative_error = e;
                r.worst_param = k;
                r.worst_index = i;
            }
        }
    }
    return r;
}

}  // namespace devae
