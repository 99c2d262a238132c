#pragma once

#include <functional>
#include <span>
#include <vector>

#include "devae/tensor.hpp"

namespace devae {

// Central differences (f(p+h) - f(p-h)) / 2h for every scalar in `params`.
// `f` must be deterministic; parameters are perturbed in place and restored.
std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& f,
                                                  std::span<Tensor> params, double step);

// Plain-vector variant for scalar functions of a few unknowns.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::vector<double> point, double step);

// |a - n| / max(|a|, |n|, floor). The floor keeps gradients that are zero up
// to round-off from reporting huge relative errors.
double relative_error(double analytic, double numeric, double floor = 1e-7);

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
};

// Zeroes grads, runs loss().backward(), then compares every parameter's
// analytic gradient with finite_diff_grad.
GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::span<Tensor> params,
                                double step = 1e-5, double floor = 1e-7);

}  // namespace devae
