#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "devae/gaussian.hpp"
#include "devae/model.hpp"

namespace devae {

struct GradientCase {
    Head head = Head::none;
    ReconKind recon = ReconKind::mse;
    std::string component;  // recon, proj, ent or total
    double max_relative_error = 0.0;
    std::size_t checked = 0;
};

inline constexpr double kGradStep = 1e-5;
inline constexpr double kGradTolerance = 1e-4;

// Analytic vs central-difference gradients of every loss term and of the
// weighted total on a 4-sample batch through a small 2-hidden-layer model,
// for every head and both reconstruction losses.
std::vector<GradientCase> run_gradient_suite(std::uint64_t seed);

}  // namespace devae
