#include "devae/gradient_suite.hpp"

#include "devae/gradcheck.hpp"
#include "devae/losses.hpp"
#include "devae/random.hpp"

namespace devae {

std::vector<GradientCase> run_gradient_suite(std::uint64_t seed) {
    constexpr std::size_t batch = 4, d = 6, q = 2;
    Rng rng = make_rng(seed, SeedStream::noise);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> wide(-2.0, 2.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> xv(batch * d), yv(batch * q), ev(batch * q);
    for (auto& v : xv) v = unit(rng);
    for (auto& v : yv) v = wide(rng);
    for (auto& v : ev) v = normal(rng);
    const Tensor x({batch, d}, xv), y({batch, q}, yv), eps({batch, q}, ev);

    std::vector<GradientCase> out;
    for (ReconKind recon : {ReconKind::mse, ReconKind::bce}) {
        for (Head head : {Head::none, Head::isotropic, Head::diagonal, Head::full}) {
            ModelConfig cfg;
            cfg.input_dim = d;
            cfg.latent_dim = q;
            cfg.encoder_widths = {8, 7};
            cfg.decoder_widths = {7, 8};
            cfg.head = head;
            cfg.recon = recon;
            cfg.weights = {5.0, 0.5};
            cfg.seed = seed;
            const Model model(cfg);
            auto params = model.parameters();

            const std::pair<const char*, Tensor ForwardResult::*> parts[] = {
                {"recon", &ForwardResult::recon},
                {"proj", &ForwardResult::proj},
                {"ent", &ForwardResult::ent},
                {"total", &ForwardResult::total},
            };
            for (const auto& [name, member] : parts) {
                auto loss = [&, member = member] { return forward_train(model, x, y, eps).*member; };
                const auto r = check_gradients(loss, params, kGradStep);
                out.push_back({head, recon, name, r.max_relative_error, r.checked});
            }
        }
    }
    return out;
}

}  // namespace devae
