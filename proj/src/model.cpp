#include "devae/model.hpp"

#include <algorithm>
#include <json.hpp>

#include "devae/errors.hpp"

namespace devae {

std::string to_string(ReconKind r) { return r == ReconKind::bce ? "bce" : "mse"; }

ReconKind recon_from_string(const std::string& s) {
    if (s == "mse") return ReconKind::mse;
    if (s == "bce") return ReconKind::bce;
    throw ContractError("unknown reconstruction loss '" + s + "' (expected mse or bce)");
}

void ModelConfig::validate() const {
    if (input_dim == 0) throw ContractError("input_dim must be positive");
    if (latent_dim == 0) throw ContractError("latent_dim must be positive");
    for (auto w : encoder_widths) {
        if (w == 0) throw ContractError("encoder widths must be positive");
    }
    for (auto w : decoder_widths) {
        if (w == 0) throw ContractError("decoder widths must be positive");
    }
    weights.validate();
}

std::string ModelConfig::to_text() const {
    nlohmann::json j;
    j["input_dim"] = input_dim;
    j["latent_dim"] = latent_dim;
    j["encoder_widths"] = encoder_widths;
    j["decoder_widths"] = decoder_widths;
    j["head"] = to_string(head);
    j["recon"] = to_string(recon);
    j["lambda_proj"] = weights.lambda_proj;
    j["lambda_ent"] = weights.lambda_ent;
    j["seed"] = seed;
    return j.dump();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
    ModelConfig c;
    try {
        const auto j = nlohmann::json::parse(text);
        c.input_dim = j.at("input_dim").get<std::size_t>();
        c.latent_dim = j.at("latent_dim").get<std::size_t>();
        c.encoder_widths = j.at("encoder_widths").get<std::vector<std::size_t>>();
        c.decoder_widths = j.at("decoder_widths").get<std::vector<std::size_t>>();
        c.head = head_from_string(j.at("head").get<std::string>());
        c.recon = recon_from_string(j.at("recon").get<std::string>());
        c.weights.lambda_proj = j.at("lambda_proj").get<double>();
        c.weights.lambda_ent = j.at("lambda_ent").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("malformed model config: ") + e.what());
    }
    c.validate();
    return c;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    Rng rng = make_rng(config_.seed, SeedStream::init);
    std::size_t in = config_.input_dim;
    for (auto w : config_.encoder_widths) {
        encoder_.push_back(DenseLayer::init(in, w, Activation::relu, rng));
        in = w;
    }
    mu_head_ = DenseLayer::init(in, config_.latent_dim, Activation::identity, rng);
    if (config_.head != Head::none) {
        cov_head_ = DenseLayer::init(in, head_param_count(config_.head, config_.latent_dim),
                                     Activation::identity, rng);
    }
    in = config_.latent_dim;
    for (auto w : config_.decoder_widths) {
        decoder_.push_back(DenseLayer::init(in, w, Activation::relu, rng));
        in = w;
    }
    decoder_.push_back(DenseLayer::init(
        in, config_.input_dim, config_.recon == ReconKind::bce ? Activation::sigmoid : Activation::identity,
        rng));
}

Model::Model(const Model& other) : Model(other.config_) { copy_parameters_from(other); }

Model& Model::operator=(const Model& other) {
    if (this != &other) {
        Model tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

LatentBatch Model::encode(const Tensor& x) const {
    if (x.rank() != 2 || x.cols() != config_.input_dim) {
        throw DimensionError("model expects input [batch, " + std::to_string(config_.input_dim) + "], got " +
                             shape_str(x.shape()));
    }
    Tensor h = x;
    for (const auto& layer : encoder_) h = forward_dense(layer, h);
    LatentBatch out;
    out.head = config_.head;
    out.mu = forward_dense(mu_head_, h);
    if (cov_head_) {
        Tensor params = forward_dense(*cov_head_, h);
        if (config_.head == Head::full) {
            out.chol_raw = params;
        } else {
            out.log_var = params;
        }
    }
    return out;
}

Tensor Model::decode(const Tensor& z) const {
    if (z.rank() != 2 || z.cols() != config_.latent_dim) {
        throw DimensionError("decoder expects latent [batch, " + std::to_string(config_.latent_dim) + "], got " +
                             shape_str(z.shape()));
    }
    Tensor h = z;
    for (const auto& layer : decoder_) h = forward_dense(layer, h);
    return h;
}

std::vector<Tensor> Model::parameters() const {
    std::vector<Tensor> p;
    auto add = [&p](const DenseLayer& l) {
        p.push_back(l.weight);
        p.push_back(l.bias);
    };
    for (const auto& l : encoder_) add(l);
    add(mu_head_);
    if (cov_head_) add(*cov_head_);
    for (const auto& l : decoder_) add(l);
    return p;
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : parameters()) n += t.numel();
    return n;
}

void Model::copy_parameters_from(const Model& other) {
    auto mine = parameters();
    const auto theirs = other.parameters();
    if (mine.size() != theirs.size()) throw DimensionError("models have different topologies");
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (mine[i].shape() != theirs[i].shape()) throw DimensionError("models have different topologies");
        std::ranges::copy(theirs[i].values(), mine[i].mutable_values().begin());
    }
}

Tensor recon_loss(ReconKind kind, const Tensor& x, const Tensor& x_hat) {
    return kind == ReconKind::bce ? recon_bce(x, x_hat) : recon_mse(x, x_hat);
}

ForwardResult forward_train(const Model& model, const Tensor& x, const Tensor& y, const Tensor& eps) {
    const auto& cfg = model.config();
    if (y.rank() != 2 || y.rows() != x.rows() || y.cols() != cfg.latent_dim) {
        throw DimensionError("projection targets " + shape_str(y.shape()) + " do not align with input " +
                             shape_str(x.shape()));
    }
    ForwardResult r;
    r.latents = model.encode(x);
    const Tensor z = sample(r.latents, eps);
    r.x_hat = model.decode(z);
    r.recon = recon_loss(cfg.recon, x, r.x_hat);
    r.proj = proj_loss(y, r.latents.mu);
    r.ent = ent_loss(r.latents);
    r.losses = total_loss(r.recon.item(), r.proj.item(), r.ent.item(), cfg.weights);
    r.total = r.recon + scale(r.proj, cfg.weights.lambda_proj) + scale(r.ent, cfg.weights.lambda_ent);
    return r;
}

}  // namespace devae
