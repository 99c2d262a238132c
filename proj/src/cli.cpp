#include "devae/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "devae/data.hpp"
#include "devae/errors.hpp"
#include "devae/evaluation.hpp"
#include "devae/gradient_suite.hpp"
#include "devae/model.hpp"
#include "devae/trainer.hpp"
#include "devae/viz.hpp"

namespace devae {

namespace {

class UsageError : public Error {
public:
    using Error::Error;
};

struct DataArgs {
    std::string data;
    std::string labels;
    std::string proj;
    std::string name;
};

void add_data_args(CLI::App* cmd, DataArgs& a, bool with_proj) {
    cmd->add_option("--data", a.data, "Samples: CSV vectors or IDX images")->required();
    cmd->add_option("--labels", a.labels, "IDX label file (IDX input only)");
    if (with_proj) cmd->add_option("--proj", a.proj, "Projection CSV with columns id,x,y")->required();
}

DatasetBundle load_bundle(const DataArgs& a, std::uint64_t split_seed) {
    auto samples = load_samples(a.data, a.labels);
    DatasetBundle b;
    b.name = a.name.empty() ? std::filesystem::path(a.data).stem().string() : a.name;
    b.X = std::move(samples.X);
    b.labels = std::move(samples.labels);
    b.Y = read_projection_csv(a.proj);
    if (b.Y.rows != b.X.rows) {
        throw DataError("projection has " + std::to_string(b.Y.rows) + " rows but data has " +
                        std::to_string(b.X.rows));
    }
    b.split = split_dataset(b.X.rows, split_seed);
    b.validate();
    return b;
}

void require_dims(const Model& model, const DatasetBundle& data) {
    if (model.config().input_dim != data.X.cols) {
        throw DimensionError("model expects " + std::to_string(model.config().input_dim) +
                             "-dimensional samples, data has " + std::to_string(data.X.cols));
    }
}

bool in_unit_interval(const Matrix& X) {
    return std::all_of(X.values.begin(), X.values.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::vector<Head> parse_heads(const std::string& spec) {
    if (spec == "all") return {Head::none, Head::isotropic, Head::diagonal, Head::full};
    std::vector<Head> heads;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) heads.push_back(head_from_string(item));
    if (heads.empty()) throw UsageError("--heads needs at least one head");
    return heads;
}

// Options shared by train and matrix.
struct ModelArgs {
    std::string head = "full";
    std::string recon = "auto";
    std::optional<double> lambda_proj;
    std::optional<double> lambda_ent;
    std::uint64_t seed = 0;
    std::vector<std::size_t> encoder_widths{512, 128};
    std::vector<std::size_t> decoder_widths{128, 512};
    TrainSettings settings;
};

void add_model_args(CLI::App* cmd, ModelArgs& m, bool with_head) {
    if (with_head) cmd->add_option("--head", m.head, "none | isotropic | diagonal | full");
    cmd->add_option("--recon", m.recon, "mse | bce | auto (bce when every value is in [0,1])");
    cmd->add_option("--lambda-proj", m.lambda_proj, "Projection loss weight (default 20 for BCE)");
    cmd->add_option("--lambda-ent", m.lambda_ent, "Entropy loss weight (default 5 for BCE)");
    cmd->add_option("--seed", m.seed, "Seed for initialization, splits, shuffling and noise");
    cmd->add_option("--encoder-widths", m.encoder_widths, "Hidden encoder widths")->delimiter(',');
    cmd->add_option("--decoder-widths", m.decoder_widths, "Hidden decoder widths")->delimiter(',');
    cmd->add_option("--lr", m.settings.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", m.settings.batch_size, "Mini-batch size");
    cmd->add_option("--max-epochs", m.settings.max_epochs, "Epoch cap");
    cmd->add_option("--patience", m.settings.patience, "Early-stopping patience");
}

ModelConfig build_config(const ModelArgs& m, const DatasetBundle& data) {
    ModelConfig cfg;
    cfg.input_dim = data.X.cols;
    cfg.encoder_widths = m.encoder_widths;
    cfg.decoder_widths = m.decoder_widths;
    cfg.head = head_from_string(m.head);
    cfg.seed = m.seed;
    if (m.recon == "auto") {
        cfg.recon = in_unit_interval(data.X) ? ReconKind::bce : ReconKind::mse;
    } else {
        cfg.recon = recon_from_string(m.recon);
    }
    if (cfg.recon == ReconKind::mse && (!m.lambda_proj || !m.lambda_ent)) {
        throw UsageError("MSE reconstruction needs explicit --lambda-proj and --lambda-ent");
    }
    if (m.lambda_proj) cfg.weights.lambda_proj = *m.lambda_proj;
    if (m.lambda_ent) cfg.weights.lambda_ent = *m.lambda_ent;
    cfg.validate();
    return cfg;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("failed writing '" + path + "'");
}

std::string breakdown_json(const LossBreakdown& b, const std::string& split, std::size_t n) {
    nlohmann::ordered_json j;
    j["split"] = split;
    j["samples"] = n;
    j["recon"] = b.recon;
    j["proj"] = b.proj;
    j["ent"] = b.ent;
    j["total"] = b.total;
    return j.dump(2) + "\n";
}

std::vector<int> labels_for(const DatasetBundle& data, std::span<const std::size_t> rows) {
    std::vector<int> out;
    for (auto r : rows) out.push_back(data.labels ? (*data.labels)[r] : 0);
    return out;
}

std::vector<std::size_t> rows_for(const DatasetBundle& data, const std::string& split) {
    if (split == "all") {
        std::vector<std::size_t> all(data.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }
    const auto rows = data.indices(split_from_string(split));
    if (rows.empty()) throw DataError("split '" + split + "' is empty");
    return rows;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Differential-entropy VAEs for parametric and inverse 2-D projections", "devae"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a Gaussian blob dataset as CSV");
    std::string synth_out;
    std::size_t synth_n = 600, synth_d = 50, synth_k = 3;
    double synth_spread = 0.5;
    std::uint64_t synth_seed = 0;
    synth->add_option("--out", synth_out, "Output CSV")->required();
    synth->add_option("--n", synth_n, "Number of samples");
    synth->add_option("--dims", synth_d, "Dimensions");
    synth->add_option("--blobs", synth_k, "Number of clusters");
    synth->add_option("--spread", synth_spread, "Cluster standard deviation");
    synth->add_option("--seed", synth_seed, "Seed");

    // pca
    auto* pca_cmd = app.add_subcommand("pca", "Project samples onto their top two principal axes");
    DataArgs pca_data;
    std::string pca_out;
    add_data_args(pca_cmd, pca_data, false);
    pca_cmd->add_option("--out", pca_out, "Output projection CSV")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train one model against a projection");
    DataArgs train_data;
    ModelArgs train_model;
    std::string train_ckpt, train_report;
    bool train_timing = false;
    add_data_args(train_cmd, train_data, true);
    add_model_args(train_cmd, train_model, true);
    train_cmd->add_option("--name", train_data.name, "Dataset name for reports");
    train_cmd->add_option("--out", train_ckpt, "Checkpoint path")->required();
    train_cmd->add_option("--report", train_report, "Training report JSON path");
    train_cmd->add_flag("--report-timing", train_timing, "Include wall time in the report");

    // matrix
    auto* matrix_cmd = app.add_subcommand("matrix", "Train every head over several seeds and tabulate test losses");
    DataArgs matrix_data;
    ModelArgs matrix_model;
    int matrix_runs = 10;
    std::string matrix_heads = "all", matrix_json;
    unsigned matrix_threads = 1;
    add_data_args(matrix_cmd, matrix_data, true);
    add_model_args(matrix_cmd, matrix_model, false);
    matrix_cmd->add_option("--name", matrix_data.name, "Dataset name for the table");
    matrix_cmd->add_option("--runs", matrix_runs, "Seeds per head");
    matrix_cmd->add_option("--heads", matrix_heads, "'all' or a comma-separated list of heads");
    matrix_cmd->add_option("--threads", matrix_threads, "Maximum concurrent training runs");
    matrix_cmd->add_option("--json", matrix_json, "Also write the table as JSON");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Report the loss breakdown on one split");
    DataArgs eval_data;
    std::string eval_model, eval_split = "test";
    std::optional<std::uint64_t> eval_seed;
    eval_cmd->add_option("--model", eval_model, "Checkpoint")->required();
    add_data_args(eval_cmd, eval_data, true);
    eval_cmd->add_option("--split", eval_split, "train | val | test | all");
    eval_cmd->add_option("--seed", eval_seed, "Split seed (defaults to the checkpoint's seed)");

    // project
    auto* project_cmd = app.add_subcommand("project", "Write per-sample latent means and covariance parameters");
    DataArgs project_data;
    std::string project_model, project_out;
    project_cmd->add_option("--model", project_model, "Checkpoint")->required();
    add_data_args(project_cmd, project_data, false);
    project_cmd->add_option("--out", project_out, "Output CSV")->required();

    // reconstruct
    auto* recon_cmd = app.add_subcommand("reconstruct", "Decode an evenly spaced grid over the projection");
    std::string recon_model, recon_proj, recon_out;
    std::size_t recon_grid = 5;
    recon_cmd->add_option("--model", recon_model, "Checkpoint")->required();
    recon_cmd->add_option("--proj", recon_proj, "Projection CSV giving the grid extent")->required();
    recon_cmd->add_option("--grid", recon_grid, "Grid points per axis");
    recon_cmd->add_option("--out", recon_out, "Output PGM (CSV fallback for non-square data)")->required();

    // latent-plot
    auto* plot_cmd = app.add_subcommand("latent-plot", "SVG of encoded means with class-medoid ellipses");
    DataArgs plot_data;
    std::string plot_model, plot_out, plot_split = "test";
    bool plot_average = false;
    plot_cmd->add_option("--model", plot_model, "Checkpoint")->required();
    add_data_args(plot_cmd, plot_data, true);
    plot_cmd->add_option("--split", plot_split, "train | val | test | all");
    plot_cmd->add_option("--out", plot_out, "Output SVG")->required();
    plot_cmd->add_flag("--average-cov", plot_average, "Use the class-mean covariance instead of the medoid's");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    std::uint64_t grad_seed = 0;
    grad_cmd->add_option("--seed", grad_seed, "Seed");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "devae: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            const auto blobs = make_blobs(synth_n, synth_d, synth_k, synth_spread, synth_seed);
            write_csv_vectors(synth_out, blobs.X, blobs.labels);
        } else if (pca_cmd->parsed()) {
            const auto samples = load_samples(pca_data.data, pca_data.labels);
            write_projection_csv(pca_out, pca_project(samples.X));
        } else if (train_cmd->parsed()) {
            const auto data = load_bundle(train_data, train_model.seed);
            const ModelConfig cfg = build_config(train_model, data);
            TrainSettings settings = train_model.settings;
            settings.seed = train_model.seed;
            auto [model, report] = train(Model(cfg), data, settings);
            save_checkpoint(model, train_ckpt);
            if (!train_report.empty()) write_text(train_report, report.to_json(train_timing));
            err << "trained " << report.epochs_run << " epochs, best epoch " << report.best_epoch
                << ", validation total " << fmt(report.best_val_total) << "\n";
        } else if (matrix_cmd->parsed()) {
            const auto data = load_bundle(matrix_data, matrix_model.seed);
            const ModelConfig cfg = build_config(matrix_model, data);
            TrainSettings settings = matrix_model.settings;
            settings.seed = matrix_model.seed;
            const auto heads = parse_heads(matrix_heads);
            if (matrix_runs < 1) throw UsageError("--runs must be at least 1");
            const auto table = run_matrix(data, heads, matrix_runs, cfg, settings, matrix_threads);
            out << table.to_text();
            if (!matrix_json.empty()) write_text(matrix_json, table.to_json() + "\n");
        } else if (eval_cmd->parsed()) {
            const Model model = load_checkpoint(eval_model);
            const auto data = load_bundle(eval_data, eval_seed.value_or(model.config().seed));
            require_dims(model, data);
            const auto rows = rows_for(data, eval_split);
            out << breakdown_json(evaluate_rows(model, data.X, data.Y, rows), eval_split, rows.size());
        } else if (project_cmd->parsed()) {
            const Model model = load_checkpoint(project_model);
            const auto samples = load_samples(project_data.data, project_data.labels);
            if (samples.X.cols != model.config().input_dim) {
                throw DimensionError("model expects " + std::to_string(model.config().input_dim) +
                                     "-dimensional samples, data has " + std::to_string(samples.X.cols));
            }
            std::vector<std::size_t> rows(samples.X.rows);
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
            const auto lat = encode_rows(model, samples.X, rows);
            std::ostringstream os;
            os << "id";
            for (std::size_t j = 0; j < lat.dim(); ++j) os << ",mu_" << j;
            const Tensor& extra = lat.head == Head::full ? lat.chol_raw : lat.log_var;
            const std::string extra_name = lat.head == Head::full ? "chol_raw_" : "log_var_";
            const std::size_t n_extra = head_param_count(lat.head, lat.dim());
            for (std::size_t j = 0; j < n_extra; ++j) os << ',' << extra_name << j;
            os << '\n';
            for (std::size_t i = 0; i < rows.size(); ++i) {
                os << i;
                for (std::size_t j = 0; j < lat.dim(); ++j) os << ',' << fmt(lat.mu.at(i, j));
                for (std::size_t j = 0; j < n_extra; ++j) os << ',' << fmt(extra.at(i, j));
                os << '\n';
            }
            write_text(project_out, os.str());
        } else if (recon_cmd->parsed()) {
            const Model model = load_checkpoint(recon_model);
            const Matrix coords = read_projection_csv(recon_proj);
            try {
                write_pgm(recon_out, grid_inverse_sheet(model, coords, recon_grid));
            } catch (const SheetError& e) {
                const auto lattice = grid_lattice(bounding_box(coords), recon_grid);
                const std::string csv_path = recon_out + ".csv";
                write_grid_csv(csv_path, lattice, decode_lattice(model, lattice));
                err << "devae: " << e.what() << "; wrote decoded vectors to " << csv_path << "\n";
            }
        } else if (plot_cmd->parsed()) {
            const Model model = load_checkpoint(plot_model);
            const auto data = load_bundle(plot_data, model.config().seed);
            require_dims(model, data);
            const auto rows = rows_for(data, plot_split);
            const auto labels = labels_for(data, rows);
            const Matrix mu = to_matrix(encode_rows(model, data.X, rows).mu);
            std::vector<ClassEllipses> ellipses;
            if (model.config().head != Head::none) {
                Matrix X(rows.size(), data.X.cols);
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    std::copy_n(data.X.row(rows[i]).begin(), data.X.cols, X.values.begin() +
                                static_cast<std::ptrdiff_t>(i * data.X.cols));
                }
                const int ks[] = {1, 2, 3};
                ellipses = class_ellipses(model, X, labels, ks, plot_average);
            }
            write_latent_plot_svg(plot_out, mu, labels, ellipses);
        } else if (grad_cmd->parsed()) {
            bool ok = true;
            for (const auto& c : run_gradient_suite(grad_seed)) {
                const bool pass = c.max_relative_error < kGradTolerance;
                ok = ok && pass;
                out << (pass ? "PASS " : "FAIL ") << to_string(c.recon) << ' ' << to_string(c.head) << ' '
                    << c.component << " max_rel_err=" << fmt(c.max_relative_error) << " params=" << c.checked << '\n';
            }
            return ok ? kExitOk : kExitDivergence;
        }
    } catch (const UsageError& e) {
        err << "devae: usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ContractError& e) {
        err << "devae: usage: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DivergenceError& e) {
        err << "devae: divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const Error& e) {
        err << "devae: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace devae
