#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "devae/errors.hpp"
#include "devae/evaluation.hpp"
#include "devae/model.hpp"
#include "devae/trainer.hpp"

using namespace devae;

namespace {

ModelConfig eval_config(Head head, std::size_t d = 5, ReconKind recon = ReconKind::mse) {
    ModelConfig c;
    c.input_dim = d;
    c.encoder_widths = {7, 6};
    c.decoder_widths = {6, 7};
    c.head = head;
    c.recon = recon;
    c.weights = {3, 0.5};
    c.seed = 11;
    return c;
}

Matrix random_matrix(std::mt19937_64& g, std::size_t r, std::size_t c, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(r, c);
    for (double& v : m.values) v = u(g);
    return m;
}

}  // namespace

TEST_CASE("a memorizing model has zero losses on its point") {
    // all-zero weights turn every layer into its bias; the mu bias is y and
    // the last decoder bias is x
    const Model base(eval_config(Head::none));
    Model m = base;
    auto params = m.parameters();
    for (auto& p : params)
        for (double& v : p.mutable_values()) v = 0.0;
    const std::vector<double> x{0.3, -1.0, 2.0, 0.0, 5.5};
    const std::vector<double> y{1.25, -0.5};
    // trunk: 2 layers (4 tensors), then mu head weight/bias
    std::copy(y.begin(), y.end(), params[5].mutable_values().begin());
    std::copy(x.begin(), x.end(), params.back().mutable_values().begin());
    const Matrix X(1, 5, x), Y(1, 2, y);
    const std::vector<std::size_t> rows{0};
    const LossBreakdown b = evaluate_rows(m, X, Y, rows);
    CHECK(b.proj == 0.0);
    CHECK(b.recon == 0.0);
    CHECK(b.total == 0.0);
}

TEST_CASE("evaluation is deterministic and batch-size independent") {
    std::mt19937_64 g(3);
    for (Head h : {Head::none, Head::isotropic, Head::diagonal, Head::full}) {
        for (ReconKind rk : {ReconKind::mse, ReconKind::bce}) {
            const Model m(eval_config(h, 5, rk));
            const Matrix X = random_matrix(g, 37, 5, 0, 1);
            const Matrix Y = random_matrix(g, 37, 2, -3, 3);
            std::vector<std::size_t> rows(37);
            std::iota(rows.begin(), rows.end(), 0);
            const LossBreakdown whole = evaluate_rows(m, X, Y, rows, 256);
            const LossBreakdown again = evaluate_rows(m, X, Y, rows, 256);
            CHECK(whole.total == again.total);
            for (std::size_t chunk : {1u, 4u, 10u}) {
                const LossBreakdown c = evaluate_rows(m, X, Y, rows, chunk);
                CHECK(std::abs(c.recon - whole.recon) <= 1e-10 * std::max(1.0, std::abs(whole.recon)));
                CHECK(std::abs(c.proj - whole.proj) <= 1e-10 * std::max(1.0, std::abs(whole.proj)));
                CHECK(std::abs(c.ent - whole.ent) <= 1e-10 * std::max(1.0, std::abs(whole.ent)));
            }
            // one-by-one arithmetic mean
            double r = 0, p = 0, e = 0;
            for (std::size_t i : rows) {
                const std::vector<std::size_t> one{i};
                const LossBreakdown s = evaluate_rows(m, X, Y, one);
                r += s.recon / 37;
                p += s.proj / 37;
                e += s.ent / 37;
            }
            CHECK(std::abs(r - whole.recon) <= 1e-10 * std::max(1.0, std::abs(r)));
            CHECK(std::abs(p - whole.proj) <= 1e-10 * std::max(1.0, std::abs(p)));
            CHECK(std::abs(e - whole.ent) <= 1e-10 * std::max(1.0, std::abs(e)));
            const LossBreakdown t = total_loss(whole.recon, whole.proj, whole.ent, m.config().weights);
            CHECK(whole.total == t.total);
        }
    }
}

TEST_CASE("evaluation matches the eps-free training forward") {
    std::mt19937_64 g(8);
    const Model m(eval_config(Head::full));
    const Matrix X = random_matrix(g, 6, 5, 0, 1);
    const Matrix Y = random_matrix(g, 6, 2, -1, 1);
    std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5};
    const LossBreakdown b = evaluate_rows(m, X, Y, rows);
    const ForwardResult f = forward_train(m, to_tensor(X), to_tensor(Y), Tensor::zeros({6, 2}));
    CHECK(b.recon == doctest::Approx(f.losses.recon).epsilon(1e-12));
    CHECK(b.proj == doctest::Approx(f.losses.proj).epsilon(1e-12));
    CHECK(b.ent == doctest::Approx(f.losses.ent).epsilon(1e-12));
}

TEST_CASE("evaluation errors") {
    const Model m(eval_config(Head::none));
    const std::vector<std::size_t> none;
    CHECK_THROWS_AS(evaluate_rows(m, Matrix(2, 5), Matrix(2, 2), none), DataError);
    const std::vector<std::size_t> rows{0};
    CHECK_THROWS_AS(evaluate_rows(m, Matrix(2, 4), Matrix(2, 2), rows), DimensionError);
}

TEST_CASE("medoid examples") {
    const Matrix pts(3, 2, {0, 0, 1, 0, 10, 0});
    const std::vector<int> same{0, 0, 0};
    const auto m = class_medoid(pts, same);
    REQUIRE(m.size() == 1);
    CHECK(m[0].index == 1);
    CHECK(m[0].point == std::array<double, 2>{1, 0});

    const Matrix two(4, 2, {5, 5, 0, 0, 2, 0, 9, 9});
    const std::vector<int> labels{3, 1, 1, 7};
    const auto mm = class_medoid(two, labels);
    REQUIRE(mm.size() == 3);
    CHECK(mm[0].label == 1);
    CHECK(mm[0].index == 1);  // equidistant pair, lower index wins
    CHECK(mm[1].label == 3);
    CHECK(mm[1].index == 0);  // singleton
    CHECK(mm[2].point == std::array<double, 2>{9, 9});
}

TEST_CASE("medoid is always a class member and minimizes distance sums") {
    std::mt19937_64 g(2);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix pts = random_matrix(g, 25, 2, -5, 5);
        std::vector<int> labels(25);
        for (int& l : labels) l = lab(g);
        for (const auto& md : class_medoid(pts, labels)) {
            CHECK(labels[md.index] == md.label);
            CHECK(md.point[0] == pts.at(md.index, 0));
            auto cost = [&](std::size_t i) {
                double s = 0;
                for (std::size_t j = 0; j < 25; ++j)
                    if (labels[j] == md.label) s += std::hypot(pts.at(i, 0) - pts.at(j, 0), pts.at(i, 1) - pts.at(j, 1));
                return s;
            };
            for (std::size_t i = 0; i < 25; ++i)
                if (labels[i] == md.label) CHECK(cost(md.index) <= cost(i));
        }
    }
}

TEST_CASE("class ellipses per head") {
    std::mt19937_64 g(4);
    const Matrix X = random_matrix(g, 30, 5, 0, 1);
    std::vector<int> labels(30);
    for (std::size_t i = 0; i < 30; ++i) labels[i] = static_cast<int>(i % 3);

    CHECK_THROWS_AS(class_ellipses(Model(eval_config(Head::none)), X, labels), UnsupportedHeadError);

    for (Head h : {Head::isotropic, Head::diagonal, Head::full}) {
        CAPTURE(to_string(h));
        const Model m(eval_config(h));
        for (bool avg : {false, true}) {
            const auto ce = class_ellipses(m, X, labels, std::array{1, 2, 3}, avg);
            REQUIRE(ce.size() == 3);
            for (const auto& c : ce) {
                REQUIRE(c.ellipses.size() == 3);
                for (std::size_t k = 0; k < 3; ++k) {
                    const auto& e = c.ellipses[k];
                    CHECK(e.k == static_cast<int>(k + 1));
                    CHECK(e.center == c.medoid.point);
                    CHECK(e.rotation == c.ellipses[0].rotation);
                    CHECK(e.semi_axes[0] == doctest::Approx((k + 1) * c.ellipses[0].semi_axes[0]).epsilon(1e-12));
                    CHECK(e.semi_axes[1] == doctest::Approx((k + 1) * c.ellipses[0].semi_axes[1]).epsilon(1e-12));
                    if (k > 0) CHECK(e.semi_axes[1] > c.ellipses[k - 1].semi_axes[1]);
                    if (h == Head::isotropic) CHECK(std::abs(e.semi_axes[0] - e.semi_axes[1]) <= 1e-9 * e.semi_axes[0]);
                    if (h == Head::diagonal)
                        CHECK((e.rotation == 0.0 || std::abs(e.rotation - std::numbers::pi / 2) < 1e-12));
                }
            }
        }
    }
}

TEST_CASE("medoid ellipse uses the medoid's predicted covariance") {
    std::mt19937_64 g(6);
    const Matrix X = random_matrix(g, 12, 5, 0, 1);
    const std::vector<int> labels(12, 0);
    const Model m(eval_config(Head::full));
    const auto ce = class_ellipses(m, X, labels);
    std::vector<std::size_t> rows(12);
    std::iota(rows.begin(), rows.end(), 0);
    const LatentBatch lb = encode_rows(m, X, rows);
    const GaussianLatent med = lb.at(ce[0].medoid.index);
    const EllipseSpec want = ellipse_from_cov({med.mu[0], med.mu[1]}, covariance_matrix(med), 1);
    CHECK(ce[0].ellipses[0].semi_axes[0] == doctest::Approx(want.semi_axes[0]).epsilon(1e-14));
    CHECK(ce[0].ellipses[0].rotation == doctest::Approx(want.rotation).epsilon(1e-14));
}

TEST_CASE("mean and sample std") {
    const std::vector<double> one{4.0};
    CHECK(mean_std(one).mean == 4.0);
    CHECK(mean_std(one).std == 0.0);
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(mean_std(v).mean == 2.5);
    CHECK(mean_std(v).std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(mean_std(std::vector<double>{}), ContractError);
}

TEST_CASE("metrics table layout") {
    MetricsTable t;
    t.dataset = "blobs";
    for (Head h : {Head::none, Head::isotropic, Head::diagonal, Head::full}) {
        t.rows.push_back({h, {1.5, 0.25}, {100.0, 3.0}, {12, 1}, 3});
    }
    const std::string text = t.to_text();
    CHECK(text.find("Projection loss") != std::string::npos);
    CHECK(text.find("Reconstruction loss") != std::string::npos);
    CHECK(text.find("epochs") != std::string::npos);
    for (const char* h : {"none", "isotropic", "diagonal", "full"}) CHECK(text.find(h) != std::string::npos);
    const std::string j = t.to_json();
    CHECK(j.find("\"proj_loss\"") != std::string::npos);
    CHECK(j.find("\"recon_loss\"") != std::string::npos);
    CHECK(j.find("\"n_runs\": 3") != std::string::npos);
}
