#include "devae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "devae/errors.hpp"

namespace devae {

using detail::Node;
using detail::NodePtr;

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape, std::size_t n) {
    if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
    for (auto s : shape) {
        if (s == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    if (shape_numel(shape) != n) {
        throw DimensionError("shape " + shape_str(shape) + " does not match " + std::to_string(n) +
                             " values");
    }
}

// Builds the output node; records parents and backward only when some
// parent participates in differentiation.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                   detail::BackwardFn fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    bool needs = false;
    if (g_grad_enabled) {
        for (const auto& p : parents) needs = needs || p->requires_grad;
    }
    if (needs) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward_fn = std::move(fn);
    }
    return Tensor::from_node(std::move(node));
}

struct Dims2 {
    std::size_t r, c;
};

Dims2 as2d(const Shape& s, const char* op) {
    if (s.size() == 1) return {1, s[0]};
    if (s.size() == 2) return {s[0], s[1]};
    throw DimensionError(std::string(op) + ": only rank 1 or 2 tensors are supported, got " +
                         shape_str(s));
}

std::size_t bdim(std::size_t a, std::size_t b, const Shape& sa, const Shape& sb, const char* op) {
    if (a == b) return a;
    if (a == 1) return b;
    if (b == 1) return a;
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(sa) + " with " +
                         shape_str(sb));
}

template <class Fwd, class Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    Shape out_shape;
    Dims2 da, db, dout;
    if (sa == sb) {
        out_shape = sa;
        da = db = dout = {1, a.numel()};
    } else if (b.numel() == 1) {
        out_shape = sa;
        da = dout = {1, a.numel()};
        db = {1, 1};
    } else if (a.numel() == 1) {
        out_shape = sb;
        db = dout = {1, b.numel()};
        da = {1, 1};
    } else {
        da = as2d(sa, name);
        db = as2d(sb, name);
        dout = {bdim(da.r, db.r, sa, sb, name), bdim(da.c, db.c, sa, sb, name)};
        if (sa.size() == 1 && sb.size() == 1) {
            out_shape = {dout.c};
        } else {
            out_shape = {dout.r, dout.c};
        }
    }
    auto ia = [da](std::size_t r, std::size_t c) {
        return (da.r == 1 ? 0 : r) * da.c + (da.c == 1 ? 0 : c);
    };
    auto ib = [db](std::size_t r, std::size_t c) {
        return (db.r == 1 ? 0 : r) * db.c + (db.c == 1 ? 0 : c);
    };

    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(dout.r * dout.c);
    for (std::size_t r = 0; r < dout.r; ++r) {
        for (std::size_t c = 0; c < dout.c; ++c) {
            out[r * dout.c + c] = fwd(av[ia(r, c)], bv[ib(r, c)]);
        }
    }
    return make_result(
        std::move(out_shape), std::move(out), {a.node(), b.node()},
        [dout, ia, ib, bwd](const Node& self, std::span<const double> g,
                            std::span<std::vector<double>*> pg) {
            const auto& x = self.parents[0]->value;
            const auto& y = self.parents[1]->value;
            for (std::size_t r = 0; r < dout.r; ++r) {
                for (std::size_t c = 0; c < dout.c; ++c) {
                    const std::size_t k = r * dout.c + c;
                    const std::size_t i = ia(r, c);
                    const std::size_t j = ib(r, c);
                    auto [gx, gy] = bwd(x[i], y[j], self.value[k], g[k]);
                    if (pg[0]) (*pg[0])[i] += gx;
                    if (pg[1]) (*pg[1])[j] += gy;
                }
            }
        });
}

template <class Fwd, class Deriv>
Tensor unary_op(const Tensor& a, Fwd fwd, Deriv deriv) {
    const auto av = a.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
    return make_result(a.shape(), std::move(out), {a.node()},
                       [deriv](const Node& self, std::span<const double> g,
                               std::span<std::vector<double>*> pg) {
                           const auto& x = self.parents[0]->value;
                           auto& gx = *pg[0];
                           for (std::size_t i = 0; i < x.size(); ++i) {
                               gx[i] += g[i] * deriv(x[i], self.value[i]);
                           }
                       });
}

void require_finite(std::span<const double> v, const char* op) {
    for (double x : v) {
        if (!std::isfinite(x)) throw DivergenceError(std::string(op) + " produced a non-finite value");
    }
}

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    check_shape(shape, values.size());
    node_ = std::make_shared<Node>();
    node_->shape = std::move(shape);
    node_->value = std::move(values);
    node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    if (rows.size() == 0) throw DimensionError("matrix literal needs at least one row");
    const std::size_t c = rows.begin()->size();
    std::vector<double> v;
    v.reserve(rows.size() * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("matrix literal rows differ in length");
        v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor({rows.size(), c}, std::move(v), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
    return Tensor({values.size()}, std::vector<double>(values), requires_grad);
}

Tensor Tensor::from_node(NodePtr node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
}

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::rows() const {
    const auto& s = shape();
    if (s.size() == 1) return 1;
    if (s.size() == 2) return s[0];
    throw DimensionError("rows() needs a rank 1 or 2 tensor, got " + shape_str(s));
}

std::size_t Tensor::cols() const {
    const auto& s = shape();
    if (s.size() == 1) return s[0];
    if (s.size() == 2) return s[1];
    throw DimensionError("cols() needs a rank 1 or 2 tensor, got " + shape_str(s));
}

std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

bool Tensor::requires_grad() const { return node_->requires_grad; }
bool Tensor::has_grad() const { return !node_->grad.empty(); }
std::span<const double> Tensor::grad() const { return node_->grad; }
void Tensor::zero_grad() { node_->grad.clear(); }

Tensor Tensor::detach() const { return Tensor(shape(), node_->value, false); }

void Tensor::backward() const {
    if (!defined() || numel() != 1) {
        throw ContractError("backward() needs a scalar loss, got shape " +
                            (defined() ? shape_str(shape()) : std::string("<undefined>")));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<Node*> order;
    std::unordered_map<Node*, std::size_t> index;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    index.emplace(node_.get(), 0);
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node* p = n->parents[next++].get();
            if (p->requires_grad && !index.count(p)) {
                index.emplace(p, 0);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    // Gradients for this pass live in fresh buffers and are added to leaf
    // grads only at the end, so repeated passes accumulate exactly.
    std::vector<std::vector<double>> pass(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        index[order[i]] = i;
        pass[i].assign(order[i]->value.size(), 0.0);
    }
    pass.back()[0] = 1.0;

    std::vector<std::vector<double>*> pg;
    for (std::size_t i = order.size(); i-- > 0;) {
        Node* n = order[i];
        if (!n->backward_fn) continue;
        pg.clear();
        for (const auto& p : n->parents) {
            pg.push_back(p->requires_grad ? &pass[index[p.get()]] : nullptr);
        }
        n->backward_fn(*n, pass[i], pg);
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        Node* n = order[i];
        if (n->backward_fn) continue;
        if (n->grad.empty()) {
            n->grad = std::move(pass[i]);
        } else {
            for (std::size_t k = 0; k < n->grad.size(); ++k) n->grad[k] += pass[i][k];
        }
    }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

// --- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double, double, double, double g) { return std::pair{g, g}; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double, double, double, double g) { return std::pair{g, -g}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double x, double y, double, double g) { return std::pair{g * y, g * x}; });
}

Tensor scale(const Tensor& a, double s) {
    return unary_op(
        a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
    return unary_op(
        a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor exp(const Tensor& a) {
    auto out = unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
    require_finite(out.values(), "exp");
    return out;
}

Tensor log(const Tensor& a) {
    for (double x : a.values()) {
        if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
    }
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
    return unary_op(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& a) {
    return unary_op(
        a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary_op(
        a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// --- matmul ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = &out[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const double s = av[i * k + p];
            const double* brow = &bv[p * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += s * brow[j];
        }
    }
    return make_result({m, n}, std::move(out), {a.node(), b.node()},
                       [m, k, n](const Node& self, std::span<const double> g,
                                 std::span<std::vector<double>*> pg) {
                           const auto& x = self.parents[0]->value;
                           const auto& y = self.parents[1]->value;
                           if (pg[0]) {  // dA = G B^T
                               auto& ga = *pg[0];
                               for (std::size_t i = 0; i < m; ++i) {
                                   for (std::size_t p = 0; p < k; ++p) {
                                       double s = 0.0;
                                       for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * y[p * n + j];
                                       ga[i * k + p] += s;
                                   }
                               }
                           }
                           if (pg[1]) {  // dB = A^T G
                               auto& gb = *pg[1];
                               for (std::size_t i = 0; i < m; ++i) {
                                   for (std::size_t p = 0; p < k; ++p) {
                                       const double s = x[i * k + p];
                                       for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += s * g[i * n + j];
                                   }
                               }
                           }
                       });
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
        throw DimensionError("matmul_bt: incompatible shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &av[i * k];
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = &bv[j * k];
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            out[i * n + j] = s;
        }
    }
    return make_result({m, n}, std::move(out), {a.node(), b.node()},
                       [m, k, n](const Node& self, std::span<const double> g,
                                 std::span<std::vector<double>*> pg) {
                           const auto& x = self.parents[0]->value;
                           const auto& y = self.parents[1]->value;
                           if (pg[0]) {  // dA = G B
                               auto& ga = *pg[0];
                               for (std::size_t i = 0; i < m; ++i) {
                                   double* garow = &ga[i * k];
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const double s = g[i * n + j];
                                       if (s == 0.0) continue;
                                       const double* yrow = &y[j * k];
                                       for (std::size_t p = 0; p < k; ++p) garow[p] += s * yrow[p];
                                   }
                               }
                           }
                           if (pg[1]) {  // dB = G^T A
                               auto& gb = *pg[1];
                               for (std::size_t i = 0; i < m; ++i) {
                                   const double* xrow = &x[i * k];
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const double s = g[i * n + j];
                                       if (s == 0.0) continue;
                                       double* gbrow = &gb[j * k];
                                       for (std::size_t p = 0; p < k; ++p) gbrow[p] += s * xrow[p];
                                   }
                               }
                           }
                       });
}

// --- reductions and views ----------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double x : a.values()) s += x;
    return make_result({1}, {s}, {a.node()},
                       [](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
                           for (auto& v : *pg[0]) v += g[0];
                       });
}

Tensor mean(const Tensor& a) {
    const double n = static_cast<double>(a.numel());
    double s = 0.0;
    for (double x : a.values()) s += x;
    return make_result({1}, {s / n}, {a.node()},
                       [n](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
                           for (auto& v : *pg[0]) v += g[0] / n;
                       });
}

Tensor row_sum(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("row_sum needs a rank 2 tensor, got " + shape_str(a.shape()));
    const std::size_t m = a.rows(), n = a.cols();
    const auto av = a.values();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += av[i * n + j];
    }
    return make_result({m, 1}, std::move(out), {a.node()},
                       [m, n](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
                           auto& ga = *pg[0];
                           for (std::size_t i = 0; i < m; ++i) {
                               for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i];
                           }
                       });
}

Tensor column(const Tensor& a, std::size_t j) {
    if (a.rank() != 2 || j >= a.cols()) {
        throw DimensionError("column " + std::to_string(j) + " out of range for shape " +
                             shape_str(a.shape()));
    }
    const std::size_t m = a.rows(), n = a.cols();
    const auto av = a.values();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) out[i] = av[i * n + j];
    return make_result({m, 1}, std::move(out), {a.node()},
                       [m, n, j](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
                           auto& ga = *pg[0];
                           for (std::size_t i = 0; i < m; ++i) ga[i * n + j] += g[i];
                       });
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw DimensionError("concat_cols needs at least one tensor");
    const std::size_t m = parts[0].rows();
    std::vector<std::size_t> offsets;
    std::size_t n = 0;
    for (const auto& p : parts) {
        if (p.rank() != 2 || p.rows() != m) {
            throw DimensionError("concat_cols: shape " + shape_str(p.shape()) + " does not have " +
                                 std::to_string(m) + " rows");
        }
        offsets.push_back(n);
        n += p.cols();
    }
    std::vector<double> out(m * n);
    std::vector<NodePtr> parents;
    std::vector<std::size_t> widths;
    for (std::size_t t = 0; t < parts.size(); ++t) {
        const auto pv = parts[t].values();
        const std::size_t w = parts[t].cols();
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(&pv[i * w], w, &out[i * n + offsets[t]]);
        }
        parents.push_back(parts[t].node());
        widths.push_back(w);
    }
    return make_result({m, n}, std::move(out), std::move(parents),
                       [m, n, offsets, widths](const Node&, std::span<const double> g,
                                               std::span<std::vector<double>*> pg) {
                           for (std::size_t t = 0; t < pg.size(); ++t) {
                               if (!pg[t]) continue;
                               auto& gp = *pg[t];
                               const std::size_t w = widths[t];
                               for (std::size_t i = 0; i < m; ++i) {
                                   for (std::size_t c = 0; c < w; ++c) gp[i * w + c] += g[i * n + offsets[t] + c];
                               }
                           }
                       });
}

}  // namespace devae
