#include "hgch/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hgch/geometry.hpp"

namespace hgch::ad {

namespace {

double rnd(double v, Precision p) {
    return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

void round_all(std::vector<double>& v, Precision p) {
    if (p == Precision::f32)
        for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

// accumulate into an adjoint slot with optional f32 rounding
void acc(std::vector<double>& dst, std::size_t i, double v, Precision p) {
    dst[i] = rnd(dst[i] + rnd(v, p), p);
}

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("tape: " + msg); }

}  // namespace

const std::vector<double>& GradBuffer::at(int leaf_id) const {
    const auto it = std::lower_bound(leaf_ids.begin(), leaf_ids.end(), leaf_id);
    if (it == leaf_ids.end() || *it != leaf_id)
        throw std::invalid_argument("no gradient recorded for leaf " + std::to_string(leaf_id));
    return grads[static_cast<std::size_t>(it - leaf_ids.begin())];
}

int Tape::check_id(int id) const {
    if (id < 0 || id >= size()) fail("input id " + std::to_string(id) + " not on tape");
    return id;
}

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    const int id = size() - 1;
    eval_node(id, Precision::f64);
    return id;
}

int Tape::leaf(std::vector<double> value, bool requires_grad) {
    if (value.empty()) fail("leaf value must be non-empty");
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return size() - 1;
}

int Tape::exp_o(int v, double k) {
    Node n;
    n.op = Op::exp_o;
    n.inputs = {check_id(v)};
    n.k = k;
    return push(std::move(n));
}

int Tape::log_o(int y, double k) {
    Node n;
    n.op = Op::log_o;
    n.inputs = {check_id(y)};
    n.k = k;
    return push(std::move(n));
}

int Tape::mobius_scalar(double a, int y, double k) {
    Node n;
    n.op = Op::mobius_scalar;
    n.inputs = {check_id(y)};
    n.a = a;
    n.k = k;
    return push(std::move(n));
}

int Tape::conformal_factor(int x, double k) {
    Node n;
    n.op = Op::conformal_factor;
    n.inputs = {check_id(x)};
    n.k = k;
    return push(std::move(n));
}

int Tape::dist(int x, int y, double k) {
    if (value(check_id(x)).size() != value(check_id(y)).size()) fail("dist: dimension mismatch");
    Node n;
    n.op = Op::dist;
    n.inputs = {x, y};
    n.k = k;
    return push(std::move(n));
}

int Tape::sq_dist(int x, int y, double k) {
    if (value(check_id(x)).size() != value(check_id(y)).size()) fail("sq_dist: dimension mismatch");
    Node n;
    n.op = Op::sq_dist;
    n.inputs = {x, y};
    n.k = k;
    return push(std::move(n));
}

int Tape::sigmoid(int x) {
    Node n;
    n.op = Op::sigmoid;
    n.inputs = {check_id(x)};
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    const auto na = value(check_id(a)).size(), nb = value(check_id(b)).size();
    if (na != nb && na != 1 && nb != 1) fail("mul: incompatible shapes");
    Node n;
    n.op = Op::mul;
    n.inputs = {a, b};
    return push(std::move(n));
}

int Tape::div(int num, int den) {
    const auto nn = value(check_id(num)).size(), nd = value(check_id(den)).size();
    if (nn != nd && nd != 1) fail("div: divisor must match or be scalar");
    Node n;
    n.op = Op::div;
    n.inputs = {num, den};
    return push(std::move(n));
}

int Tape::weighted_sum(std::span<const int> xs, std::span<const double> coeffs) {
    if (xs.empty()) fail("weighted_sum: empty input list");
    if (xs.size() != coeffs.size()) fail("weighted_sum: coefficient count mismatch");
    const auto dim = value(check_id(xs[0])).size();
    for (int id : xs)
        if (value(check_id(id)).size() != dim) fail("weighted_sum: dimension mismatch");
    Node n;
    n.op = Op::weighted_sum;
    n.inputs.assign(xs.begin(), xs.end());
    n.coeffs.assign(coeffs.begin(), coeffs.end());
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const int xs[] = {a, b};
    const double cs[] = {1.0, 1.0};
    return weighted_sum(xs, cs);
}

int Tape::sub(int a, int b) {
    const int xs[] = {a, b};
    const double cs[] = {1.0, -1.0};
    return weighted_sum(xs, cs);
}

int Tape::matvec(int w, int x, int rows, int cols) {
    if (rows <= 0 || cols <= 0) fail("matvec: bad shape");
    if (value(check_id(w)).size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        fail("matvec: matrix size does not match rows*cols");
    if (value(check_id(x)).size() != static_cast<std::size_t>(cols)) fail("matvec: vector size mismatch");
    Node n;
    n.op = Op::matvec;
    n.inputs = {w, x};
    n.rows = rows;
    n.cols = cols;
    return push(std::move(n));
}

int Tape::norm(int x) {
    Node n;
    n.op = Op::norm;
    n.inputs = {check_id(x)};
    return push(std::move(n));
}

int Tape::hinge(int x) {
    Node n;
    n.op = Op::hinge;
    n.inputs = {check_id(x)};
    return push(std::move(n));
}

int Tape::gyromidpoint(std::span<const int> points, std::span<const double> weights, double k) {
    if (points.empty()) fail("gyromidpoint: empty input list");
    if (points.size() != weights.size()) fail("gyromidpoint: weight count mismatch");
    const auto dim = value(check_id(points[0])).size();
    double weight_total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (value(check_id(points[i])).size() != dim) fail("gyromidpoint: dimension mismatch");
        if (!(weights[i] > 0.0)) fail("gyromidpoint: weights must be positive");
        weight_total += weights[i];
    }
    std::vector<int> lam(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) lam[i] = conformal_factor(points[i], k);

    // denominator sum_i w_i (lambda_i - 1) via one weighted sum with a unit constant
    std::vector<int> den_in(lam);
    std::vector<double> den_c(weights.begin(), weights.end());
    den_in.push_back(constant(1.0));
    den_c.push_back(-weight_total);
    const int denom = weighted_sum(den_in, den_c);

    std::vector<int> prods(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        int num = lam[i];
        if (weights[i] != 1.0) {
            const int xs[] = {lam[i]};
            const double cs[] = {weights[i]};
            num = weighted_sum(xs, cs);
        }
        prods[i] = mul(div(num, denom), points[i]);
    }
    const std::vector<double> ones(points.size(), 1.0);
    const int u = weighted_sum(prods, ones);
    return mobius_scalar(0.5, u, k);
}

int Tape::record(std::string_view primitive, std::span<const int> inputs) {
    auto need = [&](std::size_t n) {
        if (inputs.size() != n)
            fail(std::string(primitive) + ": expected " + std::to_string(n) + " inputs");
    };
    if (primitive == "exp_o") { need(1); return exp_o(inputs[0], 1.0); }
    if (primitive == "log_o") { need(1); return log_o(inputs[0], 1.0); }
    if (primitive == "mobius_scalar") { need(1); return mobius_scalar(0.5, inputs[0], 1.0); }
    if (primitive == "conformal_factor") { need(1); return conformal_factor(inputs[0], 1.0); }
    if (primitive == "dist") { need(2); return dist(inputs[0], inputs[1], 1.0); }
    if (primitive == "sq_dist") { need(2); return sq_dist(inputs[0], inputs[1], 1.0); }
    if (primitive == "sigmoid") { need(1); return sigmoid(inputs[0]); }
    if (primitive == "mul") { need(2); return mul(inputs[0], inputs[1]); }
    if (primitive == "div") { need(2); return div(inputs[0], inputs[1]); }
    if (primitive == "norm") { need(1); return norm(inputs[0]); }
    if (primitive == "hinge") { need(1); return hinge(inputs[0]); }
    if (primitive == "weighted_sum" || primitive == "sum") {
        const std::vector<double> ones(inputs.size(), 1.0);
        return weighted_sum(inputs, ones);
    }
    if (primitive == "matvec") {
        need(2);
        const auto wsize = value(check_id(inputs[0])).size();
        const auto xsize = value(check_id(inputs[1])).size();
        if (xsize == 0 || wsize % xsize != 0) fail("matvec: cannot infer shape");
        return matvec(inputs[0], inputs[1], static_cast<int>(wsize / xsize), static_cast<int>(xsize));
    }
    if (primitive == "gyromidpoint") {
        const std::vector<double> ones(inputs.size(), 1.0);
        return gyromidpoint(inputs, ones, 1.0);
    }
    fail("unknown primitive '" + std::string(primitive) + "'");
}

void Tape::set_output(int id) {
    check_id(id);
    if (value(id).size() != 1) fail("output must be a scalar");
    output_ = id;
}

void Tape::truncate(int n) {
    if (n < 0 || n > size()) fail("truncate out of range");
    nodes_.resize(static_cast<std::size_t>(n));
    if (output_ >= n) output_ = -1;
}

void Tape::set_leaf(int id, std::span<const double> v) {
    Node& n = nodes_[static_cast<std::size_t>(check_id(id))];
    if (n.op != Op::leaf) fail("set_leaf on a non-leaf node");
    if (n.value.size() != v.size()) fail("set_leaf: size mismatch");
    std::copy(v.begin(), v.end(), n.value.begin());
}

void Tape::eval_node(int id, Precision prec) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    auto in = [&](std::size_t i) -> const std::vector<double>& {
        return nodes_[static_cast<std::size_t>(n.inputs[i])].value;
    };
    switch (n.op) {
        case Op::leaf:
            return;
        case Op::exp_o: {
            const auto& v = in(0);
            n.value.resize(v.size());
            geom::raw::exp_o(v, n.k, n.value);
            break;
        }
        case Op::log_o: {
            const auto& y = in(0);
            n.value.resize(y.size());
            geom::raw::log_o(y, n.k, n.value);
            break;
        }
        case Op::mobius_scalar: {
            const auto& y = in(0);
            n.value.resize(y.size());
            geom::raw::mobius_scalar(n.a, y, n.k, n.value);
            break;
        }
        case Op::conformal_factor:
            n.value.assign(1, geom::raw::conformal_factor(in(0), n.k));
            break;
        case Op::dist:
            n.value.assign(1, geom::raw::dist(in(0), in(1), n.k));
            break;
        case Op::sq_dist:
            n.value.assign(1, geom::raw::sq_dist(in(0), in(1), n.k));
            break;
        case Op::sigmoid: {
            const auto& x = in(0);
            n.value.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = 1.0 / (1.0 + std::exp(-x[i]));
            break;
        }
        case Op::mul: {
            const auto& a = in(0);
            const auto& b = in(1);
            const std::size_t dim = std::max(a.size(), b.size());
            n.value.resize(dim);
            for (std::size_t i = 0; i < dim; ++i)
                n.value[i] = a[a.size() == 1 ? 0 : i] * b[b.size() == 1 ? 0 : i];
            break;
        }
        case Op::div: {
            const auto& a = in(0);
            const auto& b = in(1);
            n.value.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) n.value[i] = a[i] / b[b.size() == 1 ? 0 : i];
            break;
        }
        case Op::weighted_sum: {
            const std::size_t dim = in(0).size();
            n.value.assign(dim, 0.0);
            for (std::size_t j = 0; j < n.inputs.size(); ++j) {
                const auto& x = in(j);
                const double c = n.coeffs[j];
                for (std::size_t i = 0; i < dim; ++i) n.value[i] += c * x[i];
            }
            break;
        }
        case Op::matvec: {
            const auto& w = in(0);
            const auto& x = in(1);
            n.value.assign(static_cast<std::size_t>(n.rows), 0.0);
            for (int r = 0; r < n.rows; ++r) {
                double s = 0.0;
                const double* row = w.data() + static_cast<std::size_t>(r) * n.cols;
                for (int c = 0; c < n.cols; ++c) s += row[c] * x[static_cast<std::size_t>(c)];
                n.value[static_cast<std::size_t>(r)] = s;
            }
            break;
        }
        case Op::norm:
            n.value.assign(1, geom::norm(in(0)));
            break;
        case Op::hinge: {
            const auto& x = in(0);
            n.value.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] > 0.0 ? x[i] : 0.0;
            break;
        }
    }
    round_all(n.value, prec);
}

void Tape::recompute(Precision prec) {
    for (int id = 0; id < size(); ++id) {
        if (prec == Precision::f32 && nodes_[static_cast<std::size_t>(id)].op == Op::leaf)
            round_all(nodes_[static_cast<std::size_t>(id)].value, prec);
        eval_node(id, prec);
    }
}

GradBuffer Tape::backward(Precision prec) const {
    if (output_ < 0) fail("backward: no output set");
    if (value(output_).size() != 1) fail("backward: output is not a scalar");

    std::vector<std::vector<double>> adj(nodes_.size());
    adj[static_cast<std::size_t>(output_)] = {1.0};

    for (int id = size() - 1; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        auto& g = adj[static_cast<std::size_t>(id)];
        if (g.empty() || n.op == Op::leaf) continue;
        auto in_val = [&](std::size_t i) -> const std::vector<double>& {
            return nodes_[static_cast<std::size_t>(n.inputs[i])].value;
        };
        auto in_adj = [&](std::size_t i) -> std::vector<double>& {
            auto& a = adj[static_cast<std::size_t>(n.inputs[i])];
            if (a.empty()) a.assign(in_val(i).size(), 0.0);
            return a;
        };
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::exp_o: {
                const auto& v = in_val(0);
                auto& gv = in_adj(0);
                const double nv = geom::norm(v);
                if (nv < 1e-15) {
                    for (std::size_t i = 0; i < v.size(); ++i) acc(gv, i, g[i], prec);
                    break;
                }
                const double s = std::sqrt(n.k);
                const double t = std::tanh(nv / s);
                double gdotu = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i) gdotu += g[i] * v[i] / nv;
                const double perp = s * t / nv;
                const double par = 1.0 - t * t;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const double u = v[i] / nv;
                    acc(gv, i, perp * (g[i] - gdotu * u) + par * gdotu * u, prec);
                }
                break;
            }
            case Op::log_o: {
                const auto& y = in_val(0);
                auto& gy = in_adj(0);
                const double r = geom::norm(y);
                if (r < 1e-15) {
                    for (std::size_t i = 0; i < y.size(); ++i) acc(gy, i, g[i], prec);
                    break;
                }
                const double s = std::sqrt(n.k);
                const double a = geom::clamped_artanh(r / s);
                double gdotu = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) gdotu += g[i] * y[i] / r;
                const double perp = s * a / r;
                const double par = 1.0 / (1.0 - r * r / n.k);
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double u = y[i] / r;
                    acc(gy, i, perp * (g[i] - gdotu * u) + par * gdotu * u, prec);
                }
                break;
            }
            case Op::mobius_scalar: {
                const auto& y = in_val(0);
                auto& gy = in_adj(0);
                const double r = geom::norm(y);
                if (r < 1e-15) {
                    for (std::size_t i = 0; i < y.size(); ++i) acc(gy, i, n.a * g[i], prec);
                    break;
                }
                const double s = std::sqrt(n.k);
                const double w = geom::clamped_artanh(r / s);
                const double t = std::tanh(n.a * w);
                double gdotu = 0.0;
                for (std::size_t i = 0; i < y.size(); ++i) gdotu += g[i] * y[i] / r;
                const double perp = s * t / r;
                const double par = n.a * (1.0 - t * t) / (1.0 - r * r / n.k);
                for (std::size_t i = 0; i < y.size(); ++i) {
                    const double u = y[i] / r;
                    acc(gy, i, perp * (g[i] - gdotu * u) + par * gdotu * u, prec);
                }
                break;
            }
            case Op::conformal_factor: {
                const auto& x = in_val(0);
                auto& gx = in_adj(0);
                const double lam = n.value[0];
                const double c = g[0] * lam * lam / n.k;
                for (std::size_t i = 0; i < x.size(); ++i) acc(gx, i, c * x[i], prec);
                break;
            }
            case Op::dist:
            case Op::sq_dist: {
                const auto& x = in_val(0);
                const auto& y = in_val(1);
                auto& gx = in_adj(0);
                auto& gy = in_adj(1);
                const double z = geom::raw::dist_z(x, y, n.k);
                // coincident points: squared distance has a smooth minimum
                // (gradient 0); plain distance is non-differentiable there
                if (z < 1e-12) break;
                const double root = std::sqrt(z * (z + 2.0));
                const double dval_dz = n.op == Op::dist
                                           ? std::sqrt(n.k) / root
                                           : 2.0 * n.k * geom::stable_acosh1p(z) / root;
                const double ax = n.k - geom::sq_norm(x);
                const double by = n.k - geom::sq_norm(y);
                double diff2 = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) diff2 += (x[i] - y[i]) * (x[i] - y[i]);
                const double num = 2.0 * n.k * diff2;
                const double c0 = 4.0 * n.k / (ax * by);
                const double gscale = g[0] * dval_dz;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - y[i];
                    acc(gx, i, gscale * (c0 * d + 2.0 * x[i] * num / (ax * ax * by)), prec);
                    acc(gy, i, gscale * (-c0 * d + 2.0 * y[i] * num / (ax * by * by)), prec);
                }
                break;
            }
            case Op::sigmoid: {
                auto& gx = in_adj(0);
                for (std::size_t i = 0; i < n.value.size(); ++i)
                    acc(gx, i, g[i] * n.value[i] * (1.0 - n.value[i]), prec);
                break;
            }
            case Op::mul: {
                const auto& a = in_val(0);
                const auto& b = in_val(1);
                auto& ga = in_adj(0);
                auto& gb = in_adj(1);
                for (std::size_t i = 0; i < n.value.size(); ++i) {
                    const std::size_t ia = a.size() == 1 ? 0 : i;
                    const std::size_t ib = b.size() == 1 ? 0 : i;
                    acc(ga, ia, g[i] * b[ib], prec);
                    acc(gb, ib, g[i] * a[ia], prec);
                }
                break;
            }
            case Op::div: {
                const auto& a = in_val(0);
                const auto& b = in_val(1);
                auto& ga = in_adj(0);
                auto& gb = in_adj(1);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const std::size_t ib = b.size() == 1 ? 0 : i;
                    acc(ga, i, g[i] / b[ib], prec);
                    acc(gb, ib, -g[i] * a[i] / (b[ib] * b[ib]), prec);
                }
                break;
            }
            case Op::weighted_sum: {
                for (std::size_t j = 0; j < n.inputs.size(); ++j) {
                    auto& gx = in_adj(j);
                    const double c = n.coeffs[j];
                    for (std::size_t i = 0; i < n.value.size(); ++i) acc(gx, i, c * g[i], prec);
                }
                break;
            }
            case Op::matvec: {
                const auto& w = in_val(0);
                const auto& x = in_val(1);
                auto& gw = in_adj(0);
                auto& gx = in_adj(1);
                for (int r = 0; r < n.rows; ++r) {
                    const double gr = g[static_cast<std::size_t>(r)];
                    const std::size_t base = static_cast<std::size_t>(r) * n.cols;
                    for (int c = 0; c < n.cols; ++c) {
                        acc(gw, base + c, gr * x[static_cast<std::size_t>(c)], prec);
                        acc(gx, static_cast<std::size_t>(c), gr * w[base + c], prec);
                    }
                }
                break;
            }
            case Op::norm: {
                const auto& x = in_val(0);
                auto& gx = in_adj(0);
                const double r = n.value[0];
                if (r < 1e-15) break;  // non-smooth at the origin
                for (std::size_t i = 0; i < x.size(); ++i) acc(gx, i, g[0] * x[i] / r, prec);
                break;
            }
            case Op::hinge: {
                const auto& x = in_val(0);
                auto& gx = in_adj(0);
                for (std::size_t i = 0; i < x.size(); ++i)
                    if (x[i] > 0.0) acc(gx, i, g[i], prec);
                break;
            }
        }
    }

    GradBuffer out;
    for (int id = 0; id < size(); ++id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.op != Op::leaf || !n.requires_grad) continue;
        out.leaf_ids.push_back(id);
        auto& a = adj[static_cast<std::size_t>(id)];
        if (a.empty()) a.assign(n.value.size(), 0.0);
        out.grads.push_back(std::move(a));
    }
    return out;
}

namespace {

GradCheckReport run_check(Tape& tape, const GradBuffer& grads, double h, double tol,
                          Precision prec) {
    GradCheckReport rep;
    rep.h = h;
    rep.tol = tol;
    const int out = tape.output();
    for (std::size_t li = 0; li < grads.leaf_ids.size(); ++li) {
        const int leaf = grads.leaf_ids[li];
        const auto base = tape.value(leaf);
        std::vector<double> probe = base;
        for (std::size_t i = 0; i < base.size(); ++i) {
            probe[i] = base[i] + h;
            tape.set_leaf(leaf, probe);
            tape.recompute(prec);
            const double fp = tape.scalar_value(out);
            probe[i] = base[i] - h;
            tape.set_leaf(leaf, probe);
            tape.recompute(prec);
            const double fm = tape.scalar_value(out);
            probe[i] = base[i];
            const double fd = (fp - fm) / (2.0 * h);
            const double adv = grads.grads[li][i];
            const double rel = std::abs(fd - adv) / std::max({1.0, std::abs(fd), std::abs(adv)});
            ++rep.coords_checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = {leaf, static_cast<int>(i), fd, adv, rel};
            }
        }
        tape.set_leaf(leaf, base);
    }
    tape.recompute(prec);
    rep.passed = rep.max_rel_err < tol;
    return rep;
}

}  // namespace

GradCheckReport grad_check(Tape& tape, double h, double tol, Precision prec) {
    tape.recompute(prec);
    const GradBuffer grads = tape.backward(prec);
    return run_check(tape, grads, h, tol, prec);
}

GradCheckReport grad_check_against(Tape& tape, const GradBuffer& grads, double h, double tol,
                                   Precision prec) {
    tape.recompute(prec);
    return run_check(tape, grads, h, tol, prec);
}

}  // namespace hgch::ad
