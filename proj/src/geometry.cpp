#include "hgch/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace hgch::geom {

namespace {

void check_point(const BallPoint& x) {
    if (!in_ball(x.coords, x.curv))
        throw std::invalid_argument("point outside the Poincare ball");
}

void check_pair(const BallPoint& x, const BallPoint& y) {
    if (x.coords.size() != y.coords.size())
        throw std::invalid_argument("dimension mismatch");
    if (!(x.curv == y.curv))
        throw std::invalid_argument("curvature mismatch");
    check_point(x);
    check_point(y);
}

}  // namespace

Curvature::Curvature(double k) : k_(k), sqrt_k_(std::sqrt(k)) {
    if (!(k > 0.0) || !std::isfinite(k))
        throw std::invalid_argument("curvature parameter k must be positive and finite");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double sq_norm(std::span<const double> v) { return dot(v, v); }

double norm(std::span<const double> v) { return std::sqrt(sq_norm(v)); }

double stable_acosh1p(double z) {
    if (z < 0.0) z = 0.0;
    return std::log1p(z + std::sqrt(z * (z + 2.0)));
}

double clamped_artanh(double t) {
    if (t < 0.0) t = 0.0;
    const double hi = 1.0 - kArtanhClamp;
    if (t > hi) t = hi;
    return std::atanh(t);
}

bool in_ball(std::span<const double> x, Curvature c) {
    return sq_norm(x) < c.k();
}

void project_to_ball(std::span<double> x, Curvature c) {
    const double max_norm = c.sqrt_k() * (1.0 - kBallMargin);
    const double n2 = sq_norm(x);
    if (n2 > max_norm * max_norm) {
        const double scale = max_norm / std::sqrt(n2);
        for (double& v : x) v *= scale;
    }
}

namespace raw {

double dist_z(std::span<const double> x, std::span<const double> y, double k) {
    double diff2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        diff2 += d * d;
    }
    return 2.0 * k * diff2 / ((k - sq_norm(x)) * (k - sq_norm(y)));
}

double dist(std::span<const double> x, std::span<const double> y, double k) {
    return std::sqrt(k) * stable_acosh1p(dist_z(x, y, k));
}

double sq_dist(std::span<const double> x, std::span<const double> y, double k) {
    const double a = stable_acosh1p(dist_z(x, y, k));
    return k * a * a;
}

void exp_o(std::span<const double> v, double k, std::span<double> out) {
    const double s = std::sqrt(k);
    const double n = norm(v);
    if (n < 1e-15) {
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
        return;
    }
    const double scale = s * std::tanh(n / s) / n;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = scale * v[i];
    project_to_ball(out, Curvature(k));
}

void log_o(std::span<const double> y, double k, std::span<double> out) {
    const double s = std::sqrt(k);
    const double r = norm(y);
    if (r < 1e-15) {
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i];
        return;
    }
    const double scale = s * clamped_artanh(r / s) / r;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * y[i];
}

void mobius_scalar(double a, std::span<const double> y, double k, std::span<double> out) {
    const double s = std::sqrt(k);
    const double r = norm(y);
    if (r < 1e-15) {
        for (std::size_t i = 0; i < y.size(); ++i) out[i] = a * y[i];
        return;
    }
    const double scale = s * std::tanh(a * clamped_artanh(r / s)) / r;
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * y[i];
    project_to_ball(out, Curvature(k));
}

double conformal_factor(std::span<const double> x, double k) {
    return 2.0 / (1.0 - sq_norm(x) / k);
}

}  // namespace raw

double dist(const BallPoint& x, const BallPoint& y) {
    check_pair(x, y);
    return raw::dist(x.coords, y.coords, x.curv.k());
}

double sq_dist(const BallPoint& x, const BallPoint& y) {
    check_pair(x, y);
    return raw::sq_dist(x.coords, y.coords, x.curv.k());
}

BallPoint exp_o(const TangentVec& v, Curvature c) {
    BallPoint out{std::vector<double>(v.coords.size()), c};
    raw::exp_o(v.coords, c.k(), out.coords);
    return out;
}

TangentVec log_o(const BallPoint& y) {
    check_point(y);
    TangentVec out{std::vector<double>(y.coords.size())};
    raw::log_o(y.coords, y.curv.k(), out.coords);
    return out;
}

BallPoint mobius_scalar(double a, const BallPoint& y) {
    check_point(y);
    BallPoint out{std::vector<double>(y.coords.size()), y.curv};
    raw::mobius_scalar(a, y.coords, y.curv.k(), out.coords);
    return out;
}

double conformal_factor(const BallPoint& x) {
    check_point(x);
    return raw::conformal_factor(x.coords, x.curv.k());
}

BallPoint gyromidpoint(std::span<const BallPoint> points, std::span<const double> weights) {
    if (points.empty()) throw std::invalid_argument("gyromidpoint of an empty set");
    if (points.size() != weights.size())
        throw std::invalid_argument("gyromidpoint: points/weights size mismatch");
    const Curvature c = points[0].curv;
    const std::size_t dim = points[0].coords.size();
    for (const auto& p : points) {
        if (p.coords.size() != dim) throw std::invalid_argument("dimension mismatch");
        if (!(p.curv == c)) throw std::invalid_argument("curvature mismatch");
        check_point(p);
    }
    double denom = 0.0;
    std::vector<double> lam(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(weights[i] > 0.0)) throw std::invalid_argument("gyromidpoint weights must be positive");
        lam[i] = raw::conformal_factor(points[i].coords, c.k());
        denom += weights[i] * (lam[i] - 1.0);
    }
    // denom >= sum(weights) since lambda >= 2 inside the ball
    std::vector<double> u(dim, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double coef = weights[i] * lam[i] / denom;
        for (std::size_t j = 0; j < dim; ++j) u[j] += coef * points[i].coords[j];
    }
    BallPoint out{std::vector<double>(dim), c};
    raw::mobius_scalar(0.5, u, c.k(), out.coords);
    return out;
}

BallPoint gyromidpoint(std::span<const BallPoint> points) {
    std::vector<double> w(points.size(), 1.0);
    return gyromidpoint(points, w);
}

}  // namespace hgch::geom
