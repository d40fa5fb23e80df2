#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hgch/geometry.hpp"
#include "hgch/rng.hpp"

#define CHECK_NEAR(a, b, tol)                  \
    do {                                       \
        const double na_ = (a), nb_ = (b);     \
        CAPTURE(na_);                          \
        CAPTURE(nb_);                          \
        CHECK(std::abs(na_ - nb_) <= (tol));   \
    } while (0)

using namespace hgch;
using namespace hgch::geom;

namespace {

BallPoint bp(std::vector<double> v, double k = 1.0) { return {std::move(v), Curvature(k)}; }

// random point with norm <= frac * sqrt(k)
BallPoint random_point(Rng& rng, int dim, double k, double frac) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double target = frac * std::sqrt(k) * rng.uniform();
    const double n = norm(v);
    for (auto& x : v) x *= target / (n > 0 ? n : 1.0);
    return bp(std::move(v), k);
}

TangentVec random_tangent(Rng& rng, int dim, double max_norm) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    const double target = max_norm * rng.uniform();
    const double n = norm(v);
    for (auto& x : v) x *= target / (n > 0 ? n : 1.0);
    return {std::move(v)};
}

}  // namespace

TEST_CASE("distance of (0.5,0) and (-0.5,0) at k=1 is ln 9") {
    const double d = dist(bp({0.5, 0.0}), bp({-0.5, 0.0}));
    CHECK_NEAR(d, 2.1972245773362196, 1e-12);
    // same value through the geodesic parametrization: 2 artanh(r) per endpoint
    CHECK_NEAR(d, 4.0 * std::atanh(0.5), 1e-9);
}

TEST_CASE("distance is symmetric, zero on the diagonal, nonnegative") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_point(rng, 8, 1.0, 0.95);
        const auto y = random_point(rng, 8, 1.0, 0.95);
        CHECK(dist(x, y) == dist(y, x));  // bitwise: formula is symmetric
        CHECK(dist(x, y) >= 0.0);
        CHECK(dist(x, x) == 0.0);
    }
}

TEST_CASE("triangle inequality holds on random triples") {
    Rng rng(11);
    for (int t = 0; t < 1000; ++t) {
        const auto x = random_point(rng, 6, 1.0, 0.9);
        const auto y = random_point(rng, 6, 1.0, 0.9);
        const auto z = random_point(rng, 6, 1.0, 0.9);
        CHECK(dist(x, z) <= dist(x, y) + dist(y, z) + 1e-9);
    }
}

TEST_CASE("distance input validation") {
    CHECK_THROWS_AS((void)dist(bp({0.1, 0.0}), bp({0.1})), std::invalid_argument);
    CHECK_THROWS_AS((void)dist(bp({0.1, 0.0}, 1.0), bp({0.1, 0.0}, 2.0)), std::invalid_argument);
    CHECK_THROWS_AS((void)dist(bp({1.5, 0.0}), bp({0.0, 0.0})), std::invalid_argument);
}

TEST_CASE("curvature must be positive and finite") {
    CHECK_THROWS_AS(Curvature(0.0), std::invalid_argument);
    CHECK_THROWS_AS(Curvature(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(Curvature(std::nan("")), std::invalid_argument);
}

TEST_CASE("scale consistency between curvatures") {
    // d_k(x, y) = sqrt(k) * d_1(x / sqrt(k), y / sqrt(k))
    Rng rng(13);
    for (double k : {0.25, 1.0, 2.0, 4.0}) {
        const double s = std::sqrt(k);
        for (int t = 0; t < 50; ++t) {
            auto x = random_point(rng, 5, k, 0.9);
            auto y = random_point(rng, 5, k, 0.9);
            auto xs = x.coords;
            auto ys = y.coords;
            for (auto& v : xs) v /= s;
            for (auto& v : ys) v /= s;
            const double lhs = dist(x, y);
            const double rhs = s * dist(bp(xs, 1.0), bp(ys, 1.0));
            CHECK_NEAR(lhs, rhs, 1e-9);
        }
    }
}

TEST_CASE("exp_o oracle values") {
    const auto y = exp_o({{0.5, 0.0}}, Curvature(1.0));
    CHECK_NEAR(y.coords[0], 0.46211715726000974, 1e-15);
    CHECK(y.coords[1] == 0.0);

    const auto o = exp_o({{0.0, 0.0, 0.0}}, Curvature(1.0));
    for (double v : o.coords) CHECK(v == 0.0);
}

TEST_CASE("exp_o always lands strictly inside the ball") {
    Rng rng(17);
    for (double k : {0.5, 1.0, 3.0}) {
        for (int t = 0; t < 200; ++t) {
            const auto v = random_tangent(rng, 7, 20.0);
            const auto y = exp_o(v, Curvature(k));
            CHECK(sq_norm(y.coords) < k);
        }
    }
}

TEST_CASE("log_o inverts exp_o for moderate tangent norms") {
    Rng rng(19);
    for (double k : {0.5, 1.0, 2.0}) {
        for (int t = 0; t < 300; ++t) {
            const auto v = random_tangent(rng, 6, 3.0);
            const auto back = log_o(exp_o(v, Curvature(k)));
            for (std::size_t i = 0; i < v.coords.size(); ++i)
                CHECK_NEAR(back.coords[i], v.coords[i], 1e-9);
        }
    }
}

TEST_CASE("log_o rejects points outside the ball") {
    CHECK_THROWS_AS((void)log_o(bp({1.0, 0.5})), std::invalid_argument);
}

TEST_CASE("mobius scalar oracle and identities") {
    const auto y = bp({std::tanh(1.0), 0.0});
    const auto half = mobius_scalar(0.5, y);
    CHECK_NEAR(half.coords[0], std::tanh(0.5), 1e-15);
    CHECK(half.coords[1] == 0.0);

    Rng rng(23);
    for (int t = 0; t < 50; ++t) {
        const auto p = random_point(rng, 5, 1.0, 0.9);
        const auto same = mobius_scalar(1.0, p);
        const auto zero = mobius_scalar(0.0, p);
        for (std::size_t i = 0; i < p.coords.size(); ++i) {
            CHECK_NEAR(same.coords[i], p.coords[i], 1e-12);
            CHECK(zero.coords[i] == 0.0);
        }
    }
}

TEST_CASE("mobius scalar composes multiplicatively along a geodesic") {
    // (a*b) (x) y == a (x) (b (x) y)
    Rng rng(29);
    for (int t = 0; t < 50; ++t) {
        const auto p = random_point(rng, 4, 1.0, 0.7);
        const auto lhs = mobius_scalar(0.75, p);
        const auto rhs = mobius_scalar(0.5, mobius_scalar(1.5, p));
        for (std::size_t i = 0; i < p.coords.size(); ++i)
            CHECK_NEAR(lhs.coords[i], rhs.coords[i], 1e-12);
    }
}

TEST_CASE("conformal factor oracle and monotonicity") {
    CHECK(conformal_factor(bp({0.0, 0.0})) == 2.0);
    CHECK_NEAR(conformal_factor(bp({0.5, 0.0})), 2.6666666666666665, 1e-15);
    // strictly increasing in the norm: larger embeddings weigh more in the
    // gyromidpoint numerator
    double prev = 0.0;
    for (double r = 0.0; r < 0.95; r += 0.05) {
        const double lam = conformal_factor(bp({r, 0.0}));
        CHECK(lam > prev);
        prev = lam;
    }
}

TEST_CASE("gyromidpoint of a single point is that point") {
    Rng rng(31);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_point(rng, 6, 1.0, 0.95);
        const std::vector<BallPoint> pts{p};
        const auto m = gyromidpoint(pts);
        for (std::size_t i = 0; i < p.coords.size(); ++i)
            CHECK_NEAR(m.coords[i], p.coords[i], 1e-12);
    }
}

TEST_CASE("gyromidpoint of antipodal points with unit weights is the origin") {
    Rng rng(37);
    for (int t = 0; t < 100; ++t) {
        const auto p = random_point(rng, 6, 1.0, 0.95);
        auto q = p;
        for (auto& v : q.coords) v = -v;
        const std::vector<BallPoint> pts{p, q};
        const auto m = gyromidpoint(pts);
        for (double v : m.coords) CHECK(std::abs(v) < 1e-12);
    }
}

TEST_CASE("equal-weight gyromidpoint is equidistant from both points") {
    Rng rng(41);
    for (int t = 0; t < 100; ++t) {
        const auto x = random_point(rng, 5, 1.0, 0.9);
        const auto y = random_point(rng, 5, 1.0, 0.9);
        const std::vector<BallPoint> pts{x, y};
        const auto m = gyromidpoint(pts);
        CHECK_NEAR(dist(m, x), dist(m, y), 1e-9);
    }
}

TEST_CASE("gyromidpoint is invariant to input ordering") {
    Rng rng(43);
    std::vector<BallPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 20; ++i) {
        pts.push_back(random_point(rng, 4, 1.0, 0.9));
        w.push_back(rng.uniform(0.5, 2.0));
    }
    const auto m1 = gyromidpoint(pts, w);
    // rotate the input order
    std::vector<BallPoint> pts2(pts.begin() + 7, pts.end());
    pts2.insert(pts2.end(), pts.begin(), pts.begin() + 7);
    std::vector<double> w2(w.begin() + 7, w.end());
    w2.insert(w2.end(), w.begin(), w.begin() + 7);
    const auto m2 = gyromidpoint(pts2, w2);
    for (std::size_t i = 0; i < m1.coords.size(); ++i)
        CHECK_NEAR(m1.coords[i], m2.coords[i], 1e-12);
}

TEST_CASE("gyromidpoint stays in the ball for large batches near the boundary") {
    Rng rng(47);
    std::vector<BallPoint> pts;
    std::vector<double> w;
    for (int i = 0; i < 10000; ++i) {
        pts.push_back(random_point(rng, 3, 1.0, 0.999));
        w.push_back(rng.uniform(0.1, 10.0));
    }
    const auto m = gyromidpoint(pts, w);
    CHECK(in_ball(m.coords, Curvature(1.0)));
}

TEST_CASE("gyromidpoint input validation") {
    CHECK_THROWS_AS((void)gyromidpoint({}), std::invalid_argument);
    const std::vector<BallPoint> pts{bp({0.1, 0.0}), bp({0.2, 0.0})};
    const std::vector<double> bad_len{1.0};
    CHECK_THROWS_AS((void)gyromidpoint(pts, bad_len), std::invalid_argument);
    const std::vector<double> bad_w{1.0, 0.0};
    CHECK_THROWS_AS((void)gyromidpoint(pts, bad_w), std::invalid_argument);
}

TEST_CASE("stable arcosh(1+z) keeps precision for tiny z") {
    CHECK(stable_acosh1p(0.0) == 0.0);
    const double z = 1e-18;
    CHECK(stable_acosh1p(z) == doctest::Approx(std::sqrt(2.0 * z)).epsilon(1e-6));
    CHECK_NEAR(stable_acosh1p(3.0), std::acosh(4.0), 1e-14);
}
