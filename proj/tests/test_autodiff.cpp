#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "hgch/autodiff.hpp"
#include "hgch/rng.hpp"

using namespace hgch;
using namespace hgch::ad;

namespace {

std::vector<double> random_vec(Rng& rng, int dim, double max_norm) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    const double target = max_norm * (0.1 + 0.9 * rng.uniform());
    for (auto& x : v) x *= target / (n > 0 ? n : 1.0);
    return v;
}

// contract an arbitrary node to a scalar through a fixed random row so the
// whole Jacobian is exercised by one backward pass
int scalarize(Tape& t, int node, Rng& rng) {
    const int dim = static_cast<int>(t.value(node).size());
    if (dim == 1) return node;
    std::vector<double> row(dim);
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
    return t.matvec(t.constant(row), node, 1, dim);
}

void expect_fd_match(Tape& t, int out, double tol = 1e-6) {
    t.set_output(out);
    const auto rep = grad_check(t, 1e-6, tol);
    CAPTURE(rep.max_rel_err);
    CAPTURE(rep.worst.leaf);
    CAPTURE(rep.worst.index);
    CAPTURE(rep.worst.fd);
    CAPTURE(rep.worst.ad);
    CHECK(rep.passed);
}

}  // namespace

TEST_CASE("record of trivial primitives caches forward values") {
    Tape t;
    const int a = t.leaf({1.0});
    const int b = t.leaf({2.0});
    const int ids[] = {a, b};
    const int s = t.record("sum", ids);
    CHECK(t.scalar_value(s) == 3.0);

    const int x = t.leaf({-0.5});
    const int one[] = {x};
    CHECK(t.scalar_value(t.record("hinge", one)) == 0.0);
}

TEST_CASE("unknown primitives and bad ids are rejected") {
    Tape t;
    const int a = t.leaf({1.0});
    const int ids[] = {a};
    CHECK_THROWS_AS((void)t.record("frobnicate", ids), std::invalid_argument);
    CHECK_THROWS_AS((void)t.sigmoid(42), std::invalid_argument);
    CHECK_THROWS_AS((void)t.sigmoid(-1), std::invalid_argument);
}

TEST_CASE("output must be a scalar and must be set before backward") {
    Tape t;
    const int v = t.leaf({1.0, 2.0}, true);
    CHECK_THROWS_AS(t.set_output(v), std::invalid_argument);
    CHECK_THROWS_AS((void)t.backward(), std::invalid_argument);
}

TEST_CASE("exp_o gradient matches central differences") {
    Rng rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const int v = t.leaf(random_vec(rng, 5, 2.5), true);
        expect_fd_match(t, scalarize(t, t.exp_o(v, trial % 2 ? 1.0 : 0.7), rng));
    }
}

TEST_CASE("log_o gradient matches central differences") {
    Rng rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const int y = t.leaf(random_vec(rng, 5, 0.9), true);
        expect_fd_match(t, scalarize(t, t.log_o(y, 1.0), rng));
    }
}

TEST_CASE("mobius_scalar gradient matches central differences") {
    Rng rng(107);
    for (double a : {0.5, -0.7, 2.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            Tape t;
            const int y = t.leaf(random_vec(rng, 4, 0.8), true);
            expect_fd_match(t, scalarize(t, t.mobius_scalar(a, y, 1.0), rng));
        }
    }
}

TEST_CASE("conformal_factor gradient matches central differences") {
    Rng rng(109);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const int x = t.leaf(random_vec(rng, 6, 0.9), true);
        expect_fd_match(t, t.conformal_factor(x, 1.25));
    }
}

TEST_CASE("dist and sq_dist gradients match central differences") {
    Rng rng(113);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        const int x = t.leaf(random_vec(rng, 5, 0.8), true);
        const int y = t.leaf(random_vec(rng, 5, 0.8), true);
        expect_fd_match(t, trial % 2 ? t.dist(x, y, 1.0) : t.sq_dist(x, y, 1.0), 1e-5);
    }
}

TEST_CASE("sigmoid, mul, div, weighted_sum, matvec, norm, hinge match central differences") {
    Rng rng(127);
    for (int trial = 0; trial < 20; ++trial) {
        {
            Tape t;
            const int x = t.leaf(random_vec(rng, 5, 3.0), true);
            expect_fd_match(t, scalarize(t, t.sigmoid(x), rng));
        }
        {
            Tape t;  // elementwise product and scalar broadcast
            const int a = t.leaf(random_vec(rng, 4, 2.0), true);
            const int b = t.leaf(random_vec(rng, 4, 2.0), true);
            const int s = t.leaf({rng.uniform(0.5, 2.0)}, true);
            expect_fd_match(t, scalarize(t, t.mul(t.mul(a, b), s), rng));
        }
        {
            Tape t;  // quotient with vector and scalar divisors
            const int a = t.leaf(random_vec(rng, 4, 2.0), true);
            auto bv = random_vec(rng, 4, 1.0);
            for (auto& v : bv) v += v >= 0 ? 1.0 : -1.0;  // keep away from zero
            const int b = t.leaf(bv, true);
            const int s = t.leaf({rng.uniform(1.0, 2.0)}, true);
            expect_fd_match(t, scalarize(t, t.div(t.div(a, b), s), rng));
        }
        {
            Tape t;
            const int a = t.leaf(random_vec(rng, 5, 2.0), true);
            const int b = t.leaf(random_vec(rng, 5, 2.0), true);
            const int c = t.leaf(random_vec(rng, 5, 2.0), true);
            const int xs[] = {a, b, c};
            const double cs[] = {1.0, -2.5, 0.75};
            expect_fd_match(t, scalarize(t, t.weighted_sum(xs, cs), rng));
        }
        {
            Tape t;
            const int w = t.leaf(random_vec(rng, 12, 3.0), true);
            const int x = t.leaf(random_vec(rng, 4, 2.0), true);
            expect_fd_match(t, scalarize(t, t.matvec(w, x, 3, 4), rng));
        }
        {
            Tape t;
            const int x = t.leaf(random_vec(rng, 5, 2.0), true);
            expect_fd_match(t, t.norm(x));
        }
        {
            Tape t;  // hinge probed away from the kink
            auto xv = random_vec(rng, 4, 2.0);
            for (auto& v : xv)
                if (std::abs(v) < 1e-2) v = 0.5;
            const int x = t.leaf(xv, true);
            expect_fd_match(t, scalarize(t, t.hinge(x), rng));
        }
    }
}

TEST_CASE("gyromidpoint gradient flows through its composition") {
    Rng rng(131);
    for (int trial = 0; trial < 20; ++trial) {
        Tape t;
        std::vector<int> pts;
        for (int i = 0; i < 3; ++i) pts.push_back(t.leaf(random_vec(rng, 4, 0.8), true));
        const std::vector<double> w{1.0, 2.0, 0.5};
        expect_fd_match(t, scalarize(t, t.gyromidpoint(pts, w, 1.0), rng), 1e-5);
    }
}

TEST_CASE("pure quadratic loss gradient is exact to 1e-8") {
    Tape t;
    const int v = t.leaf({1.0, -2.0, 0.5}, true);
    const int sq = t.mul(v, v);
    const std::vector<double> ones(3, 1.0);
    t.set_output(t.matvec(t.constant(ones), sq, 1, 3));
    const auto rep = grad_check(t, 1e-6, 1e-8);
    CHECK(rep.passed);
    CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("constant loss has all-zero gradients and zero reported error") {
    Tape t;
    const int x = t.leaf({0.3}, true);
    const int xs[] = {x};
    const double cs[] = {0.0};
    t.set_output(t.weighted_sum(xs, cs));
    const auto rep = grad_check(t, 1e-6, 1e-12);
    CHECK(rep.passed);
    CHECK(rep.max_rel_err == 0.0);
    CHECK(t.backward().at(x)[0] == 0.0);
}

TEST_CASE("squared distance between coincident mapped points has zero gradient") {
    Tape t;
    const std::vector<double> same{0.2, -0.1, 0.4};
    const int u = t.leaf(same, true);
    const int w = t.leaf(same, true);
    t.set_output(t.sq_dist(t.exp_o(u, 1.0), t.exp_o(w, 1.0), 1.0));
    const auto g = t.backward();
    for (double v : g.at(u)) CHECK(v == 0.0);
    for (double v : g.at(w)) CHECK(v == 0.0);
}

TEST_CASE("hinge subgradient at the kink is zero") {
    Tape t;
    const int x = t.leaf({0.0}, true);
    t.set_output(t.hinge(x));
    CHECK(t.backward().at(x)[0] == 0.0);
}

TEST_CASE("backward is linear over shared tapes") {
    Tape t;
    const int u = t.leaf({0.3, -0.2, 0.1}, true);
    const int v = t.leaf({1.0, 0.5, -0.4}, true);
    const int target = t.constant({0.5, 0.1, -0.3});
    const int f = t.sq_dist(t.exp_o(u, 1.0), target, 1.0);
    const std::vector<double> ones(3, 1.0);
    const int g = t.matvec(t.constant(ones), t.mul(v, v), 1, 3);

    t.set_output(f);
    const auto gf = t.backward();
    t.set_output(g);
    const auto gg = t.backward();
    const int fg[] = {f, g};
    const double ab[] = {2.0, 0.5};  // powers of two: scaling is exact
    t.set_output(t.weighted_sum(fg, ab));
    const auto gmix = t.backward();

    for (int i = 0; i < 3; ++i) {
        CHECK(gmix.at(u)[i] == 2.0 * gf.at(u)[i]);
        CHECK(gmix.at(v)[i] == 0.5 * gg.at(v)[i]);
        // disjoint paths: f never touches v and g never touches u
        CHECK(gf.at(v)[i] == 0.0);
        CHECK(gg.at(u)[i] == 0.0);
    }
}

TEST_CASE("repeated backward calls are bit-identical") {
    Rng rng(137);
    Tape t;
    const int u = t.leaf(random_vec(rng, 6, 0.5), true);
    const int w = t.leaf(random_vec(rng, 6, 0.5), true);
    t.set_output(t.sq_dist(t.exp_o(u, 1.0), t.exp_o(w, 1.0), 1.0));
    const auto g1 = t.backward();
    const auto g2 = t.backward();
    REQUIRE(g1.grads.size() == g2.grads.size());
    for (std::size_t i = 0; i < g1.grads.size(); ++i)
        CHECK(std::memcmp(g1.grads[i].data(), g2.grads[i].data(),
                          g1.grads[i].size() * sizeof(double)) == 0);
}

TEST_CASE("an injected wrong adjoint fails with a localized report") {
    Tape t;
    const int u = t.leaf({0.3, -0.2}, true);
    const int w = t.leaf({-0.1, 0.25}, true);
    t.set_output(t.sq_dist(t.exp_o(u, 1.0), t.exp_o(w, 1.0), 1.0));
    auto grads = t.backward();
    grads.grads[0][1] += 0.5;  // corrupt leaf u, coordinate 1
    const auto rep = grad_check_against(t, grads, 1e-6, 1e-4);
    CHECK(!rep.passed);
    CHECK(rep.worst.leaf == u);
    CHECK(rep.worst.index == 1);
}

TEST_CASE("truncate drops batch heads and keeps the prefix intact") {
    Tape t;
    const int u = t.leaf({0.1, 0.2}, true);
    const int mapped = t.exp_o(u, 1.0);
    const int mark = t.size();
    const auto before = t.value(mapped);
    t.set_output(t.norm(mapped));
    t.truncate(mark);
    CHECK(t.size() == mark);
    CHECK(t.output() == -1);
    t.recompute();
    CHECK(t.value(mapped) == before);
}

TEST_CASE("float32 mode passes with a relaxed tolerance") {
    Rng rng(139);
    Tape t;
    const int u = t.leaf(random_vec(rng, 4, 0.6), true);
    const int w = t.leaf(random_vec(rng, 4, 0.6), true);
    t.set_output(t.sq_dist(t.exp_o(u, 1.0), t.exp_o(w, 1.0), 1.0));
    const auto rep = grad_check(t, 1e-3, 1e-2, Precision::f32);
    CAPTURE(rep.max_rel_err);
    CHECK(rep.passed);
}

TEST_CASE("composite hyperbolic chain matches central differences") {
    Rng rng(149);
    for (int trial = 0; trial < 5; ++trial) {
        Tape t;
        std::vector<int> balls;
        for (int i = 0; i < 3; ++i) balls.push_back(t.exp_o(t.leaf(random_vec(rng, 4, 1.0), true), 1.0));
        const std::vector<double> w{1.0, 1.0, 1.0};
        const int mid = t.gyromidpoint(balls, w, 1.0);
        const int tangent = t.log_o(mid, 1.0);
        const int other = t.exp_o(t.leaf(random_vec(rng, 4, 1.0), true), 1.0);
        const int d2 = t.sq_dist(t.exp_o(tangent, 1.0), other, 1.0);
        const int margin[] = {d2, t.constant(0.37)};
        const double mc[] = {1.0, -1.0};
        t.set_output(t.hinge(t.weighted_sum(margin, mc)));
        if (std::abs(t.scalar_value(t.output())) < 1e-3) continue;  // skip near the kink
        const auto rep = grad_check(t, 1e-6, 1e-4);
        CAPTURE(rep.max_rel_err);
        CHECK(rep.passed);
    }
}
