#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "hgch/autodiff.hpp"
#include "hgch/eval.hpp"
#include "hgch/geometry.hpp"
#include "hgch/hcg.hpp"
#include "hgch/model.hpp"
#include "hgch/rng.hpp"
#include "hgch/train.hpp"
#include "hgch/util.hpp"

using namespace hgch;
using namespace hgch::train;
using graph::Hcg;

#define CHECK_NEAR(a, b, tol)                    \
    do {                                         \
        const double a_ = (a), b_ = (b);         \
        CAPTURE(a_);                             \
        CAPTURE(b_);                             \
        CHECK(std::abs(a_ - b_) <= (tol));       \
    } while (0)

namespace {

// two users, three items, one item-item side relation; u0 holds i2 out for
// validation, so every user keeps a unique sampleable negative
graph::SplitDataset six_ds() {
    Hcg g = Hcg::make();
    g.node(Hcg::kUserType, "u0");
    g.node(Hcg::kUserType, "u1");
    g.node(Hcg::kItemType, "i0");
    g.node(Hcg::kItemType, "i1");
    g.node(Hcg::kItemType, "i2");
    g.interaction().edges = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}};
    g.relations.push_back({"also_view", Hcg::kItemType, Hcg::kItemType, {{0, 1}, {1, 2}}});
    graph::SplitDataset ds;
    ds.hcg = std::move(g);
    ds.train = {{0, 0}, {0, 1}, {1, 1}, {1, 2}};
    ds.validation = {{0, 2}};
    ds.test = {};
    return ds;
}

// adds a cross-type category relation: i0,i1 -> c0 and i2 -> c1
graph::SplitDataset cat_ds() {
    Hcg g = Hcg::make();
    g.node(Hcg::kUserType, "u0");
    g.node(Hcg::kUserType, "u1");
    g.node(Hcg::kItemType, "i0");
    g.node(Hcg::kItemType, "i1");
    g.node(Hcg::kItemType, "i2");
    const int cat = g.add_type("category");
    g.node(cat, "c0");
    g.node(cat, "c1");
    g.interaction().edges = {{0, 0}, {0, 1}, {1, 1}, {1, 2}};
    g.relations.push_back({"category", Hcg::kItemType, cat, {{0, 0}, {1, 0}, {2, 1}}});
    g.relations.push_back({"also_view", Hcg::kItemType, Hcg::kItemType, {{0, 1}, {1, 2}}});
    graph::SplitDataset ds;
    ds.hcg = std::move(g);
    ds.train = {{0, 0}, {0, 1}, {1, 1}, {1, 2}};
    ds.validation = {};
    ds.test = {};
    return ds;
}

model::ModelConfig small_model(int d = 4, int layers = 2) {
    model::ModelConfig c;
    c.d = d;
    c.layers = layers;
    return c;
}

TrainConfig quick_train(int epochs, double lr = 0.01) {
    TrainConfig c;
    c.max_epochs = epochs;
    c.lr = lr;
    c.patience = 1000;
    c.n_neg = 2;
    return c;
}

bool same_history(const std::vector<EpochStats>& a, const std::vector<EpochStats>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].train_loss != b[i].train_loss || a[i].val_recall10 != b[i].val_recall10 ||
            a[i].val_ndcg10 != b[i].val_ndcg10)
            return false;
    return true;
}

// independent distance oracle for sampler checks
double anchor_dist(const model::ModelParams& p, int a, int b, double k) {
    std::vector<double> xa(static_cast<std::size_t>(p.d)), xb(static_cast<std::size_t>(p.d));
    geom::raw::exp_o(p.embedding(a), k, xa);
    geom::raw::exp_o(p.embedding(b), k, xb);
    return geom::raw::dist(xa, xb, k);
}

model::ModelParams flat_params(int d, std::vector<double> rows) {
    model::ModelParams p;
    p.d = d;
    p.embeddings = std::move(rows);
    return p;
}

}  // namespace

TEST_CASE("cf_loss margin examples") {
    CHECK(cf_loss(-1.0, -2.0, 0.1) == 0.0);
    CHECK_NEAR(cf_loss(-2.0, -1.0, 0.1), 1.1, 1e-12);
    CHECK(cf_loss(0.5, 0.5, 0.0) == 0.0);
    CHECK(cf_loss(3.0, -1.0, 0.2) == 0.0);
    CHECK_NEAR(cf_loss(0.0, 0.0, 0.3), 0.3, 1e-15);
}

TEST_CASE("si_loss sums per-relation means") {
    CHECK(si_loss({}, {}) == 0.0);
    const std::vector<double> one = {0.3};
    const std::vector<int> rel_one = {1};
    CHECK(si_loss(one, rel_one) == 0.3);
    const std::vector<double> losses = {0.2, 0.4, 0.6};
    const std::vector<int> rels = {1, 1, 2};
    CHECK_NEAR(si_loss(losses, rels), 0.9, 1e-15);
}

TEST_CASE("train config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.margin_for("interaction") == 0.1);
    c.relation_margins["also_view"] = 0.3;
    CHECK(c.margin_for("also_view") == 0.3);
    CHECK(c.margin_for("friend") == 0.1);

    auto bad = [](auto mutate) {
        TrainConfig t;
        mutate(t);
        CHECK_THROWS_AS(t.validate(), ConfigError);
    };
    bad([](TrainConfig& t) { t.margin = -0.1; });
    bad([](TrainConfig& t) { t.relation_margins["x"] = -1.0; });
    bad([](TrainConfig& t) { t.aux_weight = -0.01; });
    bad([](TrainConfig& t) { t.n_neg = 0; });
    bad([](TrainConfig& t) { t.lr = -1e-3; });
    bad([](TrainConfig& t) { t.batch_size = 0; });
    bad([](TrainConfig& t) { t.max_epochs = 0; });
    bad([](TrainConfig& t) { t.patience = 0; });
    bad([](TrainConfig& t) { t.beta1 = 1.0; });
    bad([](TrainConfig& t) { t.beta2 = -0.1; });
    bad([](TrainConfig& t) { t.eps = 0.0; });
    bad([](TrainConfig& t) { t.threads = -1; });

    CHECK(sampling_from_string("hyperbolic") == Sampling::hyperbolic);
    CHECK(sampling_from_string("uniform") == Sampling::uniform);
    CHECK(to_string(Sampling::uniform) == "uniform");
    CHECK_THROWS_AS(sampling_from_string("euclidean"), ConfigError);
}

TEST_CASE("sample_negative returns the hyperbolic argmin") {
    // anchor at the origin, candidates at radii 0.9, 0.1, 0.5
    const auto p = flat_params(2, {0.0, 0.0, 0.9, 0.0, 0.1, 0.0, 0.5, 0.0});
    const std::vector<int> pool = {1, 2, 3};
    Rng rng(1);
    // n_neg covers the pool: every candidate considered, no randomness left
    CHECK(sample_negative(p, 0, pool, {}, 3, 1.0, Sampling::hyperbolic, rng) == 2);
    CHECK(sample_negative(p, 0, pool, {}, 50, 1.0, Sampling::hyperbolic, rng) == 2);

    // brute-force oracle over the same candidates
    int best = pool[0];
    for (int c : pool)
        if (anchor_dist(p, 0, c, 1.0) < anchor_dist(p, 0, best, 1.0)) best = c;
    CHECK(best == 2);

    // excluding the argmin promotes the next closest
    const std::vector<int> excl = {2};
    CHECK(sample_negative(p, 0, pool, excl, 3, 1.0, Sampling::hyperbolic, rng) == 3);
}

TEST_CASE("sample_negative breaks distance ties by draw order") {
    // candidates symmetric about the anchor: identical distances
    const auto p = flat_params(2, {0.0, 0.0, 0.5, 0.0, -0.5, 0.0});
    const std::vector<int> pool = {1, 2};
    Rng rng(3);
    CHECK(anchor_dist(p, 0, 1, 1.0) == anchor_dist(p, 0, 2, 1.0));
    // full-complement branch keeps ascending order, so the lower id wins
    CHECK(sample_negative(p, 0, pool, {}, 2, 1.0, Sampling::hyperbolic, rng) == 1);
}

TEST_CASE("sample_negative respects pool and exclusions") {
    Rng init(9);
    model::ModelParams p;
    p.d = 3;
    p.embeddings.resize(51 * 3);
    for (auto& x : p.embeddings) x = init.uniform(-0.4, 0.4);
    std::vector<int> pool;
    for (int i = 1; i <= 50; ++i) pool.push_back(i);
    const std::vector<int> excl = {3, 7, 8, 19, 20, 21, 40};

    Rng rng(17);
    for (int t = 0; t < 500; ++t) {
        const int neg = sample_negative(p, 0, pool, excl, 5, 1.0, Sampling::hyperbolic, rng);
        CHECK(!std::binary_search(excl.begin(), excl.end(), neg));
        CHECK(std::binary_search(pool.begin(), pool.end(), neg));
    }

    CHECK_THROWS_WITH_AS(
        (void)sample_negative(p, 0, excl, excl, 5, 1.0, Sampling::hyperbolic, rng),
        doctest::Contains("exhausted"), std::runtime_error);
}

TEST_CASE("uniform sampling equals a single-candidate draw") {
    Rng init(21);
    model::ModelParams p;
    p.d = 2;
    p.embeddings.resize(41 * 2);
    for (auto& x : p.embeddings) x = init.uniform(-0.5, 0.5);
    std::vector<int> pool;
    for (int i = 1; i <= 40; ++i) pool.push_back(i);
    const std::vector<int> excl = {4, 11, 30};

    Rng a(123), b(123);
    for (int t = 0; t < 100; ++t)
        CHECK(sample_negative(p, 0, pool, excl, 20, 1.0, Sampling::uniform, a) ==
              sample_negative(p, 0, pool, excl, 1, 1.0, Sampling::hyperbolic, b));
}

TEST_CASE("larger candidate sets pick closer negatives") {
    Rng init(77);
    model::ModelParams p;
    p.d = 4;
    p.embeddings.resize(201 * 4);
    for (auto& x : p.embeddings) x = init.uniform(-0.5, 0.5);
    std::vector<int> pool;
    for (int i = 1; i <= 200; ++i) pool.push_back(i);

    const auto mean_dist = [&](int n_neg, std::uint64_t seed) {
        Rng rng(seed);
        double sum = 0.0;
        for (int t = 0; t < 2000; ++t)
            sum += anchor_dist(
                p, 0, sample_negative(p, 0, pool, {}, n_neg, 1.0, Sampling::hyperbolic, rng), 1.0);
        return sum / 2000.0;
    };
    CHECK(mean_dist(20, 5) < mean_dist(1, 5));
    CHECK(mean_dist(20, 6) < mean_dist(5, 6));
}

TEST_CASE("record_loss matches hand-computed margins") {
    const auto ds = six_ds();
    const auto mcfg = small_model(3);
    const auto view = model::make_view(ds.hcg, ds.train, mcfg);
    Rng rng(11);
    const auto params = model::init_params(mcfg, view, rng);
    auto fb = model::build_forward(mcfg, view, params);
    const auto emb = model::forward_embeddings(mcfg, view, params);
    const auto row = [&](int n) {
        return std::span<const double>(emb).subspan(static_cast<std::size_t>(n) * 3, 3);
    };

    TrainConfig tcfg;
    tcfg.margin = 0.1;
    tcfg.relation_margins["also_view"] = 0.25;
    tcfg.aux_weight = 0.5;

    // global ids: users 0,1; items 2,3,4
    const std::vector<Triplet> batch = {
        {0, 3, 4, 0},
        {1, 4, 2, 0},
        {2, 3, 4, 1},
    };
    const int loss_id = record_loss(fb, mcfg, tcfg, view, batch);
    CHECK(fb.tape.output() == loss_id);

    const auto y = [&](int a, int b) { return model::score(row(a), row(b), 1.0); };
    const double cf_mean =
        0.5 * (cf_loss(y(0, 3), y(0, 4), 0.1) + cf_loss(y(1, 4), y(1, 2), 0.1));
    const double side = cf_loss(y(2, 3), y(2, 4), 0.25);
    CHECK_NEAR(fb.tape.scalar_value(loss_id), cf_mean + 0.5 * side, 1e-12);

    // a fresh head replaces the old one entirely
    const std::vector<Triplet> second = {{1, 3, 2, 0}};
    const int id2 = record_loss(fb, mcfg, tcfg, view, second);
    CHECK_NEAR(fb.tape.scalar_value(id2), cf_loss(y(1, 3), y(1, 2), 0.1), 1e-12);

    auto fb2 = model::build_forward(mcfg, view, params);
    const int fresh = record_loss(fb2, mcfg, tcfg, view, second);
    CHECK(fb.tape.size() == fb2.tape.size());
    CHECK(fb.tape.scalar_value(id2) == fb2.tape.scalar_value(fresh));

    // empty batch contributes a constant zero
    const int zero_id = record_loss(fb, mcfg, tcfg, view, {});
    CHECK(fb.tape.scalar_value(zero_id) == 0.0);
}

TEST_CASE("loss head gradients match finite differences") {
    const auto ds = six_ds();
    const auto mcfg = small_model(3);
    const auto view = model::make_view(ds.hcg, ds.train, mcfg);
    Rng rng(5);
    const auto params = model::init_params(mcfg, view, rng);
    auto fb = model::build_forward(mcfg, view, params);

    TrainConfig tcfg;
    tcfg.margin = 0.4;
    const std::vector<Triplet> batch = {{0, 3, 4, 0}, {1, 4, 2, 0}, {2, 3, 4, 1}};
    record_loss(fb, mcfg, tcfg, view, batch);

    // every hinge argument sits far from the kink, so central differences are
    // trustworthy at h = 1e-6
    const auto emb = model::forward_embeddings(mcfg, view, params);
    const auto row = [&](int n) {
        return std::span<const double>(emb).subspan(static_cast<std::size_t>(n) * 3, 3);
    };
    for (const auto& t : batch) {
        const double arg = model::score(row(t.anchor), row(t.negative), 1.0) -
                           model::score(row(t.anchor), row(t.positive), 1.0) + 0.4;
        CHECK(std::abs(arg) > 1e-2);
    }

    const auto report = ad::grad_check(fb.tape, 1e-6, 1e-4);
    CAPTURE(report.max_rel_err);
    CHECK(report.passed);
    CHECK(report.coords_checked > 0);
}

TEST_CASE("zero learning rate keeps parameters bit-identical") {
    const auto ds = six_ds();
    const auto mcfg = small_model();
    const auto view = model::make_view(ds.hcg, ds.train, mcfg);
    Rng rng(42);
    const auto expected = model::init_params(mcfg, view, rng);

    auto tcfg = quick_train(3, 0.0);
    tcfg.seed = 42;
    const auto res = train::train(mcfg, tcfg, ds);
    CHECK(res.history.size() == 3);
    CHECK(res.best_params.embeddings == expected.embeddings);
    CHECK(res.best_params.gates == expected.gates);
}

TEST_CASE("fixed seed reproduces the whole run") {
    const auto ds = six_ds();
    const auto mcfg = small_model();
    auto tcfg = quick_train(5);
    tcfg.seed = 7;

    const auto r1 = train::train(mcfg, tcfg, ds);
    const auto r2 = train::train(mcfg, tcfg, ds);
    CHECK(same_history(r1.history, r2.history));
    CHECK(r1.best_params.embeddings == r2.best_params.embeddings);
    CHECK(r1.best_params.gates == r2.best_params.gates);

    tcfg.seed = 8;
    const auto r3 = train::train(mcfg, tcfg, ds);
    CHECK(!same_history(r1.history, r3.history));
}

TEST_CASE("thread count does not change the run") {
    const auto ds = six_ds();
    const auto mcfg = small_model();
    auto tcfg = quick_train(4);
    tcfg.threads = 1;
    const auto r1 = train::train(mcfg, tcfg, ds);
    tcfg.threads = 4;
    const auto r2 = train::train(mcfg, tcfg, ds);
    CHECK(same_history(r1.history, r2.history));
    CHECK(r1.best_params.embeddings == r2.best_params.embeddings);
}

TEST_CASE("early stopping waits out the patience window") {
    // the six-node fixture has a single validation candidate per user, so the
    // validation curve is exactly flat and the first epoch stays best
    const auto ds = six_ds();
    const auto mcfg = small_model();
    auto tcfg = quick_train(50);
    tcfg.patience = 3;
    const auto res = train::train(mcfg, tcfg, ds);
    CHECK(res.history.size() == 4);  // best at 1, stop after 3 flat epochs
    CHECK(res.stopped_early);
    CHECK(res.best_epoch == 1);
    CHECK(res.best_val_ndcg == 1.0);

    auto no_stop = quick_train(5);
    no_stop.patience = 100;
    const auto full = train::train(mcfg, no_stop, ds);
    CHECK(full.history.size() == 5);
    CHECK(!full.stopped_early);

    // the returned parameters are the epoch-1 snapshot, not the final ones
    auto one = quick_train(1);
    one.patience = 100;
    const auto first = train::train(mcfg, one, ds);
    CHECK(res.best_params.embeddings == first.best_params.embeddings);
}

TEST_CASE("fusion none trains without side relations") {
    auto with_sides = six_ds();
    auto no_sides = six_ds();
    no_sides.hcg.relations.pop_back();

    auto mcfg = small_model();
    mcfg.fusion = model::Fusion::none;
    mcfg.init = model::Init::uniform;  // keep init independent of side degrees
    const auto tcfg = quick_train(3);

    const auto r1 = train::train(mcfg, tcfg, with_sides);
    const auto r2 = train::train(mcfg, tcfg, no_sides);
    CHECK(same_history(r1.history, r2.history));
    CHECK(r1.best_params.embeddings == r2.best_params.embeddings);

    // with fusion on, the side relation participates and the run changes
    auto fused = small_model();
    fused.init = model::Init::uniform;
    const auto r3 = train::train(fused, tcfg, with_sides);
    CHECK(!same_history(r1.history, r3.history));
}

TEST_CASE("triplet streams follow the anchoring and pool rules") {
    const auto ds = cat_ds();
    const auto mcfg = small_model();
    const auto tcfg = quick_train(3);

    // global ids: u0=0 u1=1 i0=2 i1=3 i2=4 c0=5 c1=6
    std::vector<Triplet> seen;
    (void)train::train(mcfg, tcfg, ds, {}, [&](const Triplet& t) { seen.push_back(t); });

    // per epoch: 4 interaction + 3 category + 2 also_view triplets
    CHECK(seen.size() == 3 * (4 + 3 + 2));
    for (const auto& t : seen) {
        CHECK(t.negative != t.anchor);
        CHECK(t.negative != t.positive);
        switch (t.relation) {
            case 0:
                CHECK(t.anchor <= 1);
                CHECK(t.positive >= 2);
                CHECK(t.positive <= 4);
                // each user holds two of three items, the negative is forced
                CHECK(t.negative == (t.anchor == 0 ? 4 : 2));
                break;
            case 1:  // category: items anchor, categories are drawn
                CHECK(t.anchor >= 2);
                CHECK(t.anchor <= 4);
                CHECK(t.positive >= 5);
                CHECK(t.negative >= 5);
                CHECK(t.negative == (t.anchor == 4 ? 5 : 6));
                break;
            case 2:  // also_view: i1 touches everyone, so the ends anchor
                CHECK((t.anchor == 2 || t.anchor == 4));
                CHECK(t.positive == 3);
                CHECK(t.negative == (t.anchor == 2 ? 4 : 2));
                break;
            default:
                FAIL("unexpected relation ", t.relation);
        }
    }
}

TEST_CASE("training aborts when a user holds every item") {
    Hcg g = Hcg::make();
    g.node(Hcg::kUserType, "u0");
    g.node(Hcg::kUserType, "u1");
    g.node(Hcg::kItemType, "i0");
    g.node(Hcg::kItemType, "i1");
    g.interaction().edges = {{0, 0}, {0, 1}, {1, 0}};
    graph::SplitDataset ds;
    ds.hcg = std::move(g);
    ds.train = {{0, 0}, {0, 1}, {1, 0}};
    ds.validation = {};
    ds.test = {};

    const auto mcfg = small_model();
    const auto tcfg = quick_train(2);
    CHECK_THROWS_WITH_AS((void)train::train(mcfg, tcfg, ds), doctest::Contains("exhausted"),
                         std::runtime_error);
}

TEST_CASE("toy training drives the loss down") {
    const auto ds = six_ds();
    const auto mcfg = small_model(8);
    auto tcfg = quick_train(200, 0.02);
    const auto res = train::train(mcfg, tcfg, ds);
    REQUIRE(res.history.size() == 200);
    const double first = res.history.front().train_loss;
    const double last = res.history.back().train_loss;
    CAPTURE(first);
    CAPTURE(last);
    CHECK(first > 0.0);
    CHECK(last <= 0.1 * first);
}
