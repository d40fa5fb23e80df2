#include "hgch/train.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hgch/eval.hpp"
#include "hgch/geometry.hpp"
#include "hgch/util.hpp"

namespace hgch::train {

Sampling sampling_from_string(std::string_view s) {
    if (s == "hyperbolic") return Sampling::hyperbolic;
    if (s == "uniform") return Sampling::uniform;
    throw ConfigError("unknown sampling '" + std::string(s) +
                      "', expected hyperbolic or uniform");
}

std::string_view to_string(Sampling s) {
    return s == Sampling::hyperbolic ? "hyperbolic" : "uniform";
}

void TrainConfig::validate() const {
    if (margin < 0.0) throw ConfigError("margin must be >= 0");
    for (const auto& [name, m] : relation_margins)
        if (m < 0.0) throw ConfigError("margin for relation '" + name + "' must be >= 0");
    if (aux_weight < 0.0) throw ConfigError("aux_weight must be >= 0");
    if (n_neg < 1) throw ConfigError("n_neg must be >= 1");
    if (lr < 0.0) throw ConfigError("lr must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ConfigError("adam betas must lie in [0, 1)");
    if (eps <= 0.0) throw ConfigError("adam eps must be > 0");
    if (threads < 0) throw ConfigError("threads must be >= 0");
}

double TrainConfig::margin_for(const std::string& relation) const {
    const auto it = relation_margins.find(relation);
    return it == relation_margins.end() ? margin : it->second;
}

double cf_loss(double y_pos, double y_neg, double m) {
    return std::max(y_neg - y_pos + m, 0.0);
}

double si_loss(std::span<const double> losses, std::span<const int> relation) {
    std::map<int, std::pair<double, int>> acc;  // relation -> (sum, count)
    for (std::size_t i = 0; i < losses.size(); ++i) {
        auto& [sum, count] = acc[relation[i]];
        sum += losses[i];
        ++count;
    }
    double total = 0.0;
    for (const auto& [rel, sc] : acc) total += sc.first / static_cast<double>(sc.second);
    return total;
}

int sample_negative(const model::ModelParams& params, int anchor,
                    std::span<const int> pool, std::span<const int> exclude,
                    int n_neg, double scoring_k, Sampling mode, Rng& rng) {
    const auto available =
        static_cast<std::int64_t>(pool.size()) - static_cast<std::int64_t>(exclude.size());
    if (available <= 0)
        throw std::runtime_error("negative sampling pool exhausted for node " +
                                 std::to_string(anchor));
    const auto want =
        mode == Sampling::uniform ? std::int64_t{1} : std::min<std::int64_t>(n_neg, available);

    std::vector<int> cands;
    cands.reserve(static_cast<std::size_t>(want));
    if (want == available) {
        for (int c : pool)
            if (!std::binary_search(exclude.begin(), exclude.end(), c)) cands.push_back(c);
    } else {
        while (static_cast<std::int64_t>(cands.size()) < want) {
            const int c = pool[rng.below(pool.size())];
            if (std::binary_search(exclude.begin(), exclude.end(), c)) continue;
            if (std::find(cands.begin(), cands.end(), c) != cands.end()) continue;
            cands.push_back(c);
        }
    }
    if (cands.size() == 1) return cands[0];

    std::vector<double> xa(static_cast<std::size_t>(params.d));
    std::vector<double> xc(static_cast<std::size_t>(params.d));
    geom::raw::exp_o(params.embedding(anchor), scoring_k, xa);
    int best = cands[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c : cands) {
        geom::raw::exp_o(params.embedding(c), scoring_k, xc);
        const double dist = geom::raw::dist(xa, xc, scoring_k);
        if (dist < best_dist) {
            best_dist = dist;
            best = c;
        }
    }
    return best;
}

int record_loss(model::ForwardBuild& fb, const model::ModelConfig& mcfg,
                const TrainConfig& tcfg, const model::GraphView& view,
                std::span<const Triplet> batch) {
    auto& tape = fb.tape;
    tape.truncate(fb.body_size);
    const double k = mcfg.scoring_curvature;

    std::unordered_map<int, int> ball;  // node -> exp image, shared across triplets
    const auto exp_of = [&](int n) {
        const auto it = ball.find(n);
        if (it != ball.end()) return it->second;
        const int id = tape.exp_o(fb.final_ids[static_cast<std::size_t>(n)], k);
        ball.emplace(n, id);
        return id;
    };

    std::map<int, std::vector<int>> hinges;  // relation -> per-triplet loss nodes
    for (const auto& t : batch) {
        const double m =
            tcfg.margin_for(view.subspaces[static_cast<std::size_t>(t.relation)].name);
        const int sqd_pos = tape.sq_dist(exp_of(t.anchor), exp_of(t.positive), k);
        const int sqd_neg = tape.sq_dist(exp_of(t.anchor), exp_of(t.negative), k);
        const std::array<int, 3> ids = {sqd_pos, sqd_neg, fb.one};
        const std::array<double, 3> cs = {1.0, -1.0, m};
        hinges[t.relation].push_back(tape.hinge(tape.weighted_sum(ids, cs)));
    }

    std::vector<int> terms;
    std::vector<double> weights;
    for (const auto& [rel, hs] : hinges) {
        const std::vector<double> mean(hs.size(), 1.0 / static_cast<double>(hs.size()));
        terms.push_back(tape.weighted_sum(hs, mean));
        weights.push_back(rel == 0 ? 1.0 : tcfg.aux_weight);
    }
    const int loss = terms.empty() ? tape.constant(0.0) : tape.weighted_sum(terms, weights);
    tape.set_output(loss);
    return loss;
}

namespace {

graph::Csr sorted_rows(graph::Csr c) {
    const auto n = static_cast<std::int64_t>(c.offsets.size()) - 1;
    for (std::int64_t i = 0; i < n; ++i)
        std::sort(c.targets.begin() + c.offsets[static_cast<std::size_t>(i)],
                  c.targets.begin() + c.offsets[static_cast<std::size_t>(i) + 1]);
    return c;
}

// dense first-order adaptive-moment step over one flat parameter block
class Adam {
public:
    Adam(const TrainConfig& c, std::size_t n)
        : lr_(c.lr), b1_(c.beta1), b2_(c.beta2), eps_(c.eps), m_(n, 0.0), v_(n, 0.0) {}

    void begin_step() {
        ++t_;
        c1_ = 1.0 - std::pow(b1_, static_cast<double>(t_));
        c2_ = 1.0 - std::pow(b2_, static_cast<double>(t_));
    }

    void update(std::size_t offset, std::span<double> p, std::span<const double> g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            auto& m = m_[offset + i];
            auto& v = v_[offset + i];
            m = b1_ * m + (1.0 - b1_) * g[i];
            v = b2_ * v + (1.0 - b2_) * g[i] * g[i];
            p[i] -= lr_ * (m / c1_) / (std::sqrt(v / c2_) + eps_);
        }
    }

private:
    double lr_, b1_, b2_, eps_;
    std::int64_t t_ = 0;
    double c1_ = 1.0, c2_ = 1.0;
    std::vector<double> m_, v_;
};

struct SidePlan {
    int subspace = 0;
    bool symmetric = false;
    std::vector<graph::Edge> edges;  // endpoints as global ids
    std::vector<int> pool;           // allowed negatives, ascending global ids
};

}  // namespace

TrainResult train(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                  const graph::SplitDataset& ds, const EpochCallback& on_epoch,
                  const TripletCallback& on_triplet, const model::ModelParams* initial) {
    mcfg.validate();
    tcfg.validate();
    const auto view = model::make_view(ds.hcg, ds.train, mcfg);
    Rng rng(tcfg.seed);
    model::ModelParams params = initial ? *initial : model::init_params(mcfg, view, rng);
    auto fb = model::build_forward(mcfg, view, params);

    const auto& off = view.type_offsets;
    const auto num_nodes = view.num_nodes;
    const auto d = static_cast<std::size_t>(mcfg.d);

    // per-subspace adjacency with sorted rows: the exclusion sets for draws
    std::vector<graph::Csr> adj;
    adj.reserve(view.subspaces.size());
    for (const auto& s : view.subspaces) adj.push_back(sorted_rows(s.adj));

    // interactions: the user anchors, negatives come from the whole item set
    std::vector<graph::Edge> cf;
    cf.reserve(ds.train.size());
    for (const auto& e : ds.train)
        cf.push_back({e.first, static_cast<std::int32_t>(off[1] + e.second)});
    std::vector<int> item_pool;
    for (auto i = off[1]; i < off[2]; ++i) item_pool.push_back(static_cast<int>(i));

    std::vector<SidePlan> sides;
    std::vector<const SidePlan*> plan_of(view.subspaces.size(), nullptr);
    if (mcfg.fusion != model::Fusion::none) {
        for (std::size_t s = 1; s < view.subspaces.size(); ++s) {
            const auto& rel = ds.hcg.relations[s];
            if (rel.edges.empty()) continue;
            SidePlan p;
            p.subspace = static_cast<int>(s);
            p.symmetric = rel.src_type == rel.dst_type;
            const auto src_off = off[static_cast<std::size_t>(rel.src_type)];
            const auto dst_off = off[static_cast<std::size_t>(rel.dst_type)];
            for (const auto& e : rel.edges)
                p.edges.push_back({static_cast<std::int32_t>(src_off + e.first),
                                   static_cast<std::int32_t>(dst_off + e.second)});
            for (std::int64_t n = 0; n < num_nodes; ++n)
                if (adj[s].degree(n) > 0 &&
                    (p.symmetric || view.node_type[static_cast<std::size_t>(n)] == rel.dst_type))
                    p.pool.push_back(static_cast<int>(n));
            sides.push_back(std::move(p));
        }
        for (const auto& p : sides) plan_of[static_cast<std::size_t>(p.subspace)] = &p;
    }

    Adam opt(tcfg, static_cast<std::size_t>(params.parameter_count()));
    const auto n_cf = static_cast<std::int64_t>(cf.size());
    const auto bs = static_cast<std::int64_t>(tcfg.batch_size);
    const auto batches = std::max<std::int64_t>(1, (n_cf + bs - 1) / bs);

    // candidates left for an anchor: pool minus its neighbors, minus itself
    // when it shares the pool's type
    const auto slack = [&](const SidePlan& p, int anchor) {
        return static_cast<std::int64_t>(p.pool.size()) -
               adj[static_cast<std::size_t>(p.subspace)].degree(anchor) -
               (p.symmetric ? 1 : 0);
    };

    TrainResult res;
    res.best_val_ndcg = -1.0;
    model::ModelParams best = params;
    int best_epoch = 0;

    std::vector<Triplet> batch;
    std::vector<Rng> draws;
    const std::vector<int> val_ks = {10};

    for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(cf);
        for (auto& p : sides) rng.shuffle(p.edges);

        double loss_sum = 0.0;
        for (std::int64_t b = 0; b < batches; ++b) {
            batch.clear();
            const auto lo = b * bs;
            const auto hi = std::min(n_cf, lo + bs);
            for (auto i = lo; i < hi; ++i)
                batch.push_back(
                    {cf[static_cast<std::size_t>(i)].first, cf[static_cast<std::size_t>(i)].second, -1, 0});
            // spread each side relation evenly over the epoch's batches
            for (const auto& p : sides) {
                const auto ne = static_cast<std::int64_t>(p.edges.size());
                for (auto i = b * ne / batches; i < (b + 1) * ne / batches; ++i) {
                    const auto [a, c] = p.edges[static_cast<std::size_t>(i)];
                    int anchor = a, positive = c;
                    if (p.symmetric) {
                        const bool va = slack(p, a) > 0, vc = slack(p, c) > 0;
                        if (!va && !vc) continue;  // nothing to sample against
                        if (va && vc ? rng.below(2) == 1 : vc) {
                            anchor = c;
                            positive = a;
                        }
                    } else if (slack(p, a) <= 0) {
                        continue;
                    }
                    batch.push_back({anchor, positive, -1, p.subspace});
                }
            }

            // per-triplet forked streams keep the draws thread-independent
            draws.clear();
            for (std::size_t i = 0; i < batch.size(); ++i) draws.push_back(rng.fork());
            parallel_for(static_cast<std::int64_t>(batch.size()), tcfg.threads,
                         [&](std::int64_t wlo, std::int64_t whi) {
                             std::vector<int> excl;
                             for (auto i = wlo; i < whi; ++i) {
                                 auto& t = batch[static_cast<std::size_t>(i)];
                                 const SidePlan* plan =
                                     plan_of[static_cast<std::size_t>(t.relation)];
                                 const auto pool = plan ? std::span<const int>(plan->pool)
                                                        : std::span<const int>(item_pool);
                                 const auto nb =
                                     adj[static_cast<std::size_t>(t.relation)].neighbors(t.anchor);
                                 excl.assign(nb.begin(), nb.end());
                                 if (plan && plan->symmetric)
                                     excl.insert(
                                         std::lower_bound(excl.begin(), excl.end(), t.anchor),
                                         t.anchor);
                                 t.negative = sample_negative(
                                     params, t.anchor, pool, excl, tcfg.n_neg,
                                     mcfg.scoring_curvature, tcfg.sampling,
                                     draws[static_cast<std::size_t>(i)]);
                             }
                         });
            if (on_triplet)
                for (const auto& t : batch) on_triplet(t);

            fb.tape.truncate(fb.body_size);
            fb.sync_leaves(params);
            fb.tape.recompute();
            const int loss_id = record_loss(fb, mcfg, tcfg, view, batch);
            const double loss = fb.tape.scalar_value(loss_id);
            if (!std::isfinite(loss)) {
                std::fprintf(stderr, "non-finite loss %g at epoch %d batch %lld; triplets:\n",
                             loss, epoch, static_cast<long long>(b));
                for (const auto& t : batch)
                    std::fprintf(stderr, "  anchor=%d positive=%d negative=%d relation=%d\n",
                                 t.anchor, t.positive, t.negative, t.relation);
                throw std::runtime_error("non-finite training loss at epoch " +
                                         std::to_string(epoch) + " batch " + std::to_string(b));
            }

            const auto grads = fb.tape.backward();
            opt.begin_step();
            for (std::int64_t n = 0; n < num_nodes; ++n)
                opt.update(static_cast<std::size_t>(n) * d, params.embedding(n),
                           grads.at(fb.leaves[static_cast<std::size_t>(n)]));
            std::size_t goff = static_cast<std::size_t>(num_nodes) * d;
            for (std::size_t gi = 0; gi < fb.gate_leaves.size(); ++gi) {
                opt.update(goff, params.gates[gi], grads.at(fb.gate_leaves[gi].second));
                goff += params.gates[gi].size();
            }
            loss_sum += loss;
        }

        // refresh the body under the stepped parameters for validation
        fb.tape.truncate(fb.body_size);
        fb.sync_leaves(params);
        fb.tape.recompute();
        std::vector<double> emb(static_cast<std::size_t>(num_nodes) * d);
        for (std::int64_t n = 0; n < num_nodes; ++n) {
            const auto& val = fb.tape.value(fb.final_ids[static_cast<std::size_t>(n)]);
            std::copy(val.begin(), val.end(),
                      emb.begin() + static_cast<std::int64_t>(d) * n);
        }
        const auto rep = eval::evaluate(view, emb, mcfg.scoring_curvature, ds.train,
                                        ds.validation, val_ks, tcfg.threads);

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = loss_sum / static_cast<double>(batches);
        st.val_recall10 = rep.mean_recall(10);
        st.val_ndcg10 = rep.mean_ndcg(10);
        st.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
        res.history.push_back(st);
        if (on_epoch) on_epoch(st);

        if (st.val_ndcg10 > res.best_val_ndcg) {
            res.best_val_ndcg = st.val_ndcg10;
            best = params;
            best_epoch = epoch;
        }
        if (epoch - best_epoch >= tcfg.patience) {
            res.stopped_early = true;
            break;
        }
    }
    res.best_params = std::move(best);
    res.best_epoch = best_epoch;
    return res;
}

}  // namespace hgch::train
