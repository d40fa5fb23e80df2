#include "hgch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "hgch/geometry.hpp"
#include "hgch/util.hpp"

namespace hgch::eval {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double gain(int rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

bool contains(std::span<const int> sorted, int x) {
    return std::binary_search(sorted.begin(), sorted.end(), x);
}

int stratum_index(std::string_view s) {
    for (std::size_t i = 0; i < kStrata.size(); ++i)
        if (kStrata[i] == s) return static_cast<int>(i);
    throw ConfigError("unknown stratum '" + std::string(s) + "'");
}

// exp images of every item row plus cached squared norms, so the per-user
// scoring loop reduces to one dot product per item
struct ItemCache {
    int d = 0;
    double k = 1.0;
    std::int64_t count = 0;
    std::vector<double> ball;
    std::vector<double> sq;

    std::span<const double> row(std::int64_t i) const {
        return {ball.data() + i * d, static_cast<std::size_t>(d)};
    }
};

ItemCache make_item_cache(std::span<const double> item_rows, int d, double k) {
    ItemCache c;
    c.d = d;
    c.k = k;
    c.count = static_cast<std::int64_t>(item_rows.size()) / d;
    c.ball.resize(item_rows.size());
    c.sq.resize(static_cast<std::size_t>(c.count));
    for (std::int64_t i = 0; i < c.count; ++i) {
        const auto out = std::span<double>(c.ball).subspan(
            static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
            static_cast<std::size_t>(d));
        geom::raw::exp_o(item_rows.subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
                                           static_cast<std::size_t>(d)),
                         k, out);
        c.sq[static_cast<std::size_t>(i)] = geom::sq_norm(out);
    }
    return c;
}

// Candidates ordered by ascending z = ||x-y||^2 / ((k-||x||^2)(k-||y||^2)),
// which is monotone in the geodesic distance, so the order equals descending
// score; pair comparison breaks ties by ascending index.
std::vector<int> ranked_for(std::span<const double> user_row, const ItemCache& c,
                            std::span<const int> positives) {
    std::vector<double> x(static_cast<std::size_t>(c.d));
    geom::raw::exp_o(user_row, c.k, x);
    const double nx = geom::sq_norm(x);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(static_cast<std::size_t>(c.count));
    for (std::int64_t i = 0; i < c.count; ++i) {
        if (contains(positives, static_cast<int>(i))) continue;
        const double ny = c.sq[static_cast<std::size_t>(i)];
        const double diff = nx + ny - 2.0 * geom::dot(x, c.row(i));
        cand.push_back({diff / ((c.k - nx) * (c.k - ny)), static_cast<int>(i)});
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> out(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) out[i] = cand[i].second;
    return out;
}

}  // namespace

double recall_at_k(std::span<const int> ranked, std::span<const int> relevant, int k) {
    if (relevant.empty()) return kNan;
    const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size()));
    int hits = 0;
    for (int r = 0; r < n; ++r) hits += contains(relevant, ranked[static_cast<std::size_t>(r)]);
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(std::span<const int> ranked, std::span<const int> relevant, int k) {
    if (relevant.empty()) return kNan;
    const int n = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size()));
    double dcg = 0.0;
    for (int r = 1; r <= n; ++r)
        if (contains(relevant, ranked[static_cast<std::size_t>(r - 1)])) dcg += gain(r);
    const int ideal = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size()));
    double idcg = 0.0;
    for (int r = 1; r <= ideal; ++r) idcg += gain(r);
    return dcg / idcg;
}

std::vector<std::uint8_t> head_mask(std::span<const std::int64_t> item_degree) {
    const std::int64_t n = static_cast<std::int64_t>(item_degree.size());
    std::vector<std::uint8_t> mask(item_degree.size(), 0);
    if (n == 0) return mask;
    std::vector<int> order(item_degree.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto da = item_degree[static_cast<std::size_t>(a)];
        const auto db = item_degree[static_cast<std::size_t>(b)];
        return da != db ? da > db : a < b;
    });
    // ceil(0.2 n) without float round-off
    const std::int64_t h = (n + 4) / 5;
    for (std::int64_t i = 0; i < h; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
    return mask;
}

std::vector<int> rank_items(std::span<const double> user_row,
                            std::span<const double> item_rows, int d, double k,
                            std::span<const int> train_positives) {
    return ranked_for(user_row, make_item_cache(item_rows, d, k), train_positives);
}

double RankingReport::mean_recall(int k, std::string_view stratum) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] == k) return recall[i][static_cast<std::size_t>(stratum_index(stratum))];
    throw ConfigError("no such K in report: " + std::to_string(k));
}

double RankingReport::mean_ndcg(int k, std::string_view stratum) const {
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] == k) return ndcg[i][static_cast<std::size_t>(stratum_index(stratum))];
    throw ConfigError("no such K in report: " + std::to_string(k));
}

RankingReport evaluate(const model::GraphView& view, std::span<const double> final_emb,
                       double scoring_k, std::span<const graph::Edge> train,
                       std::span<const graph::Edge> relevant, std::span<const int> ks,
                       int threads) {
    for (int k : ks)
        if (k < 1) throw ConfigError("eval K must be >= 1, got " + std::to_string(k));
    const auto& off = view.type_offsets;
    const std::int64_t num_users = off[1] - off[0];
    const std::int64_t num_items = off[2] - off[1];
    const int d = static_cast<int>(static_cast<std::int64_t>(final_emb.size()) / view.num_nodes);

    std::vector<std::vector<int>> pos(static_cast<std::size_t>(num_users));
    std::vector<std::vector<int>> rel(static_cast<std::size_t>(num_users));
    std::vector<std::int64_t> item_degree(static_cast<std::size_t>(num_items), 0);
    for (const auto& e : train) {
        pos[static_cast<std::size_t>(e.first)].push_back(e.second);
        ++item_degree[static_cast<std::size_t>(e.second)];
    }
    for (const auto& e : relevant) rel[static_cast<std::size_t>(e.first)].push_back(e.second);
    for (auto& v : pos) std::sort(v.begin(), v.end());
    for (auto& v : rel) std::sort(v.begin(), v.end());

    const auto hmask = head_mask(item_degree);
    const auto cache = make_item_cache(
        final_emb.subspan(static_cast<std::size_t>(off[1]) * static_cast<std::size_t>(d),
                          static_cast<std::size_t>(num_items) * static_cast<std::size_t>(d)),
        d, scoring_k);

    RankingReport r;
    r.ks.assign(ks.begin(), ks.end());
    for (std::int64_t u = 0; u < num_users; ++u)
        if (!rel[static_cast<std::size_t>(u)].empty()) r.user_ids.push_back(static_cast<int>(u));
    const std::size_t slots = r.user_ids.size();
    r.user_recall.resize(r.ks.size());
    r.user_ndcg.resize(r.ks.size());
    for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
        for (std::size_t s = 0; s < kStrata.size(); ++s) {
            r.user_recall[ki][s].assign(slots, kNan);
            r.user_ndcg[ki][s].assign(slots, kNan);
        }

    parallel_for(static_cast<std::int64_t>(slots), threads, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t slot = lo; slot < hi; ++slot) {
            const int u = r.user_ids[static_cast<std::size_t>(slot)];
            const auto row = final_emb.subspan(
                static_cast<std::size_t>(off[0] + u) * static_cast<std::size_t>(d),
                static_cast<std::size_t>(d));
            const auto ranked = ranked_for(row, cache, pos[static_cast<std::size_t>(u)]);
            std::array<std::vector<int>, 3> strata_rel;
            strata_rel[0] = rel[static_cast<std::size_t>(u)];
            for (int i : strata_rel[0])
                strata_rel[hmask[static_cast<std::size_t>(i)] ? 1 : 2].push_back(i);
            for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
                for (std::size_t s = 0; s < kStrata.size(); ++s) {
                    if (strata_rel[s].empty()) continue;
                    r.user_recall[ki][s][static_cast<std::size_t>(slot)] =
                        recall_at_k(ranked, strata_rel[s], r.ks[ki]);
                    r.user_ndcg[ki][s][static_cast<std::size_t>(slot)] =
                        ndcg_at_k(ranked, strata_rel[s], r.ks[ki]);
                }
        }
    });

    r.recall.assign(r.ks.size(), {0.0, 0.0, 0.0});
    r.ndcg.assign(r.ks.size(), {0.0, 0.0, 0.0});
    r.users_counted.assign(r.ks.size(), {0, 0, 0});
    for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
        for (std::size_t s = 0; s < kStrata.size(); ++s) {
            double sum_r = 0.0, sum_n = 0.0;
            int count = 0;
            for (std::size_t slot = 0; slot < slots; ++slot) {
                const double v = r.user_recall[ki][s][slot];
                if (std::isnan(v)) continue;
                sum_r += v;
                sum_n += r.user_ndcg[ki][s][slot];
                ++count;
            }
            r.users_counted[ki][s] = count;
            r.recall[ki][s] = count ? sum_r / count : 0.0;
            r.ndcg[ki][s] = count ? sum_n / count : 0.0;
        }
    return r;
}

void write_report_json(const std::filesystem::path& path, const RankingReport& r) {
    nlohmann::json j;
    j["ks"] = r.ks;
    auto metrics = nlohmann::json::array();
    for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
        for (std::size_t s = 0; s < kStrata.size(); ++s)
            metrics.push_back({{"k", r.ks[ki]},
                               {"stratum", kStrata[s]},
                               {"recall", r.recall[ki][s]},
                               {"ndcg", r.ndcg[ki][s]},
                               {"users", r.users_counted[ki][s]}});
    j["metrics"] = metrics;
    write_file(path, j.dump(2) + "\n");
}

void write_report_csv(const std::filesystem::path& path, const RankingReport& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "metric,K,stratum,value\n";
    for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
        for (std::size_t s = 0; s < kStrata.size(); ++s) {
            o << "recall," << r.ks[ki] << ',' << kStrata[s] << ',' << r.recall[ki][s] << '\n';
            o << "ndcg," << r.ks[ki] << ',' << kStrata[s] << ',' << r.ndcg[ki][s] << '\n';
        }
    write_file(path, o.str());
}

void write_per_user_tsv(const std::filesystem::path& path, const RankingReport& r) {
    std::ostringstream o;
    o << std::setprecision(17) << "user\tmetric\tK\tstratum\tvalue\n";
    for (std::size_t ki = 0; ki < r.ks.size(); ++ki)
        for (std::size_t s = 0; s < kStrata.size(); ++s)
            for (std::size_t slot = 0; slot < r.user_ids.size(); ++slot) {
                if (std::isnan(r.user_recall[ki][s][slot])) continue;
                o << r.user_ids[slot] << "\trecall\t" << r.ks[ki] << '\t' << kStrata[s] << '\t'
                  << r.user_recall[ki][s][slot] << '\n';
                o << r.user_ids[slot] << "\tndcg\t" << r.ks[ki] << '\t' << kStrata[s] << '\t'
                  << r.user_ndcg[ki][s][slot] << '\n';
            }
    write_file(path, o.str());
}

}  // namespace hgch::eval
