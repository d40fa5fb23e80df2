#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "hgch/hcg.hpp"
#include "hgch/model.hpp"

namespace hgch::eval {

// Ranking metrics for one user. `ranked` is the candidate list in rank order,
// `relevant` is sorted ascending. NDCG uses binary relevance with gain
// 1/log2(rank + 1) and an ideal list of min(|relevant|, K) hits.
double recall_at_k(std::span<const int> ranked, std::span<const int> relevant, int k);
double ndcg_at_k(std::span<const int> ranked, std::span<const int> relevant, int k);

// Head/tail split by the 20/80 rule: the top ceil(0.2 n) items by descending
// train degree (ties: lower index first) form the head. Returns a 0/1 mask,
// 1 = head.
std::vector<std::uint8_t> head_mask(std::span<const std::int64_t> item_degree);

// Every item except the user's train positives, sorted by descending score
// with ascending-index tie break. Rows are tangent vectors; scores are taken
// in the ball of curvature k. `train_positives` is sorted ascending.
std::vector<int> rank_items(std::span<const double> user_row,
                            std::span<const double> item_rows, int d, double k,
                            std::span<const int> train_positives);

inline constexpr std::array<std::string_view, 3> kStrata = {"all", "head", "tail"};

struct RankingReport {
    std::vector<int> ks;
    // means indexed [k][stratum], stratum order matching kStrata
    std::vector<std::array<double, 3>> recall, ndcg;
    std::vector<std::array<int, 3>> users_counted;
    // per-user values aligned to user_ids (users with at least one relevant
    // item); NaN marks a user excluded from a stratum (no relevant items
    // there)
    std::vector<int> user_ids;
    std::vector<std::array<std::vector<double>, 3>> user_recall, user_ndcg;

    double mean_recall(int k, std::string_view stratum = "all") const;
    double mean_ndcg(int k, std::string_view stratum = "all") const;
};

// Full-ranking protocol over an immutable embedding snapshot, parallel across
// users. For every user with at least one `relevant` edge: rank all items
// except the user's `train` positives, then score recall/NDCG per K for the
// whole item set and for the head/tail strata (stratum metrics restrict the
// relevant set; users with no relevant items in a stratum are excluded from
// that stratum's average, not counted as zero).
RankingReport evaluate(const model::GraphView& view, std::span<const double> final_emb,
                       double scoring_k, std::span<const graph::Edge> train,
                       std::span<const graph::Edge> relevant, std::span<const int> ks,
                       int threads = 0);

void write_report_json(const std::filesystem::path& path, const RankingReport& r);
// flat rows: metric,K,stratum,value
void write_report_csv(const std::filesystem::path& path, const RankingReport& r);
// per-user long-format dump for significance testing by external tools
void write_per_user_tsv(const std::filesystem::path& path, const RankingReport& r);

}  // namespace hgch::eval
