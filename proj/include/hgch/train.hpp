#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hgch/hcg.hpp"
#include "hgch/model.hpp"
#include "hgch/rng.hpp"

namespace hgch::train {

enum class Sampling { hyperbolic, uniform };
Sampling sampling_from_string(std::string_view s);  // throws ConfigError
std::string_view to_string(Sampling s);

struct TrainConfig {
    double margin = 0.1;
    std::map<std::string, double> relation_margins;  // per-relation override by name
    double aux_weight = 0.01;                        // weight on the side-relation loss
    int n_neg = 20;                                  // candidate count per negative draw
    Sampling sampling = Sampling::hyperbolic;
    double lr = 0.001;
    int batch_size = 1024;
    int max_epochs = 500;
    int patience = 100;  // epochs without validation NDCG@10 improvement
    std::uint64_t seed = 42;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int threads = 0;  // negative sampling + validation ranking workers

    void validate() const;  // throws ConfigError
    double margin_for(const std::string& relation) const;
};

struct Triplet {
    int anchor = -1;    // global node id
    int positive = -1;  // global node id
    int negative = -1;  // global node id
    int relation = 0;   // subspace index, 0 = interactions
};

// margin ranking loss max(y_neg - y_pos + m, 0) on scores
double cf_loss(double y_pos, double y_neg, double m);

// side-information loss: sum over relations of the per-relation mean of the
// triplet losses (the caller applies the aux weight)
double si_loss(std::span<const double> losses, std::span<const int> relation);

// Hardness-aware negative draw: n_neg distinct uniform candidates from
// pool \ exclude, then the candidate whose exp image lies closest to the
// anchor's in the ball of curvature scoring_k (strict <, first-drawn wins
// ties). Uniform mode is the n_neg = 1 special case. pool and exclude are
// ascending global ids with exclude a subset of pool; fewer allowed
// candidates than n_neg means every one is considered (in ascending order),
// none at all is an error.
int sample_negative(const model::ModelParams& params, int anchor,
                    std::span<const int> pool, std::span<const int> exclude,
                    int n_neg, double scoring_k, Sampling mode, Rng& rng);

// Appends the batch loss head to the forward tape (dropping any previous
// head): per triplet a hinge on the squared-distance margin between the exp
// images of the final embeddings, averaged per relation, side relations
// weighted by aux_weight. Returns the loss node id and marks it as the tape
// output. An empty batch yields a constant 0.
int record_loss(model::ForwardBuild& fb, const model::ModelConfig& mcfg,
                const TrainConfig& tcfg, const model::GraphView& view,
                std::span<const Triplet> batch);

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_recall10 = 0.0;
    double val_ndcg10 = 0.0;
    double wall_ms = 0.0;
};

struct TrainResult {
    model::ModelParams best_params;  // at the best validation NDCG@10 epoch
    int best_epoch = 0;
    double best_val_ndcg = 0.0;
    std::vector<EpochStats> history;
    bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;
using TripletCallback = std::function<void(const Triplet&)>;

// Optimization loop. Per epoch: shuffle the train interactions and every side
// relation, then per batch sample one negative per positive (side relations
// are spread evenly across the epoch's batches), record the loss head,
// backpropagate, and take one dense adaptive-moment step on the embedding and
// gate leaves. Negative draws run in parallel on per-triplet forked RNG
// streams against the start-of-batch parameter snapshot, so results do not
// depend on the thread count. After each epoch validation NDCG@10 decides
// early stopping: no improvement for `patience` epochs ends the run, and the
// best-validation parameters are returned.
//
// Anchoring: users anchor interaction triplets (a user holding every item
// cannot be sampled against and is an error); symmetric side edges anchor at
// whichever endpoint still has candidates (both viable: random pick), and
// cross-type side edges anchor at the source endpoint with negatives drawn
// from the relation's destination-side participants; side edges with no
// viable anchor are skipped. fusion = none trains without any side loss.
//
// A non-finite loss aborts with the offending batch dumped to stderr.
TrainResult train(const model::ModelConfig& mcfg, const TrainConfig& tcfg,
                  const graph::SplitDataset& ds, const EpochCallback& on_epoch = {},
                  const TripletCallback& on_triplet = {},
                  const model::ModelParams* initial = nullptr);

}  // namespace hgch::train
