#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hgch/autodiff.hpp"
#include "hgch/hcg.hpp"
#include "hgch/rng.hpp"

namespace hgch::model {

enum class Fusion { none, gate, prior, gate_prior };
enum class Aggregation { gyromidpoint, tangent };
enum class Init { power_law, uniform };

Fusion fusion_from_string(std::string_view s);        // throws ConfigError
Aggregation aggregation_from_string(std::string_view s);
Init init_from_string(std::string_view s);
std::string_view to_string(Fusion f);
std::string_view to_string(Aggregation a);
std::string_view to_string(Init i);

struct ModelConfig {
    int d = 64;
    int layers = 3;
    double curvature = 1.0;                        // default ball curvature per subspace
    std::map<std::string, double> subspace_curvature;  // per-relation override by name
    double scoring_curvature = 1.0;
    double init_scale = 0.1;      // a in Uni(-a x^-b, a x^-b)
    double init_exponent = 1.1;   // b
    Fusion fusion = Fusion::gate_prior;
    Aggregation aggregation = Aggregation::gyromidpoint;
    Init init = Init::power_law;
    bool include_layer0 = false;  // add e(0) to the skip sum

    void validate() const;  // throws ConfigError
    double curvature_for(const std::string& relation) const;
};

// One hyperbolic subspace per relation; adjacency is symmetric over global
// node ids. Subspace 0 is the interaction relation restricted to train edges.
struct Subspace {
    std::string name;
    double k = 1.0;
    graph::Csr adj;
};

struct GraphView {
    std::int64_t num_nodes = 0;
    std::vector<std::int64_t> type_offsets;
    std::vector<int> node_type;                    // per global id
    std::vector<Subspace> subspaces;
    std::vector<std::vector<int>> node_subspaces;  // ascending subspace ids per node
    std::vector<std::int64_t> frequency;           // total degree, clamped >= 1
};

// Propagation structure: train interactions plus the full side relations.
// Users and items always belong to the interaction subspace; any node joins a
// subspace once it has an edge there. Zero-degree nodes get frequency 1 (a
// warning is printed, since the power-law prior is undefined at 0).
GraphView make_view(const graph::Hcg& g, std::span<const graph::Edge> train_interactions,
                    const ModelConfig& cfg);

struct ModelParams {
    int d = 0;
    std::vector<double> embeddings;                 // num_nodes x d, row major
    std::vector<std::pair<int, int>> gate_keys;     // sorted (node type, subspace)
    std::vector<std::vector<double>> gates;         // d x d row major, parallel to gate_keys

    std::int64_t num_nodes() const { return static_cast<std::int64_t>(embeddings.size()) / d; }
    std::span<double> embedding(std::int64_t n) {
        return {embeddings.data() + n * d, static_cast<std::size_t>(d)};
    }
    std::span<const double> embedding(std::int64_t n) const {
        return {embeddings.data() + n * d, static_cast<std::size_t>(d)};
    }
    int gate_index(int type, int subspace) const;  // -1 when absent
    std::int64_t parameter_count() const;          // |H| d + (#gate pairs) d^2
};

// Tangent rows ~ Uni(-a x^-b, a x^-b) per coordinate (x^-b = 1 in uniform
// mode); gate matrices, allocated only for gate fusions, use symmetric
// fan-based bounds sqrt(6 / (fan_in + fan_out)).
ModelParams init_params(const ModelConfig& cfg, const GraphView& view, Rng& rng);

// Full-graph propagation recorded on a tape: per layer and subspace, map the
// shared tangent table into the subspace ball, aggregate neighbors plus self,
// map back, then fuse across subspaces; the result is the skip sum over
// layers. Gate vectors are computed once from the layer-0 embeddings and
// reused at every layer. Callers append per-batch loss heads after
// `body_size` and truncate back to it between batches.
struct ForwardBuild {
    ad::Tape tape;
    std::vector<int> leaves;                             // leaf id per global node
    std::vector<std::pair<std::pair<int, int>, int>> gate_leaves;
    std::vector<int> final_ids;                          // skip-sum tape id per node
    int one = -1;                                        // constant 1.0 inside the body
    int body_size = 0;

    void sync_leaves(const ModelParams& p);  // copy params into the tape leaves
};

ForwardBuild build_forward(const ModelConfig& cfg, const GraphView& view,
                           const ModelParams& params);

// value-only convenience: num_nodes x d final tangent embeddings
std::vector<double> forward_embeddings(const ModelConfig& cfg, const GraphView& view,
                                       const ModelParams& params);

// negated squared hyperbolic distance between the exponential images
double score(std::span<const double> ei, std::span<const double> ej, double scoring_k);

// ---- checkpoint ----------------------------------------------------------------

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    std::string dataset_fingerprint;
};

// binary: magic, format version, JSON header, raw doubles, FNV-1a checksum
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParams& params, const std::string& dataset_fingerprint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// CSV rows: node_id, type, per-type popularity quartile (q1 least popular),
// then the d final coordinates
void export_embeddings_csv(const std::filesystem::path& path, const graph::Hcg& g,
                           const GraphView& view, std::span<const double> final_embeddings,
                           int d);

}  // namespace hgch::model
