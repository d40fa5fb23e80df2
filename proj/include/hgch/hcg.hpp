#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hgch/rng.hpp"

namespace hgch::graph {

// k-core (or an over-aggressive filter) removed every user or item
struct EmptyGraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Edge = std::pair<std::int32_t, std::int32_t>;  // local indices per endpoint type

struct Relation {
    std::string name;
    int src_type = 0;
    int dst_type = 0;
    std::vector<Edge> edges;  // deduplicated; same-type edges stored as (min, max)
};

// Heterogeneous collaborative graph: typed node sets with stable raw-id
// remaps plus one undirected edge set per relation. relations[0] is always
// the user-item interaction relation.
class Hcg {
public:
    static constexpr int kUserType = 0;
    static constexpr int kItemType = 1;

    static Hcg make();  // seeds the user/item types and the interaction relation

    int add_type(const std::string& name);
    int type_id(std::string_view name) const;  // -1 when absent
    int num_types() const { return static_cast<int>(type_names_.size()); }
    const std::string& type_name(int t) const { return type_names_.at(static_cast<std::size_t>(t)); }
    int type_count(int t) const { return static_cast<int>(raw_ids_.at(static_cast<std::size_t>(t)).size()); }

    std::int64_t num_nodes() const;
    std::vector<std::int64_t> type_offsets() const;  // global id = offset[type] + local

    int node(int type, const std::string& raw);  // get-or-create local index
    int find_node(int type, std::string_view raw) const;
    const std::string& raw_id(int type, int local) const;
    const std::vector<std::string>& raw_ids(int type) const;

    std::vector<Relation> relations;

    Relation& interaction() { return relations.front(); }
    const Relation& interaction() const { return relations.front(); }

private:
    std::vector<std::string> type_names_;
    std::vector<std::vector<std::string>> raw_ids_;
    std::vector<std::unordered_map<std::string, int>> raw_index_;
};

// ---- manifest ---------------------------------------------------------------

struct SideSpec {
    std::string name, file, src_type, dst_type;
};

struct LocationSpec {
    std::string file;
    double radius_km = 0.2;
};

struct Manifest {
    std::string name = "dataset";
    std::filesystem::path base_dir;  // files below are resolved against it
    std::string interactions_file;
    std::optional<double> rating_threshold;  // binarization cut for 3-column rows
    int user_core = 10;
    int item_core = 10;
    std::vector<SideSpec> sides;
    std::optional<LocationSpec> locations;
};

Manifest parse_manifest(const std::filesystem::path& path);

// ---- construction -----------------------------------------------------------

// Reads the interaction and side TSVs declared in the manifest. Three-column
// interaction rows are kept when rating >= threshold (default 4); duplicate
// edges collapse; malformed rows raise ConfigError with file:line.
Hcg ingest(const Manifest& m);

// great-circle distance on a sphere of radius 6371 km
double haversine_km(double lat1, double lon1, double lat2, double lon2);

struct Location {
    int item = -1;  // local item index
    double lat = 0.0, lon = 0.0;
};

// all unordered item pairs within radius_km (inclusive); no self pairs
std::vector<Edge> geo_neighbors(std::vector<Location> locations, double radius_km);

// Iteratively removes users/items whose interaction degree falls below the
// core values, then prunes side edges touching removed nodes and side-type
// nodes left without edges. Node order (and therefore the remap) is stable.
Hcg k_core(const Hcg& g, int user_core, int item_core);

// ---- split ------------------------------------------------------------------

struct SplitDataset {
    Hcg hcg;                       // interaction relation holds the full edge set
    std::vector<Edge> train;       // optimized train set (validation removed)
    std::vector<Edge> validation;  // 10% of the train portion
    std::vector<Edge> test;        // 20% per user, capped to keep >=1 train edge
};

SplitDataset split(Hcg g, std::uint64_t seed);

// ---- processed dataset directory ---------------------------------------------

void save_dataset(const SplitDataset& ds, const std::string& name,
                  const std::filesystem::path& dir);
SplitDataset load_dataset(const std::filesystem::path& dir);

// content hash over the split files and remap tables
std::string dataset_fingerprint(const std::filesystem::path& dir);

// ---- adjacency --------------------------------------------------------------

struct Csr {
    std::vector<std::int64_t> offsets;
    std::vector<std::int32_t> targets;
    int degree(std::int64_t g) const {
        return static_cast<int>(offsets[static_cast<std::size_t>(g) + 1] -
                                offsets[static_cast<std::size_t>(g)]);
    }
    std::span<const std::int32_t> neighbors(std::int64_t g) const {
        const auto b = offsets[static_cast<std::size_t>(g)];
        return {targets.data() + b, static_cast<std::size_t>(offsets[static_cast<std::size_t>(g) + 1] - b)};
    }
};

// symmetric adjacency over global node ids for one relation's edge list
Csr relation_csr(const Hcg& g, int src_type, int dst_type, std::span<const Edge> edges);

}  // namespace hgch::graph
