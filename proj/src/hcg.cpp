#include "hgch/hcg.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "hgch/util.hpp"

namespace hgch::graph {

namespace {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void bad_row(const std::filesystem::path& file, int line, const std::string& what) {
    throw ConfigError(file.string() + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& s, const std::filesystem::path& file, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        bad_row(file, line, "not a number: '" + s + "'");
    }
}

std::uint64_t edge_key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

void for_each_line(const std::filesystem::path& file,
                   const std::function<void(int, const std::vector<std::string>&)>& fn) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open data file: " + file.string());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto toks = tokenize(line);
        if (toks.empty() || toks[0][0] == '#') continue;
        fn(lineno, toks);
    }
}

}  // namespace

// ---- Hcg ---------------------------------------------------------------------

Hcg Hcg::make() {
    Hcg g;
    g.add_type("user");
    g.add_type("item");
    g.relations.push_back({"interaction", kUserType, kItemType, {}});
    return g;
}

int Hcg::add_type(const std::string& name) {
    if (const int t = type_id(name); t >= 0) return t;
    type_names_.push_back(name);
    raw_ids_.emplace_back();
    raw_index_.emplace_back();
    return num_types() - 1;
}

int Hcg::type_id(std::string_view name) const {
    for (int t = 0; t < num_types(); ++t)
        if (type_names_[static_cast<std::size_t>(t)] == name) return t;
    return -1;
}

std::int64_t Hcg::num_nodes() const {
    std::int64_t n = 0;
    for (int t = 0; t < num_types(); ++t) n += type_count(t);
    return n;
}

std::vector<std::int64_t> Hcg::type_offsets() const {
    std::vector<std::int64_t> off(static_cast<std::size_t>(num_types()) + 1, 0);
    for (int t = 0; t < num_types(); ++t) off[static_cast<std::size_t>(t) + 1] = off[static_cast<std::size_t>(t)] + type_count(t);
    return off;
}

int Hcg::node(int type, const std::string& raw) {
    auto& index = raw_index_.at(static_cast<std::size_t>(type));
    if (const auto it = index.find(raw); it != index.end()) return it->second;
    auto& ids = raw_ids_[static_cast<std::size_t>(type)];
    const int local = static_cast<int>(ids.size());
    ids.push_back(raw);
    index.emplace(raw, local);
    return local;
}

int Hcg::find_node(int type, std::string_view raw) const {
    const auto& index = raw_index_.at(static_cast<std::size_t>(type));
    const auto it = index.find(std::string(raw));
    return it == index.end() ? -1 : it->second;
}

const std::string& Hcg::raw_id(int type, int local) const {
    return raw_ids_.at(static_cast<std::size_t>(type)).at(static_cast<std::size_t>(local));
}

const std::vector<std::string>& Hcg::raw_ids(int type) const {
    return raw_ids_.at(static_cast<std::size_t>(type));
}

// ---- manifest ------------------------------------------------------------------

Manifest parse_manifest(const std::filesystem::path& path) {
    const Ini ini = Ini::parse_file(path);
    Manifest m;
    m.base_dir = path.parent_path();
    auto number = [&](const std::string& key, const std::string& v) {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ": " + key + " is not a number: '" + v + "'");
        }
    };
    if (const auto* s = ini.find("dataset"))
        if (const auto* v = s->get("name")) m.name = *v;
    const auto* inter = ini.find("interactions");
    if (!inter || !inter->get("file"))
        throw ConfigError(path.string() + ": manifest needs an [interactions] section with a file");
    m.interactions_file = *inter->get("file");
    if (const auto* v = inter->get("rating_threshold")) m.rating_threshold = number("rating_threshold", *v);
    if (const auto* v = inter->get("user_core")) m.user_core = static_cast<int>(number("user_core", *v));
    if (const auto* v = inter->get("item_core")) m.item_core = static_cast<int>(number("item_core", *v));
    for (const auto& sec : ini.sections) {
        if (sec.name.rfind("relation ", 0) == 0) {
            SideSpec side;
            side.name = trim(sec.name.substr(9));
            if (side.name.empty()) throw ConfigError(path.string() + ": relation section without a name");
            const auto *file = sec.get("file"), *src = sec.get("src"), *dst = sec.get("dst");
            if (!file || !src || !dst)
                throw ConfigError(path.string() + ": relation '" + side.name + "' needs file, src and dst");
            side.file = *file;
            side.src_type = *src;
            side.dst_type = *dst;
            m.sides.push_back(std::move(side));
        }
    }
    if (const auto* s = ini.find("locations")) {
        LocationSpec loc;
        const auto* file = s->get("file");
        if (!file) throw ConfigError(path.string() + ": [locations] needs a file");
        loc.file = *file;
        if (const auto* v = s->get("radius_km")) loc.radius_km = number("radius_km", *v);
        m.locations = std::move(loc);
    }
    return m;
}

// ---- ingest --------------------------------------------------------------------

Hcg ingest(const Manifest& m) {
    Hcg g = Hcg::make();
    const double threshold = m.rating_threshold.value_or(4.0);

    const auto inter_path = m.base_dir / m.interactions_file;
    std::unordered_set<std::uint64_t> seen;
    for_each_line(inter_path, [&](int line, const std::vector<std::string>& toks) {
        if (toks.size() != 2 && toks.size() != 3)
            bad_row(inter_path, line, "expected 'user item [rating]', got " +
                                          std::to_string(toks.size()) + " columns");
        if (toks.size() == 3 && parse_double(toks[2], inter_path, line) < threshold) return;
        const auto u = static_cast<std::int32_t>(g.node(Hcg::kUserType, toks[0]));
        const auto i = static_cast<std::int32_t>(g.node(Hcg::kItemType, toks[1]));
        if (seen.insert(edge_key(u, i)).second) g.interaction().edges.push_back({u, i});
    });

    for (const auto& side : m.sides) {
        Relation rel;
        rel.name = side.name;
        rel.src_type = g.add_type(side.src_type);
        rel.dst_type = g.add_type(side.dst_type);
        const auto path = m.base_dir / side.file;
        std::unordered_set<std::uint64_t> dedup;
        for_each_line(path, [&](int line, const std::vector<std::string>& toks) {
            if (toks.size() != 2) bad_row(path, line, "expected 'src dst'");
            auto a = static_cast<std::int32_t>(g.node(rel.src_type, toks[0]));
            auto b = static_cast<std::int32_t>(g.node(rel.dst_type, toks[1]));
            if (rel.src_type == rel.dst_type) {
                if (a == b) return;  // self edges carry no signal; aggregation adds self loops
                if (a > b) std::swap(a, b);
            }
            if (dedup.insert(edge_key(a, b)).second) rel.edges.push_back({a, b});
        });
        g.relations.push_back(std::move(rel));
    }

    if (m.locations) {
        const auto path = m.base_dir / m.locations->file;
        std::vector<Location> locs;
        for_each_line(path, [&](int line, const std::vector<std::string>& toks) {
            if (toks.size() != 3) bad_row(path, line, "expected 'item lat lon'");
            Location loc;
            loc.lat = parse_double(toks[1], path, line);
            loc.lon = parse_double(toks[2], path, line);
            if (loc.lat < -90.0 || loc.lat > 90.0) bad_row(path, line, "latitude out of [-90, 90]");
            if (loc.lon < -180.0 || loc.lon > 180.0) bad_row(path, line, "longitude out of [-180, 180]");
            loc.item = g.find_node(Hcg::kItemType, toks[0]);
            if (loc.item >= 0) locs.push_back(loc);  // coordinates of unseen items are ignored
        });
        Relation rel;
        rel.name = "neighbor";
        rel.src_type = Hcg::kItemType;
        rel.dst_type = Hcg::kItemType;
        rel.edges = geo_neighbors(std::move(locs), m.locations->radius_km);
        g.relations.push_back(std::move(rel));
    }
    return g;
}

// ---- geography -------------------------------------------------------------------

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kRadiusKm = 6371.0;
    constexpr double rad = std::numbers::pi / 180.0;
    const double dp = (lat2 - lat1) * rad;
    const double dl = (lon2 - lon1) * rad;
    const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                     std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dl / 2) * std::sin(dl / 2);
    return 2.0 * kRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

std::vector<Edge> geo_neighbors(std::vector<Location> locations, double radius_km) {
    if (!(radius_km > 0.0)) throw ConfigError("geo neighbor radius must be positive");
    std::sort(locations.begin(), locations.end(), [](const Location& a, const Location& b) {
        return std::tie(a.lat, a.lon, a.item) < std::tie(b.lat, b.lon, b.item);
    });
    // sliding latitude window; one degree of latitude is ~111.19 km
    const double lat_window = radius_km / 111.0;
    std::unordered_set<std::uint64_t> dedup;
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < locations.size(); ++i) {
        for (std::size_t j = i + 1; j < locations.size(); ++j) {
            if (locations[j].lat - locations[i].lat > lat_window) break;
            if (locations[i].item == locations[j].item) continue;
            if (haversine_km(locations[i].lat, locations[i].lon, locations[j].lat,
                             locations[j].lon) > radius_km)
                continue;
            auto a = static_cast<std::int32_t>(std::min(locations[i].item, locations[j].item));
            auto b = static_cast<std::int32_t>(std::max(locations[i].item, locations[j].item));
            if (dedup.insert(edge_key(a, b)).second) edges.push_back({a, b});
        }
    }
    return edges;
}

// ---- k-core ------------------------------------------------------------------------

Hcg k_core(const Hcg& g, int user_core, int item_core) {
    if (user_core < 1 || item_core < 1) throw ConfigError("core values must be >= 1");
    const int nu = g.type_count(Hcg::kUserType);
    const int ni = g.type_count(Hcg::kItemType);
    std::vector<std::vector<std::int32_t>> u_adj(static_cast<std::size_t>(nu));
    std::vector<std::vector<std::int32_t>> i_adj(static_cast<std::size_t>(ni));
    for (const auto& [u, i] : g.interaction().edges) {
        u_adj[static_cast<std::size_t>(u)].push_back(i);
        i_adj[static_cast<std::size_t>(i)].push_back(u);
    }
    std::vector<int> u_deg(static_cast<std::size_t>(nu)), i_deg(static_cast<std::size_t>(ni));
    std::vector<char> u_dead(static_cast<std::size_t>(nu), 0), i_dead(static_cast<std::size_t>(ni), 0);
    std::deque<std::pair<bool, std::int32_t>> queue;  // (is_user, local)
    for (int u = 0; u < nu; ++u) {
        u_deg[static_cast<std::size_t>(u)] = static_cast<int>(u_adj[static_cast<std::size_t>(u)].size());
        if (u_deg[static_cast<std::size_t>(u)] < user_core) queue.emplace_back(true, u), u_dead[static_cast<std::size_t>(u)] = 1;
    }
    for (int i = 0; i < ni; ++i) {
        i_deg[static_cast<std::size_t>(i)] = static_cast<int>(i_adj[static_cast<std::size_t>(i)].size());
        if (i_deg[static_cast<std::size_t>(i)] < item_core) queue.emplace_back(false, i), i_dead[static_cast<std::size_t>(i)] = 1;
    }
    while (!queue.empty()) {
        const auto [is_user, idx] = queue.front();
        queue.pop_front();
        if (is_user) {
            for (std::int32_t i : u_adj[static_cast<std::size_t>(idx)]) {
                if (i_dead[static_cast<std::size_t>(i)]) continue;
                if (--i_deg[static_cast<std::size_t>(i)] < item_core)
                    i_dead[static_cast<std::size_t>(i)] = 1, queue.emplace_back(false, i);
            }
        } else {
            for (std::int32_t u : i_adj[static_cast<std::size_t>(idx)]) {
                if (u_dead[static_cast<std::size_t>(u)]) continue;
                if (--u_deg[static_cast<std::size_t>(u)] < user_core)
                    u_dead[static_cast<std::size_t>(u)] = 1, queue.emplace_back(true, u);
            }
        }
    }

    // stable remaps for users/items
    std::vector<std::vector<int>> remap(static_cast<std::size_t>(g.num_types()));
    Hcg out = Hcg::make();
    for (int t = 2; t < g.num_types(); ++t) out.add_type(g.type_name(t));
    auto keep = [&](int type, int local) {
        auto& map = remap[static_cast<std::size_t>(type)];
        if (map.empty()) map.assign(g.raw_ids(type).size(), -1);
        if (map[static_cast<std::size_t>(local)] < 0)
            map[static_cast<std::size_t>(local)] = out.node(type, g.raw_id(type, local));
        return map[static_cast<std::size_t>(local)];
    };
    for (int u = 0; u < nu; ++u)
        if (!u_dead[static_cast<std::size_t>(u)]) keep(Hcg::kUserType, u);
    for (int i = 0; i < ni; ++i)
        if (!i_dead[static_cast<std::size_t>(i)]) keep(Hcg::kItemType, i);
    if (out.type_count(Hcg::kUserType) == 0 || out.type_count(Hcg::kItemType) == 0)
        throw EmptyGraphError("k-core removed every user or item (user_core=" +
                              std::to_string(user_core) + ", item_core=" + std::to_string(item_core) + ")");

    auto alive = [&](int type, std::int32_t local) {
        if (type == Hcg::kUserType) return !u_dead[static_cast<std::size_t>(local)];
        if (type == Hcg::kItemType) return !i_dead[static_cast<std::size_t>(local)];
        return true;  // side-type nodes are pruned only if they lose all edges
    };
    for (const auto& [u, i] : g.interaction().edges)
        if (!u_dead[static_cast<std::size_t>(u)] && !i_dead[static_cast<std::size_t>(i)])
            out.interaction().edges.push_back(
                {static_cast<std::int32_t>(remap[Hcg::kUserType][static_cast<std::size_t>(u)]),
                 static_cast<std::int32_t>(remap[Hcg::kItemType][static_cast<std::size_t>(i)])});

    for (std::size_t r = 1; r < g.relations.size(); ++r) {
        const auto& rel = g.relations[r];
        Relation kept{rel.name, rel.src_type, rel.dst_type, {}};
        for (const auto& [a, b] : rel.edges) {
            if (!alive(rel.src_type, a) || !alive(rel.dst_type, b)) continue;
            // side-type endpoints are created lazily, which prunes isolated ones
            kept.edges.push_back({static_cast<std::int32_t>(keep(rel.src_type, a)),
                                  static_cast<std::int32_t>(keep(rel.dst_type, b))});
        }
        out.relations.push_back(std::move(kept));
    }
    return out;
}

// ---- split --------------------------------------------------------------------------

SplitDataset split(Hcg g, std::uint64_t seed) {
    Rng rng(seed);
    const int nu = g.type_count(Hcg::kUserType);
    std::vector<std::vector<std::int32_t>> items(static_cast<std::size_t>(nu));
    for (const auto& [u, i] : g.interaction().edges) items[static_cast<std::size_t>(u)].push_back(i);

    SplitDataset ds;
    std::vector<Edge> pool;  // train portion before the validation carve
    for (int u = 0; u < nu; ++u) {
        auto& list = items[static_cast<std::size_t>(u)];
        if (list.empty()) continue;
        rng.shuffle(list);
        const int n = static_cast<int>(list.size());
        const int n_test = std::min(n - 1, static_cast<int>(std::floor(0.2 * n + 0.5)));
        for (int j = 0; j < n; ++j) {
            if (j < n_test)
                ds.test.push_back({u, list[static_cast<std::size_t>(j)]});
            else
                pool.push_back({u, list[static_cast<std::size_t>(j)]});
        }
    }

    // validation: 10% of the train portion, never a user's last train edge
    std::vector<int> train_left(static_cast<std::size_t>(nu), 0);
    for (const auto& e : pool) ++train_left[static_cast<std::size_t>(e.first)];
    std::vector<std::size_t> order(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) order[j] = j;
    rng.shuffle(order);
    const auto target = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(pool.size()) + 0.5));
    std::vector<char> in_val(pool.size(), 0);
    std::size_t taken = 0;
    for (std::size_t j = 0; j < order.size() && taken < target; ++j) {
        const auto& e = pool[order[j]];
        if (train_left[static_cast<std::size_t>(e.first)] <= 1) continue;
        --train_left[static_cast<std::size_t>(e.first)];
        in_val[order[j]] = 1;
        ++taken;
    }
    for (std::size_t j = 0; j < pool.size(); ++j)
        (in_val[j] ? ds.validation : ds.train).push_back(pool[j]);
    ds.hcg = std::move(g);
    return ds;
}

// ---- processed dataset directory ------------------------------------------------------

namespace {

std::string edges_tsv(std::span<const Edge> edges) {
    std::string out;
    for (const auto& [a, b] : edges) {
        out += std::to_string(a);
        out += '\t';
        out += std::to_string(b);
        out += '\n';
    }
    return out;
}

std::vector<Edge> read_edges_tsv(const std::filesystem::path& p) {
    std::vector<Edge> out;
    for_each_line(p, [&](int line, const std::vector<std::string>& toks) {
        if (toks.size() != 2) bad_row(p, line, "expected two indices");
        try {
            out.push_back({std::stoi(toks[0]), std::stoi(toks[1])});
        } catch (const std::exception&) {
            bad_row(p, line, "expected two indices");
        }
    });
    return out;
}

std::vector<std::filesystem::path> fingerprint_inputs(const std::filesystem::path& dir,
                                                      const std::vector<std::string>& types) {
    std::vector<std::filesystem::path> files = {dir / "train.tsv", dir / "validation.tsv",
                                                dir / "test.tsv"};
    for (const auto& t : types) files.push_back(dir / (t + "_ids.tsv"));
    return files;
}

}  // namespace

void save_dataset(const SplitDataset& ds, const std::string& name,
                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const Hcg& g = ds.hcg;
    std::vector<std::string> types;
    for (int t = 0; t < g.num_types(); ++t) {
        types.push_back(g.type_name(t));
        std::string body;
        const auto& ids = g.raw_ids(t);
        for (std::size_t i = 0; i < ids.size(); ++i)
            body += std::to_string(i) + "\t" + ids[i] + "\n";
        write_file(dir / (g.type_name(t) + "_ids.tsv"), body);
    }
    write_file(dir / "train.tsv", edges_tsv(ds.train));
    write_file(dir / "validation.tsv", edges_tsv(ds.validation));
    write_file(dir / "test.tsv", edges_tsv(ds.test));
    for (std::size_t r = 1; r < g.relations.size(); ++r)
        write_file(dir / ("relation_" + g.relations[r].name + ".tsv"),
                   edges_tsv(g.relations[r].edges));

    const std::string fp = fingerprint_files(fingerprint_inputs(dir, types));
    json meta;
    meta["name"] = name;
    meta["version"] = std::string(kVersion);
    meta["fingerprint"] = fp;
    for (int t = 0; t < g.num_types(); ++t)
        meta["types"].push_back({{"name", g.type_name(t)}, {"count", g.type_count(t)}});
    for (const auto& rel : g.relations)
        meta["relations"].push_back({{"name", rel.name},
                                     {"src", g.type_name(rel.src_type)},
                                     {"dst", g.type_name(rel.dst_type)},
                                     {"count", rel.edges.size()}});
    meta["split"] = {{"train", ds.train.size()},
                     {"validation", ds.validation.size()},
                     {"test", ds.test.size()}};
    write_file(dir / "dataset.json", meta.dump(2) + "\n");

    const auto interactions = ds.train.size() + ds.validation.size() + ds.test.size();
    json stats;
    stats["users"] = g.type_count(Hcg::kUserType);
    stats["items"] = g.type_count(Hcg::kItemType);
    stats["interactions"] = interactions;
    stats["density"] = static_cast<double>(interactions) /
                       (static_cast<double>(g.type_count(Hcg::kUserType)) *
                        static_cast<double>(g.type_count(Hcg::kItemType)));
    for (std::size_t r = 1; r < g.relations.size(); ++r)
        stats["side_relations"].push_back(
            {{"name", g.relations[r].name}, {"edges", g.relations[r].edges.size()}});
    write_file(dir / "stats.json", stats.dump(2) + "\n");
}

SplitDataset load_dataset(const std::filesystem::path& dir) {
    const auto meta_path = dir / "dataset.json";
    if (!std::filesystem::exists(meta_path))
        throw ConfigError("not a processed dataset directory (missing dataset.json): " + dir.string());
    const json meta = json::parse(read_file(meta_path));

    SplitDataset ds;
    ds.hcg = Hcg::make();
    Hcg& g = ds.hcg;
    std::vector<std::string> types;
    for (const auto& t : meta.at("types")) {
        const auto name = t.at("name").get<std::string>();
        types.push_back(name);
        const int type = g.add_type(name);
        for_each_line(dir / (name + "_ids.tsv"), [&](int line, const std::vector<std::string>& toks) {
            if (toks.size() != 2) bad_row(dir / (name + "_ids.tsv"), line, "expected 'index raw_id'");
            g.node(type, toks[1]);
        });
    }
    if (types.size() < 2 || types[0] != "user" || types[1] != "item")
        throw ConfigError(dir.string() + ": dataset types must start with user, item");

    ds.train = read_edges_tsv(dir / "train.tsv");
    ds.validation = read_edges_tsv(dir / "validation.tsv");
    ds.test = read_edges_tsv(dir / "test.tsv");
    auto& inter = g.interaction().edges;
    inter.insert(inter.end(), ds.train.begin(), ds.train.end());
    inter.insert(inter.end(), ds.validation.begin(), ds.validation.end());
    inter.insert(inter.end(), ds.test.begin(), ds.test.end());

    bool first = true;
    for (const auto& rel : meta.at("relations")) {
        if (first) {  // interaction is rebuilt from the split files
            first = false;
            continue;
        }
        Relation side;
        side.name = rel.at("name").get<std::string>();
        side.src_type = g.type_id(rel.at("src").get<std::string>());
        side.dst_type = g.type_id(rel.at("dst").get<std::string>());
        if (side.src_type < 0 || side.dst_type < 0)
            throw ConfigError(dir.string() + ": relation '" + side.name + "' references unknown type");
        side.edges = read_edges_tsv(dir / ("relation_" + side.name + ".tsv"));
        g.relations.push_back(std::move(side));
    }

    const std::string fp = fingerprint_files(fingerprint_inputs(dir, types));
    if (fp != meta.at("fingerprint").get<std::string>())
        throw std::runtime_error(dir.string() +
                                 ": fingerprint mismatch, dataset files were modified after prepare");
    return ds;
}

std::string dataset_fingerprint(const std::filesystem::path& dir) {
    const json meta = json::parse(read_file(dir / "dataset.json"));
    std::vector<std::string> types;
    for (const auto& t : meta.at("types")) types.push_back(t.at("name").get<std::string>());
    return fingerprint_files(fingerprint_inputs(dir, types));
}

// ---- adjacency -----------------------------------------------------------------------

Csr relation_csr(const Hcg& g, int src_type, int dst_type, std::span<const Edge> edges) {
    const auto off = g.type_offsets();
    const auto n = g.num_nodes();
    Csr csr;
    csr.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
    auto gid = [&](int type, std::int32_t local) {
        return off[static_cast<std::size_t>(type)] + local;
    };
    for (const auto& [a, b] : edges) {
        ++csr.offsets[static_cast<std::size_t>(gid(src_type, a)) + 1];
        ++csr.offsets[static_cast<std::size_t>(gid(dst_type, b)) + 1];
    }
    for (std::size_t i = 1; i < csr.offsets.size(); ++i) csr.offsets[i] += csr.offsets[i - 1];
    csr.targets.resize(static_cast<std::size_t>(csr.offsets.back()));
    std::vector<std::int64_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
    for (const auto& [a, b] : edges) {
        const auto ga = gid(src_type, a), gb = gid(dst_type, b);
        csr.targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(ga)]++)] =
            static_cast<std::int32_t>(gb);
        csr.targets[static_cast<std::size_t>(cursor[static_cast<std::size_t>(gb)]++)] =
            static_cast<std::int32_t>(ga);
    }
    return csr;
}

}  // namespace hgch::graph
