#include "hgch/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hgch/geometry.hpp"
#include "hgch/util.hpp"

namespace hgch::model {

namespace {

using nlohmann::json;

}  // namespace

// ---- enums --------------------------------------------------------------------

Fusion fusion_from_string(std::string_view s) {
    if (s == "none") return Fusion::none;
    if (s == "gate") return Fusion::gate;
    if (s == "prior") return Fusion::prior;
    if (s == "gate_prior") return Fusion::gate_prior;
    throw ConfigError("unknown fusion mode: '" + std::string(s) +
                      "' (expected none|gate|prior|gate_prior)");
}

Aggregation aggregation_from_string(std::string_view s) {
    if (s == "gyromidpoint") return Aggregation::gyromidpoint;
    if (s == "tangent") return Aggregation::tangent;
    throw ConfigError("unknown aggregation: '" + std::string(s) +
                      "' (expected gyromidpoint|tangent)");
}

Init init_from_string(std::string_view s) {
    if (s == "power_law") return Init::power_law;
    if (s == "uniform") return Init::uniform;
    throw ConfigError("unknown init: '" + std::string(s) + "' (expected power_law|uniform)");
}

std::string_view to_string(Fusion f) {
    switch (f) {
        case Fusion::none: return "none";
        case Fusion::gate: return "gate";
        case Fusion::prior: return "prior";
        case Fusion::gate_prior: return "gate_prior";
    }
    return "?";
}

std::string_view to_string(Aggregation a) {
    return a == Aggregation::gyromidpoint ? "gyromidpoint" : "tangent";
}

std::string_view to_string(Init i) { return i == Init::power_law ? "power_law" : "uniform"; }

// ---- config --------------------------------------------------------------------

void ModelConfig::validate() const {
    if (d < 1) throw ConfigError("embedding dim d must be >= 1");
    if (layers < 1) throw ConfigError("layer count must be >= 1");
    if (!(init_scale > 0.0) || !std::isfinite(init_scale))
        throw ConfigError("init scale must be positive");
    if (!(init_exponent >= 0.0) || !std::isfinite(init_exponent))
        throw ConfigError("init exponent must be >= 0");
    auto check_k = [](double k, const std::string& what) {
        if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError(what + " curvature must be positive");
    };
    check_k(curvature, "default");
    check_k(scoring_curvature, "scoring");
    for (const auto& [name, k] : subspace_curvature) check_k(k, "subspace '" + name + "'");
}

double ModelConfig::curvature_for(const std::string& relation) const {
    const auto it = subspace_curvature.find(relation);
    return it == subspace_curvature.end() ? curvature : it->second;
}

// ---- graph view ------------------------------------------------------------------

GraphView make_view(const graph::Hcg& g, std::span<const graph::Edge> train_interactions,
                    const ModelConfig& cfg) {
    cfg.validate();
    GraphView v;
    v.type_offsets = g.type_offsets();
    v.num_nodes = g.num_nodes();
    v.node_type.resize(static_cast<std::size_t>(v.num_nodes));
    for (int t = 0; t < g.num_types(); ++t)
        for (auto n = v.type_offsets[static_cast<std::size_t>(t)];
             n < v.type_offsets[static_cast<std::size_t>(t) + 1]; ++n)
            v.node_type[static_cast<std::size_t>(n)] = t;

    for (std::size_t r = 0; r < g.relations.size(); ++r) {
        const auto& rel = g.relations[r];
        const auto edges = r == 0 ? train_interactions : std::span<const graph::Edge>(rel.edges);
        v.subspaces.push_back(
            {rel.name, cfg.curvature_for(rel.name), relation_csr(g, rel.src_type, rel.dst_type, edges)});
    }

    v.node_subspaces.resize(static_cast<std::size_t>(v.num_nodes));
    for (std::int64_t n = 0; n < v.num_nodes; ++n)
        for (std::size_t s = 0; s < v.subspaces.size(); ++s) {
            const bool member = s == 0 ? v.node_type[static_cast<std::size_t>(n)] <= graph::Hcg::kItemType
                                       : v.subspaces[s].adj.degree(n) > 0;
            if (member) v.node_subspaces[static_cast<std::size_t>(n)].push_back(static_cast<int>(s));
        }

    v.frequency.assign(static_cast<std::size_t>(v.num_nodes), 0);
    std::int64_t clamped = 0;
    for (std::int64_t n = 0; n < v.num_nodes; ++n) {
        std::int64_t deg = 0;
        for (const auto& sub : v.subspaces) deg += sub.adj.degree(n);
        if (deg == 0) {
            deg = 1;
            ++clamped;
        }
        v.frequency[static_cast<std::size_t>(n)] = deg;
    }
    if (clamped > 0)
        std::fprintf(stderr, "warning: %lld nodes have no edges; frequency clamped to 1\n",
                     static_cast<long long>(clamped));
    return v;
}

// ---- params --------------------------------------------------------------------

int ModelParams::gate_index(int type, int subspace) const {
    for (std::size_t i = 0; i < gate_keys.size(); ++i)
        if (gate_keys[i] == std::pair(type, subspace)) return static_cast<int>(i);
    return -1;
}

std::int64_t ModelParams::parameter_count() const {
    return num_nodes() * d +
           static_cast<std::int64_t>(gate_keys.size()) * static_cast<std::int64_t>(d) * d;
}

ModelParams init_params(const ModelConfig& cfg, const GraphView& view, Rng& rng) {
    cfg.validate();
    ModelParams p;
    p.d = cfg.d;
    p.embeddings.resize(static_cast<std::size_t>(view.num_nodes) * static_cast<std::size_t>(cfg.d));
    for (std::int64_t n = 0; n < view.num_nodes; ++n) {
        double hw = cfg.init_scale;
        if (cfg.init == Init::power_law)
            hw *= std::pow(static_cast<double>(view.frequency[static_cast<std::size_t>(n)]),
                           -cfg.init_exponent);
        for (int j = 0; j < cfg.d; ++j)
            p.embeddings[static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.d) +
                         static_cast<std::size_t>(j)] = rng.uniform(-hw, hw);
    }
    if (cfg.fusion == Fusion::gate || cfg.fusion == Fusion::gate_prior) {
        std::set<std::pair<int, int>> keys;
        for (std::int64_t n = 0; n < view.num_nodes; ++n)
            for (int s : view.node_subspaces[static_cast<std::size_t>(n)])
                keys.insert({view.node_type[static_cast<std::size_t>(n)], s});
        const double bound = std::sqrt(6.0 / (cfg.d + cfg.d));
        for (const auto& key : keys) {
            p.gate_keys.push_back(key);
            std::vector<double> w(static_cast<std::size_t>(cfg.d) * static_cast<std::size_t>(cfg.d));
            for (auto& x : w) x = rng.uniform(-bound, bound);
            p.gates.push_back(std::move(w));
        }
    }
    return p;
}

// ---- forward tape -----------------------------------------------------------------

void ForwardBuild::sync_leaves(const ModelParams& p) {
    for (std::size_t n = 0; n < leaves.size(); ++n)
        tape.set_leaf(leaves[n], p.embedding(static_cast<std::int64_t>(n)));
    for (const auto& [key, id] : gate_leaves) {
        const int gi = p.gate_index(key.first, key.second);
        tape.set_leaf(id, p.gates[static_cast<std::size_t>(gi)]);
    }
}

ForwardBuild build_forward(const ModelConfig& cfg, const GraphView& view,
                           const ModelParams& params) {
    cfg.validate();
    ForwardBuild fb;
    auto& tape = fb.tape;
    const int d = cfg.d;
    const auto N = view.num_nodes;
    const bool gated = cfg.fusion == Fusion::gate || cfg.fusion == Fusion::gate_prior;

    fb.leaves.resize(static_cast<std::size_t>(N));
    for (std::int64_t n = 0; n < N; ++n) {
        const auto row = params.embedding(n);
        fb.leaves[static_cast<std::size_t>(n)] =
            tape.leaf(std::vector<double>(row.begin(), row.end()), true);
    }
    std::map<std::pair<int, int>, int> gate_leaf;
    if (gated)
        for (std::size_t i = 0; i < params.gate_keys.size(); ++i) {
            const int id = tape.leaf(params.gates[i], true);
            fb.gate_leaves.push_back({params.gate_keys[i], id});
            gate_leaf[params.gate_keys[i]] = id;
        }
    fb.one = tape.constant(1.0);

    // subspaces that actually propagate; fusion "none" keeps interactions only
    std::vector<int> active;
    for (std::size_t s = 0; s < view.subspaces.size(); ++s) {
        if (cfg.fusion == Fusion::none && s > 0) break;
        active.push_back(static_cast<int>(s));
    }
    auto members_of = [&](std::int64_t n) {
        std::vector<int> out;
        for (int s : view.node_subspaces[static_cast<std::size_t>(n)])
            if (s < static_cast<int>(active.size())) out.push_back(s);
        return out;
    };

    // Gate vectors come from the layer-0 embeddings only, so they are built
    // once and shared by every layer. Single-subspace nodes skip the gate:
    // the normalized weight is identically 1 there.
    std::vector<std::vector<int>> gate_vec(static_cast<std::size_t>(N));
    if (gated) {
        std::int64_t zero_norm = 0;
        for (std::int64_t n = 0; n < N; ++n) {
            const auto members = members_of(n);
            if (members.size() < 2) continue;
            const auto e0 = params.embedding(n);
            int ehat;
            if (geom::norm(e0) < 1e-12) {
                ehat = fb.leaves[static_cast<std::size_t>(n)];  // sigma(W 0) = 0.5 rows
                ++zero_norm;
            } else {
                const int nn = tape.norm(fb.leaves[static_cast<std::size_t>(n)]);
                ehat = tape.div(fb.leaves[static_cast<std::size_t>(n)], nn);
            }
            std::vector<int> raw;
            double total_deg = 0.0;
            for (int s : members) total_deg += view.subspaces[static_cast<std::size_t>(s)].adj.degree(n);
            for (int s : members) {
                const int gl = gate_leaf.at({view.node_type[static_cast<std::size_t>(n)], s});
                int a = tape.sigmoid(tape.matvec(gl, ehat, d, d));
                if (cfg.fusion == Fusion::gate_prior) {
                    const double deg =
                        total_deg > 0.0
                            ? static_cast<double>(view.subspaces[static_cast<std::size_t>(s)].adj.degree(n))
                            : 1.0;
                    if (deg != 1.0) {
                        const int xs[] = {a};
                        const double cs[] = {deg};
                        a = tape.weighted_sum(xs, cs);
                    }
                }
                raw.push_back(a);
            }
            const std::vector<double> ones(raw.size(), 1.0);
            const int z = tape.weighted_sum(raw, ones);
            gate_vec[static_cast<std::size_t>(n)].resize(active.size(), -1);
            for (std::size_t i = 0; i < members.size(); ++i)
                gate_vec[static_cast<std::size_t>(n)][static_cast<std::size_t>(members[i])] =
                    tape.div(raw[i], z);
        }
        if (zero_norm > 0)
            std::fprintf(stderr,
                         "warning: %lld nodes have zero-norm layer-0 embeddings; gate inputs left "
                         "unnormalized\n",
                         static_cast<long long>(zero_norm));
    }

    std::map<std::int64_t, int> count_consts;  // shared 1/(deg+1) divisors
    auto count_const = [&](std::int64_t m) {
        auto it = count_consts.find(m);
        if (it == count_consts.end())
            it = count_consts.emplace(m, tape.constant(static_cast<double>(m))).first;
        return it->second;
    };

    std::vector<int> prev = fb.leaves;
    std::vector<std::vector<int>> layer_out;
    for (int l = 0; l < cfg.layers; ++l) {
        std::vector<std::vector<int>> t(active.size(), std::vector<int>(static_cast<std::size_t>(N), -1));
        for (int s : active) {
            const auto& sub = view.subspaces[static_cast<std::size_t>(s)];
            auto is_member = [&](std::int64_t n) {
                const auto& subs = view.node_subspaces[static_cast<std::size_t>(n)];
                return std::find(subs.begin(), subs.end(), s) != subs.end();
            };
            if (cfg.aggregation == Aggregation::gyromidpoint) {
                std::vector<int> h(static_cast<std::size_t>(N), -1), lam(static_cast<std::size_t>(N), -1);
                for (std::int64_t n = 0; n < N; ++n)
                    if (is_member(n)) {
                        h[static_cast<std::size_t>(n)] = tape.exp_o(prev[static_cast<std::size_t>(n)], sub.k);
                        lam[static_cast<std::size_t>(n)] =
                            tape.conformal_factor(h[static_cast<std::size_t>(n)], sub.k);
                    }
                for (std::int64_t n = 0; n < N; ++n) {
                    if (!is_member(n)) continue;
                    const auto nbrs = sub.adj.neighbors(n);
                    std::vector<int> lam_in, pts;
                    lam_in.reserve(nbrs.size() + 2);
                    pts.reserve(nbrs.size() + 1);
                    for (const auto i : nbrs) {
                        lam_in.push_back(lam[static_cast<std::size_t>(i)]);
                        pts.push_back(h[static_cast<std::size_t>(i)]);
                    }
                    lam_in.push_back(lam[static_cast<std::size_t>(n)]);
                    pts.push_back(h[static_cast<std::size_t>(n)]);
                    std::vector<double> den_c(pts.size(), 1.0);
                    lam_in.push_back(fb.one);
                    den_c.push_back(-static_cast<double>(pts.size()));
                    const int denom = tape.weighted_sum(lam_in, den_c);
                    std::vector<int> terms(pts.size());
                    for (std::size_t i = 0; i < pts.size(); ++i)
                        terms[i] = tape.mul(tape.div(lam_in[i], denom), pts[i]);
                    const std::vector<double> ones(terms.size(), 1.0);
                    const int u = tape.weighted_sum(terms, ones);
                    const int mid = tape.mobius_scalar(0.5, u, sub.k);
                    t[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)] = tape.log_o(mid, sub.k);
                }
            } else {
                for (std::int64_t n = 0; n < N; ++n) {
                    if (!is_member(n)) continue;
                    const auto nbrs = sub.adj.neighbors(n);
                    std::vector<int> inputs;
                    inputs.reserve(nbrs.size() + 1);
                    for (const auto i : nbrs) inputs.push_back(prev[static_cast<std::size_t>(i)]);
                    inputs.push_back(prev[static_cast<std::size_t>(n)]);
                    const std::vector<double> ones(inputs.size(), 1.0);
                    const int sum = tape.weighted_sum(inputs, ones);
                    t[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)] =
                        tape.div(sum, count_const(static_cast<std::int64_t>(inputs.size())));
                }
            }
        }

        std::vector<int> next(static_cast<std::size_t>(N));
        for (std::int64_t n = 0; n < N; ++n) {
            const auto members = members_of(n);
            if (members.empty()) {
                next[static_cast<std::size_t>(n)] = prev[static_cast<std::size_t>(n)];
                continue;
            }
            if (members.size() == 1) {
                next[static_cast<std::size_t>(n)] =
                    t[static_cast<std::size_t>(members[0])][static_cast<std::size_t>(n)];
                continue;
            }
            std::vector<int> ts;
            for (int s : members) ts.push_back(t[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)]);
            if (cfg.fusion == Fusion::prior) {
                std::vector<double> w(members.size());
                double total = 0.0;
                for (std::size_t i = 0; i < members.size(); ++i) {
                    w[i] = static_cast<double>(
                        view.subspaces[static_cast<std::size_t>(members[i])].adj.degree(n));
                    total += w[i];
                }
                for (auto& x : w) x = total > 0.0 ? x / total : 1.0 / static_cast<double>(w.size());
                next[static_cast<std::size_t>(n)] = tape.weighted_sum(ts, w);
            } else {  // gate or gate_prior
                std::vector<int> terms(members.size());
                for (std::size_t i = 0; i < members.size(); ++i)
                    terms[i] = tape.mul(
                        gate_vec[static_cast<std::size_t>(n)][static_cast<std::size_t>(members[i])],
                        ts[i]);
                const std::vector<double> ones(terms.size(), 1.0);
                next[static_cast<std::size_t>(n)] = tape.weighted_sum(terms, ones);
            }
        }
        layer_out.push_back(next);
        prev = std::move(next);
    }

    fb.final_ids.resize(static_cast<std::size_t>(N));
    for (std::int64_t n = 0; n < N; ++n) {
        std::vector<int> parts;
        if (cfg.include_layer0) parts.push_back(fb.leaves[static_cast<std::size_t>(n)]);
        for (const auto& layer : layer_out) parts.push_back(layer[static_cast<std::size_t>(n)]);
        const std::vector<double> ones(parts.size(), 1.0);
        fb.final_ids[static_cast<std::size_t>(n)] = tape.weighted_sum(parts, ones);
    }
    fb.body_size = tape.size();
    return fb;
}

std::vector<double> forward_embeddings(const ModelConfig& cfg, const GraphView& view,
                                       const ModelParams& params) {
    const ForwardBuild fb = build_forward(cfg, view, params);
    std::vector<double> out(static_cast<std::size_t>(view.num_nodes) *
                            static_cast<std::size_t>(cfg.d));
    for (std::int64_t n = 0; n < view.num_nodes; ++n) {
        const auto& v = fb.tape.value(fb.final_ids[static_cast<std::size_t>(n)]);
        std::copy(v.begin(), v.end(),
                  out.begin() + static_cast<std::ptrdiff_t>(n) * cfg.d);
    }
    return out;
}

double score(std::span<const double> ei, std::span<const double> ej, double scoring_k) {
    std::vector<double> bi(ei.size()), bj(ej.size());
    geom::raw::exp_o(ei, scoring_k, bi);
    geom::raw::exp_o(ej, scoring_k, bj);
    return -geom::raw::sq_dist(bi, bj, scoring_k);
}

// ---- checkpoint --------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'H', 'G', 'C', 'H', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
    json j;
    j["d"] = c.d;
    j["layers"] = c.layers;
    j["curvature"] = c.curvature;
    j["subspace_curvature"] = c.subspace_curvature;
    j["scoring_curvature"] = c.scoring_curvature;
    j["init_scale"] = c.init_scale;
    j["init_exponent"] = c.init_exponent;
    j["fusion"] = std::string(to_string(c.fusion));
    j["aggregation"] = std::string(to_string(c.aggregation));
    j["init"] = std::string(to_string(c.init));
    j["include_layer0"] = c.include_layer0;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.d = j.at("d").get<int>();
    c.layers = j.at("layers").get<int>();
    c.curvature = j.at("curvature").get<double>();
    c.subspace_curvature = j.at("subspace_curvature").get<std::map<std::string, double>>();
    c.scoring_curvature = j.at("scoring_curvature").get<double>();
    c.init_scale = j.at("init_scale").get<double>();
    c.init_exponent = j.at("init_exponent").get<double>();
    c.fusion = fusion_from_string(j.at("fusion").get<std::string>());
    c.aggregation = aggregation_from_string(j.at("aggregation").get<std::string>());
    c.init = init_from_string(j.at("init").get<std::string>());
    c.include_layer0 = j.at("include_layer0").get<bool>();
    c.validate();
    return c;
}

void append(std::string& buf, const void* data, std::size_t n) {
    buf.append(static_cast<const char*>(data), n);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParams& params, const std::string& dataset_fingerprint) {
    json header;
    header["config"] = config_to_json(cfg);
    header["dataset_fingerprint"] = dataset_fingerprint;
    header["num_nodes"] = params.num_nodes();
    header["gate_keys"] = params.gate_keys;
    const std::string hs = header.dump();

    std::string buf;
    append(buf, kMagic, sizeof kMagic);
    append(buf, &kCheckpointVersion, sizeof kCheckpointVersion);
    const std::uint64_t hlen = hs.size();
    append(buf, &hlen, sizeof hlen);
    buf += hs;
    append(buf, params.embeddings.data(), params.embeddings.size() * sizeof(double));
    for (const auto& g : params.gates) append(buf, g.data(), g.size() * sizeof(double));

    Fnv1a h;
    h.update(buf);
    const std::uint64_t sum = h.digest();
    append(buf, &sum, sizeof sum);
    write_file(path, buf);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    const std::size_t min_size = sizeof kMagic + sizeof kCheckpointVersion + 2 * sizeof(std::uint64_t);
    if (buf.size() < min_size || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());

    std::uint64_t sum = 0;
    std::memcpy(&sum, buf.data() + buf.size() - sizeof sum, sizeof sum);
    Fnv1a h;
    h.update(buf.data(), buf.size() - sizeof sum);
    if (h.digest() != sum)
        throw std::runtime_error("checkpoint checksum mismatch (file corrupted): " + path.string());

    std::size_t off = sizeof kMagic;
    std::uint32_t version = 0;
    std::memcpy(&version, buf.data() + off, sizeof version);
    off += sizeof version;
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint format version " + std::to_string(version));
    std::uint64_t hlen = 0;
    std::memcpy(&hlen, buf.data() + off, sizeof hlen);
    off += sizeof hlen;
    if (off + hlen > buf.size() - sizeof sum)
        throw std::runtime_error("checkpoint header truncated: " + path.string());
    const json header = json::parse(buf.substr(off, hlen));
    off += hlen;

    Checkpoint ck;
    ck.config = config_from_json(header.at("config"));
    ck.dataset_fingerprint = header.at("dataset_fingerprint").get<std::string>();
    const auto num_nodes = header.at("num_nodes").get<std::int64_t>();
    ck.params.d = ck.config.d;
    ck.params.gate_keys = header.at("gate_keys").get<std::vector<std::pair<int, int>>>();

    const std::size_t emb_bytes =
        static_cast<std::size_t>(num_nodes) * static_cast<std::size_t>(ck.config.d) * sizeof(double);
    const std::size_t gate_bytes = ck.params.gate_keys.size() *
                                   static_cast<std::size_t>(ck.config.d) *
                                   static_cast<std::size_t>(ck.config.d) * sizeof(double);
    if (off + emb_bytes + gate_bytes != buf.size() - sizeof sum)
        throw std::runtime_error("checkpoint payload size mismatch: " + path.string());

    ck.params.embeddings.resize(emb_bytes / sizeof(double));
    std::memcpy(ck.params.embeddings.data(), buf.data() + off, emb_bytes);
    off += emb_bytes;
    for (std::size_t i = 0; i < ck.params.gate_keys.size(); ++i) {
        std::vector<double> g(static_cast<std::size_t>(ck.config.d) *
                              static_cast<std::size_t>(ck.config.d));
        std::memcpy(g.data(), buf.data() + off, g.size() * sizeof(double));
        off += g.size() * sizeof(double);
        ck.params.gates.push_back(std::move(g));
    }
    return ck;
}

// ---- export ---------------------------------------------------------------------------

void export_embeddings_csv(const std::filesystem::path& path, const graph::Hcg& g,
                           const GraphView& view, std::span<const double> final_embeddings,
                           int d) {
    // per-type popularity quartiles by ascending frequency rank, q1 = least popular
    std::vector<int> quartile(static_cast<std::size_t>(view.num_nodes), 0);
    for (int t = 0; t < g.num_types(); ++t) {
        const auto b = view.type_offsets[static_cast<std::size_t>(t)];
        const auto e = view.type_offsets[static_cast<std::size_t>(t) + 1];
        std::vector<std::int64_t> order;
        for (auto n = b; n < e; ++n) order.push_back(n);
        std::sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
            const auto fx = view.frequency[static_cast<std::size_t>(x)];
            const auto fy = view.frequency[static_cast<std::size_t>(y)];
            return fx != fy ? fx < fy : x < y;
        });
        for (std::size_t r = 0; r < order.size(); ++r)
            quartile[static_cast<std::size_t>(order[r])] =
                std::min(3, static_cast<int>(4 * r / order.size()));
    }

    std::ostringstream out;
    out << "node_id,type,popularity";
    for (int j = 0; j < d; ++j) out << ",e" << j;
    out << "\n";
    out.precision(17);
    for (std::int64_t n = 0; n < view.num_nodes; ++n) {
        const int t = view.node_type[static_cast<std::size_t>(n)];
        const int local = static_cast<int>(n - view.type_offsets[static_cast<std::size_t>(t)]);
        out << g.raw_id(t, local) << ',' << g.type_name(t) << ",q"
            << quartile[static_cast<std::size_t>(n)] + 1;
        for (int j = 0; j < d; ++j)
            out << ',' << final_embeddings[static_cast<std::size_t>(n) * static_cast<std::size_t>(d) +
                                           static_cast<std::size_t>(j)];
        out << "\n";
    }
    write_file(path, out.str());
}

}  // namespace hgch::model
