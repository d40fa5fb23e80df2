#include "hgch/config.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include "hgch/util.hpp"

namespace hgch::config {
namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

long long to_int(std::string_view v, const std::string& where) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        bad(where, "not an integer: '" + std::string(v) + "'");
    return x;
}

double to_double(std::string_view v, const std::string& where) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        bad(where, "not a number: '" + std::string(v) + "'");
    return x;
}

bool to_bool(std::string_view v, const std::string& where) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad(where, "not a boolean (true/false): '" + std::string(v) + "'");
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

std::vector<int> parse_ks(std::string_view text, const std::string& where) {
    std::vector<int> ks;
    for (const auto& tok : split_on(text, ',')) {
        const auto t = trim(tok);
        if (t.empty()) bad(where, "empty entry in K list");
        ks.push_back(static_cast<int>(to_int(t, where)));
    }
    if (ks.empty()) bad(where, "K list is empty");
    return ks;
}

void apply_key(RunConfig& c, std::string_view key, std::string_view value,
               const std::string& where) {
    auto& m = c.model;
    auto& t = c.train;
    if (key == "model.d") m.d = static_cast<int>(to_int(value, where));
    else if (key == "model.layers") m.layers = static_cast<int>(to_int(value, where));
    else if (key == "model.curvature") m.curvature = to_double(value, where);
    else if (key.starts_with("model.curvature."))
        m.subspace_curvature[std::string(key.substr(16))] = to_double(value, where);
    else if (key == "model.scoring_curvature") m.scoring_curvature = to_double(value, where);
    else if (key == "model.init_scale") m.init_scale = to_double(value, where);
    else if (key == "model.init_exponent") m.init_exponent = to_double(value, where);
    else if (key == "model.fusion") m.fusion = model::fusion_from_string(value);
    else if (key == "model.aggregation") m.aggregation = model::aggregation_from_string(value);
    else if (key == "model.init") m.init = model::init_from_string(value);
    else if (key == "model.include_layer0") m.include_layer0 = to_bool(value, where);
    else if (key == "train.margin") t.margin = to_double(value, where);
    else if (key.starts_with("train.margin."))
        t.relation_margins[std::string(key.substr(13))] = to_double(value, where);
    else if (key == "train.aux_weight") t.aux_weight = to_double(value, where);
    else if (key == "train.n_neg") t.n_neg = static_cast<int>(to_int(value, where));
    else if (key == "train.sampling") t.sampling = train::sampling_from_string(value);
    else if (key == "train.lr") t.lr = to_double(value, where);
    else if (key == "train.batch_size") t.batch_size = static_cast<int>(to_int(value, where));
    else if (key == "train.max_epochs") t.max_epochs = static_cast<int>(to_int(value, where));
    else if (key == "train.patience") t.patience = static_cast<int>(to_int(value, where));
    else if (key == "train.seed") t.seed = static_cast<std::uint64_t>(to_int(value, where));
    else if (key == "train.beta1") t.beta1 = to_double(value, where);
    else if (key == "train.beta2") t.beta2 = to_double(value, where);
    else if (key == "train.eps") t.eps = to_double(value, where);
    else if (key == "train.threads") t.threads = static_cast<int>(to_int(value, where));
    else if (key == "eval.ks") c.ks = parse_ks(value, where);
    else if (key == "data.dataset") c.dataset_dir = value;
    else if (key == "data.run") c.run_dir = value;
    else bad(where, "unknown config key '" + std::string(key) + "'");
}

void apply_file(RunConfig& c, const std::filesystem::path& path) {
    const Ini ini = Ini::parse_file(path);
    for (const auto& sec : ini.sections) {
        if (sec.name != "model" && sec.name != "train" && sec.name != "eval" &&
            sec.name != "data")
            throw ConfigError(path.string() + ": unknown config section [" + sec.name + "]");
        for (const auto& [k, v] : sec.entries)
            apply_key(c, sec.name + "." + k, v, path.string() + " [" + sec.name + "]");
    }
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (ks.empty()) throw ConfigError("eval.ks must list at least one cutoff");
    for (const int k : ks)
        if (k < 1) throw ConfigError("eval.ks entries must be >= 1");
}

std::string resolved_text(const RunConfig& c) {
    std::ostringstream out;
    out << "[model]\n";
    out << "d = " << c.model.d << "\n";
    out << "layers = " << c.model.layers << "\n";
    out << "curvature = " << fmt(c.model.curvature) << "\n";
    for (const auto& [name, k] : c.model.subspace_curvature)
        out << "curvature." << name << " = " << fmt(k) << "\n";
    out << "scoring_curvature = " << fmt(c.model.scoring_curvature) << "\n";
    out << "init_scale = " << fmt(c.model.init_scale) << "\n";
    out << "init_exponent = " << fmt(c.model.init_exponent) << "\n";
    out << "fusion = " << to_string(c.model.fusion) << "\n";
    out << "aggregation = " << to_string(c.model.aggregation) << "\n";
    out << "init = " << to_string(c.model.init) << "\n";
    out << "include_layer0 = " << (c.model.include_layer0 ? "true" : "false") << "\n";
    out << "\n[train]\n";
    out << "margin = " << fmt(c.train.margin) << "\n";
    for (const auto& [name, margin] : c.train.relation_margins)
        out << "margin." << name << " = " << fmt(margin) << "\n";
    out << "aux_weight = " << fmt(c.train.aux_weight) << "\n";
    out << "n_neg = " << c.train.n_neg << "\n";
    out << "sampling = " << to_string(c.train.sampling) << "\n";
    out << "lr = " << fmt(c.train.lr) << "\n";
    out << "batch_size = " << c.train.batch_size << "\n";
    out << "max_epochs = " << c.train.max_epochs << "\n";
    out << "patience = " << c.train.patience << "\n";
    out << "seed = " << c.train.seed << "\n";
    out << "beta1 = " << fmt(c.train.beta1) << "\n";
    out << "beta2 = " << fmt(c.train.beta2) << "\n";
    out << "eps = " << fmt(c.train.eps) << "\n";
    out << "threads = " << c.train.threads << "\n";
    out << "\n[eval]\nks = ";
    for (std::size_t i = 0; i < c.ks.size(); ++i) out << (i ? "," : "") << c.ks[i];
    out << "\n";
    out << "\n[data]\n";
    out << "dataset = " << c.dataset_dir << "\n";
    out << "run = " << c.run_dir << "\n";
    return out.str();
}

}  // namespace hgch::config
