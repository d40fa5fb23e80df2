#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hgch/config.hpp"
#include "hgch/eval.hpp"
#include "hgch/hcg.hpp"
#include "hgch/model.hpp"
#include "hgch/rng.hpp"
#include "hgch/train.hpp"
#include "hgch/util.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

using hgch::ConfigError;

// flags accumulate as dotted-key overrides applied after the config file
struct FlagOverrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> kv;
};

void add_run_options(CLI::App* cmd, FlagOverrides& ov) {
    cmd->add_option("--config", ov.config_path, "INI config applied over built-in defaults");
    const auto opt = [cmd, &ov](const std::string& flag, const std::string& key,
                                const std::string& help) {
        cmd->add_option(flag, help)
            ->each([&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); })
            ->take_all();
    };
    opt("--d", "model.d", "embedding dimension");
    opt("--layers", "model.layers", "graph convolution layers");
    opt("--curvature", "model.curvature", "default subspace curvature");
    opt("--scoring-curvature", "model.scoring_curvature", "curvature of the scoring ball");
    opt("--init-scale", "model.init_scale", "init scale a in Uni(-a x^-b, a x^-b)");
    opt("--init-exponent", "model.init_exponent", "init exponent b");
    opt("--fusion", "model.fusion", "none|gate|prior|gate_prior");
    opt("--aggregation", "model.aggregation", "gyromidpoint|tangent");
    opt("--init", "model.init", "power_law|uniform");
    opt("--include-layer0", "model.include_layer0", "add layer 0 to the skip sum (true|false)");
    opt("--margin", "train.margin", "ranking margin");
    opt("--aux-weight", "train.aux_weight", "side relation loss weight");
    opt("--n-neg", "train.n_neg", "negative candidates per positive");
    opt("--sampling", "train.sampling", "hyperbolic|uniform");
    opt("--lr", "train.lr", "learning rate");
    opt("--batch-size", "train.batch_size", "interaction edges per batch");
    opt("--max-epochs", "train.max_epochs", "epoch budget");
    opt("--patience", "train.patience", "early stopping patience (epochs)");
    opt("--seed", "train.seed", "run seed");
    opt("--threads", "train.threads", "worker threads (0 = hardware concurrency)");
    opt("--ks", "eval.ks", "comma-separated ranking cutoffs");
    opt("--dataset", "data.dataset", "processed dataset directory");
    opt("--run", "data.run", "run output directory");
    cmd->add_option("--set", "generic section.key=value override, repeatable")
        ->each([&ov](const std::string& kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects section.key=value, got '" + kv + "'");
            ov.kv.emplace_back(hgch::trim(kv.substr(0, eq)), hgch::trim(kv.substr(eq + 1)));
        })
        ->take_all();
}

hgch::config::RunConfig resolve(const FlagOverrides& ov) {
    hgch::config::RunConfig c;
    if (!ov.config_path.empty()) hgch::config::apply_file(c, ov.config_path);
    for (const auto& [k, v] : ov.kv) hgch::config::apply_key(c, k, v, "command line");
    c.validate();
    return c;
}

void run_prepare(const fs::path& manifest_path, const fs::path& out, std::uint64_t seed) {
    using namespace hgch;
    const auto m = graph::parse_manifest(manifest_path);
    const auto g = graph::ingest(m);

    ojson stats;
    stats["dataset"] = m.name;
    stats["seed"] = seed;
    stats["version"] = std::string(kVersion);
    stats["raw"] = {{"users", g.type_count(graph::Hcg::kUserType)},
                    {"items", g.type_count(graph::Hcg::kItemType)},
                    {"interactions", g.interaction().edges.size()}};

    auto ds = graph::split(graph::k_core(g, m.user_core, m.item_core), seed);
    fs::create_directories(out);
    graph::save_dataset(ds, m.name, out);

    ojson types = ojson::array();
    for (int t = 0; t < ds.hcg.num_types(); ++t)
        types.push_back({{"name", ds.hcg.type_name(t)}, {"count", ds.hcg.type_count(t)}});
    ojson rels = ojson::array();
    for (const auto& r : ds.hcg.relations)
        rels.push_back({{"name", r.name},
                        {"src", ds.hcg.type_name(r.src_type)},
                        {"dst", ds.hcg.type_name(r.dst_type)},
                        {"edges", r.edges.size()}});
    stats["user_core"] = m.user_core;
    stats["item_core"] = m.item_core;
    stats["nodes"] = types;
    stats["relations"] = rels;
    stats["split"] = {{"train", ds.train.size()},
                      {"validation", ds.validation.size()},
                      {"test", ds.test.size()}};
    stats["fingerprint"] = graph::dataset_fingerprint(out);
    write_file(out / "stats.json", stats.dump(2) + "\n");

    std::cout << "prepared '" << m.name << "' -> " << out.string() << "\n"
              << "  users " << ds.hcg.type_count(graph::Hcg::kUserType) << ", items "
              << ds.hcg.type_count(graph::Hcg::kItemType) << ", relations "
              << ds.hcg.relations.size() << "\n"
              << "  split train/validation/test = " << ds.train.size() << "/"
              << ds.validation.size() << "/" << ds.test.size() << "\n"
              << "  fingerprint " << stats["fingerprint"].get<std::string>() << "\n";
}

void run_train(const FlagOverrides& ov) {
    using namespace hgch;
    const auto cfg = resolve(ov);
    if (cfg.dataset_dir.empty())
        throw ConfigError("train needs a dataset directory (--dataset or [data] dataset)");
    if (cfg.run_dir.empty())
        throw ConfigError("train needs a run directory (--run or [data] run)");

    const fs::path run_dir = cfg.run_dir;
    fs::create_directories(run_dir);
    const auto ds = graph::load_dataset(cfg.dataset_dir);
    const auto fp = graph::dataset_fingerprint(cfg.dataset_dir);
    write_file(run_dir / "config.ini", config::resolved_text(cfg));

    std::ofstream log(run_dir / "train_log.jsonl", std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write " + (run_dir / "train_log.jsonl").string());

    const auto t0 = std::chrono::steady_clock::now();
    const auto res =
        train::train(cfg.model, cfg.train, ds, [&](const train::EpochStats& e) {
            ojson j;
            j["epoch"] = e.epoch;
            j["train_loss"] = e.train_loss;
            j["val_recall@10"] = e.val_recall10;
            j["val_ndcg@10"] = e.val_ndcg10;
            j["wall_ms"] = e.wall_ms;
            log << j.dump() << "\n" << std::flush;
            std::cout << "epoch " << e.epoch << "  loss " << e.train_loss << "  val_ndcg@10 "
                      << e.val_ndcg10 << "  (" << e.wall_ms << " ms)\n";
        });
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();

    model::save_checkpoint(run_dir / "checkpoint.bin", cfg.model, res.best_params, fp);

    ojson info;
    info["version"] = std::string(kVersion);
    info["version_hash"] = version_hash();
    info["dataset"] = cfg.dataset_dir;
    info["dataset_fingerprint"] = fp;
    info["epochs_run"] = res.history.size();
    info["best_epoch"] = res.best_epoch;
    info["best_val_ndcg@10"] = res.best_val_ndcg;
    info["stopped_early"] = res.stopped_early;
    info["wall_ms"] = wall_ms;
    write_file(run_dir / "run_info.json", info.dump(2) + "\n");

    std::cout << "best epoch " << res.best_epoch << "  val_ndcg@10 " << res.best_val_ndcg
              << "\ncheckpoint -> " << (run_dir / "checkpoint.bin").string() << "\n";
}

// loads a checkpoint and refuses to pair it with a dataset it was not trained on
hgch::model::Checkpoint load_verified(const fs::path& checkpoint, const fs::path& dataset) {
    auto ck = hgch::model::load_checkpoint(checkpoint);
    const auto fp = hgch::graph::dataset_fingerprint(dataset);
    if (fp != ck.dataset_fingerprint)
        throw std::runtime_error("dataset fingerprint mismatch: checkpoint was trained on " +
                                 ck.dataset_fingerprint + " but " + dataset.string() +
                                 " hashes to " + fp);
    return ck;
}

void run_eval(const fs::path& checkpoint, const fs::path& dataset, const std::string& split,
              const std::string& ks_text, const fs::path& out, int threads) {
    using namespace hgch;
    const auto ks = config::parse_ks(ks_text, "--ks");
    const auto ck = load_verified(checkpoint, dataset);
    const auto ds = graph::load_dataset(dataset);

    std::span<const graph::Edge> relevant;
    if (split == "test") relevant = ds.test;
    else if (split == "validation") relevant = ds.validation;
    else throw ConfigError("--split must be 'test' or 'validation', got '" + split + "'");

    const auto view = model::make_view(ds.hcg, ds.train, ck.config);
    const auto emb = model::forward_embeddings(ck.config, view, ck.params);
    const auto rep =
        eval::evaluate(view, emb, ck.config.scoring_curvature, ds.train, relevant, ks, threads);

    fs::create_directories(out);
    eval::write_report_json(out / "report.json", rep);
    eval::write_report_csv(out / "report.csv", rep);
    eval::write_per_user_tsv(out / "per_user.tsv", rep);

    std::cout << "eval on " << split << " (" << rep.user_ids.size() << " users)\n";
    for (const int k : ks)
        std::cout << "  K=" << k << "  recall " << rep.mean_recall(k) << "  ndcg "
                  << rep.mean_ndcg(k) << "  head-recall " << rep.mean_recall(k, "head")
                  << "  tail-recall " << rep.mean_recall(k, "tail") << "\n";
    std::cout << "reports -> " << out.string() << "\n";
}

void run_export(const fs::path& checkpoint, const fs::path& dataset, const fs::path& out) {
    using namespace hgch;
    const auto ck = load_verified(checkpoint, dataset);
    const auto ds = graph::load_dataset(dataset);
    const auto view = model::make_view(ds.hcg, ds.train, ck.config);
    const auto emb = model::forward_embeddings(ck.config, view, ck.params);
    model::export_embeddings_csv(out, ds.hcg, view, emb, ck.config.d);
    std::cout << "wrote " << view.num_nodes << " rows -> " << out.string() << "\n";
}

// Gradient diagnostic on a fixed 6-node instance: 2 users and 3 items with a
// full interaction set, an item-item side relation, and a tag relation, with
// random parameters and margin triplets over the first two relations.
// Triplets whose hinge argument sits within 1e-3 of the kink are skipped;
// central differences straddle the non-smooth point there.
int run_grad_check(const FlagOverrides& ov, bool float32) {
    using namespace hgch;
    const auto cfg = resolve(ov);

    graph::Hcg g = graph::Hcg::make();
    for (const auto* u : {"u0", "u1"}) g.node(graph::Hcg::kUserType, u);
    for (const auto* i : {"i0", "i1", "i2"}) g.node(graph::Hcg::kItemType, i);
    g.node(g.add_type("tag"), "t0");
    g.interaction().edges = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}};
    g.relations.push_back({"also_view", graph::Hcg::kItemType, graph::Hcg::kItemType,
                           {{0, 1}, {1, 2}}});
    g.relations.push_back({"tagged", graph::Hcg::kItemType, g.type_id("tag"), {{0, 0}, {2, 0}}});

    const auto view = model::make_view(g, g.interaction().edges, cfg.model);
    Rng rng(cfg.train.seed);
    const auto params = model::init_params(cfg.model, view, rng);
    const auto emb = model::forward_embeddings(cfg.model, view, params);
    const auto row = [&](int n) {
        return std::span<const double>(emb).subspan(
            static_cast<std::size_t>(n) * static_cast<std::size_t>(cfg.model.d),
            static_cast<std::size_t>(cfg.model.d));
    };

    // global ids: users 0-1, items 2-4, tag 5
    const std::vector<train::Triplet> candidates = {{0, 2, 4, 0}, {1, 4, 2, 0}, {2, 3, 4, 1}};
    std::vector<train::Triplet> kept;
    for (const auto& t : candidates) {
        const std::string rel = view.subspaces[static_cast<std::size_t>(t.relation)].name;
        const double arg = model::score(row(t.anchor), row(t.negative), cfg.model.scoring_curvature) -
                           model::score(row(t.anchor), row(t.positive), cfg.model.scoring_curvature) +
                           cfg.train.margin_for(rel);
        if (std::abs(arg) > 1e-3) kept.push_back(t);
    }
    std::cout << "grad-check: 6 nodes, " << view.subspaces.size() << " relations, d=" << cfg.model.d
              << ", layers=" << cfg.model.layers << ", fusion=" << to_string(cfg.model.fusion)
              << "\n";
    if (kept.size() < candidates.size())
        std::cout << "skipped " << candidates.size() - kept.size()
                  << " near-kink triplet(s); re-run with another --seed to cover them\n";
    if (kept.empty()) {
        std::cerr << "all triplets within 1e-3 of the hinge kink; nothing to check\n";
        return 1;
    }

    auto fb = model::build_forward(cfg.model, view, params);
    train::record_loss(fb, cfg.model, cfg.train, view, kept);

    const double h = float32 ? 1e-3 : 1e-6;
    const double tol = float32 ? 1e-2 : 1e-4;
    const auto prec = float32 ? ad::Precision::f32 : ad::Precision::f64;
    const auto rep = ad::grad_check(fb.tape, h, tol, prec);

    std::cout << "checked " << rep.coords_checked << " coordinates, max rel err "
              << rep.max_rel_err << " (h=" << h << ", tol=" << tol
              << (float32 ? ", float32" : "") << ")\n";
    if (rep.passed) {
        std::cout << "PASS\n";
        return 0;
    }
    std::cout << "FAIL: worst coordinate at leaf " << rep.worst.leaf << " index "
              << rep.worst.index << " (finite-difference " << rep.worst.fd << ", reverse-mode "
              << rep.worst.ad << ", rel err " << rep.worst.rel_err << ")\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperbolic graph convolutional recommender"};
    app.require_subcommand(1);
    int rc = 0;

    fs::path prep_manifest, prep_out;
    std::uint64_t prep_seed = 42;
    auto* prep = app.add_subcommand("prepare", "ingest raw TSVs into a processed dataset");
    prep->add_option("manifest", prep_manifest, "dataset manifest (INI)")->required();
    prep->add_option("--out", prep_out, "output directory")->required();
    prep->add_option("--seed", prep_seed, "split seed");
    prep->callback([&] { run_prepare(prep_manifest, prep_out, prep_seed); });

    FlagOverrides train_ov;
    auto* tr = app.add_subcommand("train", "train a model and keep the best checkpoint");
    add_run_options(tr, train_ov);
    tr->callback([&] { run_train(train_ov); });

    fs::path ev_checkpoint, ev_dataset, ev_out = ".";
    std::string ev_split = "test", ev_ks = "10,20";
    int ev_threads = 0;
    auto* ev = app.add_subcommand("eval", "rank and report recall/ndcg per stratum");
    ev->add_option("--checkpoint", ev_checkpoint, "checkpoint file")->required();
    ev->add_option("--dataset", ev_dataset, "processed dataset directory")->required();
    ev->add_option("--split", ev_split, "test|validation");
    ev->add_option("--ks", ev_ks, "comma-separated cutoffs");
    ev->add_option("--out", ev_out, "report output directory");
    ev->add_option("--threads", ev_threads, "worker threads (0 = hardware concurrency)");
    ev->callback([&] { run_eval(ev_checkpoint, ev_dataset, ev_split, ev_ks, ev_out, ev_threads); });

    fs::path ex_checkpoint, ex_dataset, ex_out;
    auto* ex = app.add_subcommand("export-embeddings",
                                  "dump final embeddings with popularity quartiles");
    ex->add_option("--checkpoint", ex_checkpoint, "checkpoint file")->required();
    ex->add_option("--dataset", ex_dataset, "processed dataset directory")->required();
    ex->add_option("--out", ex_out, "output CSV path")->required();
    ex->callback([&] { run_export(ex_checkpoint, ex_dataset, ex_out); });

    FlagOverrides gc_ov;
    bool gc_float32 = false;
    auto* gc = app.add_subcommand("grad-check",
                                  "compare reverse-mode gradients with finite differences");
    add_run_options(gc, gc_ov);
    gc->add_flag("--float32", gc_float32, "single-precision forward pass, tolerance 1e-2");
    gc->callback([&] { rc = run_grad_check(gc_ov, gc_float32); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse diagnostic
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
