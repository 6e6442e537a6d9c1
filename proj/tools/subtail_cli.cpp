#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "subtail/data_io.hpp"

using namespace subtail;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return 1;
        case ErrorKind::data: return 2;
        case ErrorKind::numerical: return 3;
    }
    return 2;
}

// Diagnostics are single lines so scripts can parse them.
void diagnose(std::string_view kind, std::string message) {
    for (char& c : message)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "subtail: " << kind << " error: " << message << '\n';
}

int env_threads() {
    const char* v = std::getenv("SUBTAIL_THREADS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw Error(ErrorKind::usage, "SUBTAIL_THREADS must be a positive integer");
    return static_cast<int>(n);
}

Dataset subset_or_throw(const Dataset& ds, const std::vector<std::size_t>& idx, const char* name) {
    if (idx.empty()) throw data_error(std::string(name) + " split is empty");
    return ds.subset(idx);
}

void cmd_generate(const fs::path& spec_path, const fs::path& out) {
    const auto spec = parse_synthetic_spec(read_text_file(spec_path));
    const auto ds = generate_synthetic(spec);
    save_features(out, ds);
    std::cout << json{{"samples", ds.size()}, {"dim", ds.dim()}, {"class_counts", ds.class_counts}}.dump() << '\n';
}

void cmd_cluster(const fs::path& data, const ClusterConfig& cfg, const fs::path& out) {
    const auto ds = load_features(data);
    Matrix x = ds.features;
    normalize_rows(x);
    const auto a = subcluster_all(x, ds.labels, ds.num_classes(), cfg);
    json classes = json::array();
    for (int c = 0; c < a.num_classes(); ++c) {
        const auto& part = a.classes[static_cast<std::size_t>(c)];
        classes.push_back({{"class", c},
                           {"samples", part.assignment.size()},
                           {"clusters", part.cluster_count()},
                           {"sizes", part.cluster_sizes},
                           {"max_size", *std::max_element(part.cluster_sizes.begin(), part.cluster_sizes.end())}});
    }
    json summary{{"capacity", a.capacity}, {"classes", classes}};
    json full = summary;
    full["assignment"] = a.global_cluster;
    write_text_file(out, full.dump(2) + "\n");
    std::cout << summary.dump() << '\n';
}

void cmd_train(const fs::path& data, const fs::path& config_path, const fs::path& out) {
    const auto ds = load_features(data);
    const auto cfg = load_run_config(config_path);
    const auto split = make_split(ds, cfg.split);
    const auto train_set = subset_or_throw(ds, split.train, "train");

    const auto t0 = std::chrono::steady_clock::now();
    const auto result = train(train_set, cfg.train, [](const EpochRecord& r) {
        std::fprintf(stderr, "epoch %d%s contrastive %.6f ce %.6f%s\n", r.epoch, r.warmup ? " (warm-up)" : "",
                     r.contrastive_loss, r.classification_loss, r.reclustered ? " reclustered" : "");
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunReport report;
    report.config = cfg;
    report.epochs = result.epochs;
    report.weights = result.snapshots;
    report.metrics["valid"] = evaluate(result.model, subset_or_throw(ds, split.valid, "valid"));
    report.metrics["test"] = evaluate(result.model, subset_or_throw(ds, split.test, "test"));

    fs::create_directories(out);
    save_report(out / "report.json", report);
    save_checkpoint(out / "model.ckpt", result.model);
    const json run{{"data", fs::absolute(data).lexically_normal().string()},
                   {"config", cfg.source},
                   {"split", {{"train", split.train}, {"valid", split.valid}, {"test", split.test}}}};
    write_text_file(out / "run.json", run.dump(2) + "\n");
    // wall clock lives apart from the report so reports stay byte-identical across runs
    write_text_file(out / "timing.json", json{{"train_seconds", seconds}}.dump() + "\n");

    std::cout << json{{"valid_balanced_accuracy", report.metrics["valid"].balanced_accuracy},
                      {"test_balanced_accuracy", report.metrics["test"].balanced_accuracy},
                      {"test_balanced_f1", report.metrics["test"].balanced_f1}}
                     .dump()
              << '\n';
}

void cmd_evaluate(const fs::path& run_dir, const std::string& split_name) {
    json run;
    try {
        run = json::parse(read_text_file(run_dir / "run.json"));
    } catch (const json::exception& e) {
        throw data_error("malformed run.json: " + std::string(e.what()));
    }
    std::vector<std::size_t> idx;
    fs::path data;
    try {
        idx = run.at("split").at(split_name).get<std::vector<std::size_t>>();
        data = run.at("data").get<std::string>();
    } catch (const json::exception& e) {
        throw data_error("malformed run.json: " + std::string(e.what()));
    }
    const auto ds = load_features(data);
    for (auto i : idx)
        if (i >= ds.size()) throw data_error("run.json split index out of range for " + data.string());
    const auto model = load_checkpoint(run_dir / "model.ckpt");
    if (model.encoder.input_dim() != ds.dim()) throw data_error("checkpoint input width does not match the data");
    std::cout << eval_to_json(evaluate(model, subset_or_throw(ds, idx, split_name.c_str())));
}

void cmd_ablate(const fs::path& data, const fs::path& config_path, const fs::path& out) {
    const auto ds = load_features(data);
    const auto cfg = load_run_config(config_path);
    const auto split = make_split(ds, cfg.split);
    const auto rows = run_ablation_suite(subset_or_throw(ds, split.train, "train"),
                                         subset_or_throw(ds, split.test, "test"), cfg.train, env_threads());
    json table = json::array();
    std::ostringstream csv;
    csv << "warmup,dynamic,reweight,balanced_accuracy,balanced_f1\n";
    for (const auto& r : rows) {
        table.push_back({{"variant", r.label()},
                         {"warmup", r.warmup},
                         {"dynamic", r.dynamic},
                         {"reweight", to_string(r.mode)},
                         {"balanced_accuracy", r.balanced_accuracy},
                         {"balanced_f1", r.balanced_f1}});
        csv << r.warmup << ',' << r.dynamic << ',' << to_string(r.mode) << ',' << r.balanced_accuracy << ','
            << r.balanced_f1 << '\n';
    }
    fs::create_directories(out);
    write_text_file(out / "ablation.json", table.dump(2) + "\n");
    write_text_file(out / "ablation.csv", csv.str());
    std::cout << csv.str();
}

void cmd_report(const fs::path& run_dir, const std::string& format) {
    const auto report = load_report(run_dir / "report.json");
    std::cout << (format == "csv" ? report_to_csv(report) : report_to_json(report));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sub-cluster contrastive learning with distance-based class reweighting"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "subtail 0.1.0");

    std::string spec, data, config, out, run_dir, split = "test", format = "json";
    ClusterConfig ccfg;

    auto* gen = app.add_subcommand("generate", "Write a synthetic long-tailed feature CSV");
    gen->add_option("--spec", spec, "Synthetic spec (JSON)")->required();
    gen->add_option("--out", out, "Output CSV")->required();

    auto* clu = app.add_subcommand("cluster", "Sub-cluster the (row-normalized) features of every class");
    clu->add_option("--data", data, "Feature CSV")->required();
    clu->add_option("--delta", ccfg.delta, "Capacity lower bound")->capture_default_str();
    clu->add_option("--iters", ccfg.iterations, "Assignment passes")->capture_default_str();
    clu->add_option("--seed", ccfg.seed, "Seed")->capture_default_str();
    clu->add_option("--out", out, "Output JSON")->required();

    auto* trn = app.add_subcommand("train", "Split, train and evaluate; writes a run directory");
    trn->add_option("--data", data, "Feature CSV")->required();
    trn->add_option("--config", config, "Run config (JSON)")->required();
    trn->add_option("--out", out, "Run directory")->required();

    auto* ev = app.add_subcommand("evaluate", "Score a trained run on one of its splits");
    ev->add_option("--run", run_dir, "Run directory")->required();
    ev->add_option("--split", split, "Split")->check(CLI::IsMember({"valid", "test"}))->capture_default_str();

    auto* abl = app.add_subcommand("ablate", "Warm-up x dynamic x reweighting ablation");
    abl->add_option("--data", data, "Feature CSV")->required();
    abl->add_option("--config", config, "Run config (JSON)")->required();
    abl->add_option("--out", out, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Print a run report");
    rep->add_option("--run", run_dir, "Run directory")->required();
    rep->add_option("--format", format, "Format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        diagnose("usage", e.what());
        return 1;
    }

    try {
        if (*gen) cmd_generate(spec, out);
        if (*clu) cmd_cluster(data, ccfg, out);
        if (*trn) cmd_train(data, config, out);
        if (*ev) cmd_evaluate(run_dir, split);
        if (*abl) cmd_ablate(data, config, out);
        if (*rep) cmd_report(run_dir, format);
    } catch (const Error& e) {
        const char* names[] = {"usage", "data", "numerical"};
        diagnose(names[static_cast<int>(e.kind())], e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        diagnose("data", e.what());
        return 2;
    } catch (const std::exception& e) {
        diagnose("internal", e.what());
        return 2;
    }
    return 0;
}
