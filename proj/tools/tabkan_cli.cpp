// tabkan command-line front end: train / nas / transfer / interpret /
// importance / kfold over CSV+schema tabular datasets.

#include "tabkan/checkpoint.hpp"
#include "tabkan/dataset.hpp"
#include "tabkan/interpret.hpp"
#include "tabkan/metrics.hpp"
#include "tabkan/nas.hpp"
#include "tabkan/network.hpp"
#include "tabkan/optim.hpp"
#include "tabkan/transfer.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace tabkan;
using checkpoint::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataArgs {
    std::string dataset;
    std::string schema;
    std::string scale = "standard";
    std::string missing = "?";
    bool balance = true;
    std::uint64_t seed = 0;
};

void add_data_args(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--dataset", a.dataset, "dataset CSV path")->required();
    cmd->add_option("--schema", a.schema, "schema JSON path (default: <dataset>.schema.json)");
    cmd->add_option("--scale", a.scale, "raw|standard|quantile")->default_val("standard");
    cmd->add_option("--missing", a.missing, "missing-value sentinel")->default_val("?");
    cmd->add_flag("--balance,!--no-balance", a.balance, "SMOTE-balance training rows");
    cmd->add_option("--seed", a.seed, "root seed")->default_val(0);
}

struct ModelArgs {
    std::string variant = "cheby";
    std::vector<int> widths;
    int order = 3, grid = 5, q = 2, k = 2;
    double lambda = 0.0;
    int iters = 500;
};

void add_model_args(CLI::App* cmd, ModelArgs& a) {
    cmd->add_option("--variant", a.variant, "spline|cheby|fast|pade|jacobi_r|fourier|fkan")
        ->default_val("cheby");
    cmd->add_option("--widths", a.widths, "comma-separated layer widths n_0..n_L")->delimiter(',');
    cmd->add_option("--order", a.order, "polynomial order / degree")->default_val(3);
    cmd->add_option("--grid", a.grid, "fourier frequencies / spline grid")->default_val(5);
    cmd->add_option("--pade-q", a.q, "pade numerator degree")->default_val(2);
    cmd->add_option("--pade-k", a.k, "pade denominator degree")->default_val(2);
    cmd->add_option("--lambda", a.lambda, "smoothness penalty weight")->default_val(0.0);
    cmd->add_option("--iters", a.iters, "max L-BFGS iterations")->default_val(500);
}

struct Pipeline {
    data::Dataset full;
    data::SplitPlan plan;
    data::ScalerState scaler;
    Matrix x_train, x_val, x_test;
    std::vector<int> y_train, y_val, y_test;
    std::string fingerprint;
    std::uint64_t split_seed = 0;
};

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw FileError(std::string(what) + " not found: " + path);
}

std::string schema_path(const DataArgs& a) {
    if (!a.schema.empty()) return a.schema;
    return fs::path(a.dataset).replace_extension(".schema.json").string();
}

Pipeline run_pipeline(const DataArgs& a) {
    std::string spath = schema_path(a);
    require_file(a.dataset, "dataset");
    require_file(spath, "schema");
    data::Schema schema = data::load_schema(spath);
    data::validate_schema(schema);
    data::RawTable table = data::load_csv(a.dataset, schema, a.missing);
    data::impute(table);

    Pipeline p;
    p.full = data::one_hot_encode(table);
    p.split_seed = derive_seed(a.seed, 0x73706c6974ULL);
    p.plan = data::split_70_10_20(p.full.y, p.split_seed);
    for (const auto& w : p.plan.warnings) std::cerr << "warning: " << w << '\n';

    data::Dataset train = data::subset(p.full, p.plan.train);
    if (a.balance) train = data::balance_smote(train, derive_seed(a.seed, 0x736d6f7465ULL));
    p.scaler = data::fit_scaler(train.x, data::scale_mode_from_name(a.scale));
    p.x_train = data::apply_scaler(p.scaler, train.x);
    p.y_train = train.y;
    data::Dataset val = data::subset(p.full, p.plan.val);
    data::Dataset test = data::subset(p.full, p.plan.test);
    p.x_val = data::apply_scaler(p.scaler, val.x);
    p.y_val = val.y;
    p.x_test = data::apply_scaler(p.scaler, test.x);
    p.y_test = test.y;
    p.fingerprint = checkpoint::fingerprint(data::apply_scaler(p.scaler, p.full.x));
    return p;
}

network::NetworkSpec make_spec(const ModelArgs& m, const Pipeline& p, std::uint64_t seed) {
    network::NetworkSpec spec;
    spec.variant = layers::variant_from_name(m.variant);
    spec.hyper.order = m.order;
    spec.hyper.grid = m.grid;
    spec.hyper.pade_q = m.q;
    spec.hyper.pade_k = m.k;
    int n0 = static_cast<int>(p.full.x.cols());
    int nl = p.full.n_classes;
    spec.widths = m.widths;
    if (spec.widths.size() < 2) spec.widths = {n0, 16, nl};
    if (spec.widths.front() != n0) {
        std::cerr << "warning: overriding input width " << spec.widths.front() << " -> " << n0
                  << '\n';
        spec.widths.front() = n0;
    }
    if (spec.widths.back() != nl) {
        std::cerr << "warning: overriding output width " << spec.widths.back() << " -> " << nl
                  << '\n';
        spec.widths.back() = nl;
    }
    spec.seed = seed;
    return spec;
}

// Refuse to clobber existing artifacts unless --force.
void prepare_out(const std::string& dir, bool force, const std::vector<std::string>& files) {
    fs::create_directories(dir);
    if (force) return;
    for (const auto& f : files) {
        fs::path p = fs::path(dir) / f;
        if (fs::exists(p))
            throw FileError("output exists (use --force): " + p.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

json metrics_json(const metrics::MetricReport& r) {
    json j{{"f1", r.f1},
           {"macro_f1", r.macro_f1},
           {"accuracy", r.accuracy},
           {"precision", r.precision},
           {"recall", r.recall},
           {"confusion", r.confusion}};
    if (r.auc) j["auc"] = *r.auc;
    return j;
}

json report_json(const optim::TrainReport& r) {
    return json{{"iterations", r.iterations},
                {"final_loss", r.final_loss},
                {"grad_norm", r.grad_norm},
                {"seconds", r.seconds},
                {"stop_reason", r.stop_reason}};
}

json manifest_base(const std::string& command, const std::vector<std::string>& args,
                   const Pipeline& p, std::uint64_t seed) {
    return json{{"tool_version", kVersion},
                {"command", command},
                {"args", args},
                {"dataset_fingerprint", p.fingerprint},
                {"seed", seed},
                {"stage_seeds", {{"split", p.split_seed}}}};
}

int workers_from(int flag_value) {
    int w = flag_value;
    if (const char* env = std::getenv("TABKAN_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) w = std::min(w <= 0 ? cap : w, cap);
    }
    return std::max(1, w);
}

// ---------------------------------------------------------------- train

int cmd_train(const DataArgs& da, const ModelArgs& ma, const std::string& out, bool force,
              const std::vector<std::string>& argv) {
    Pipeline p = run_pipeline(da);
    prepare_out(out, force, {"manifest.json", "metrics.json", "model.bin"});
    std::uint64_t model_seed = derive_seed(da.seed, 0x6d6f64656cULL);
    network::NetworkSpec spec = make_spec(ma, p, model_seed);
    network::Model model(spec);
    optim::TrainConfig tc;
    tc.max_iters = ma.iters;
    network::PenaltySpec penalty{ma.lambda};
    optim::TrainReport report = optim::train(model, p.x_train, p.y_train, tc, penalty);
    metrics::MetricReport test =
        metrics::evaluate(model.predict_logits(p.x_test), p.y_test, p.full.n_classes);

    checkpoint::save_checkpoint((fs::path(out) / "model.bin").string(), model);
    json metrics_doc{{"test", metrics_json(test)},
                     {"val", metrics_json(metrics::evaluate(model.predict_logits(p.x_val),
                                                            p.y_val, p.full.n_classes))}};
    write_text(fs::path(out) / "metrics.json", metrics_doc.dump(2) + "\n");
    json manifest = manifest_base("train", argv, p, da.seed);
    manifest["stage_seeds"]["model"] = model_seed;
    manifest["spec"] = checkpoint::spec_to_json(spec);
    manifest["lambda"] = ma.lambda;
    manifest["train_report"] = report_json(report);
    manifest["metrics"] = metrics_doc;
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "test accuracy " << test.accuracy;
    if (test.auc) std::cout << "  auc " << *test.auc;
    std::cout << '\n';
    return 0;
}

// ------------------------------------------------------------------ nas

int cmd_nas(const DataArgs& da, const std::string& variant, int trials, int initial, int iters,
            double lambda, int workers, const std::string& out, bool force,
            const std::vector<std::string>& argv) {
    Pipeline p = run_pipeline(da);
    prepare_out(out, force, {"manifest.json", "trials.csv", "model.bin"});
    nas::AcquisitionConfig ac;
    ac.n_trials = trials;
    ac.n_initial = std::min(initial, trials);
    optim::TrainConfig tc;
    tc.max_iters = iters;
    auto objective = nas::make_supervised_objective(p.x_train, p.y_train, p.x_val, p.y_val,
                                                    p.full.n_classes, tc,
                                                    network::PenaltySpec{lambda});
    nas::SearchResult result =
        nas::run_search(layers::variant_from_name(variant), static_cast<int>(p.full.x.cols()),
                        p.full.n_classes, ac, derive_seed(da.seed, 0x6e6173ULL), objective,
                        workers_from(workers));

    std::ostringstream csv;
    csv.precision(10);
    csv << "trial,depth,widths,order,grid,pade_q,pade_k,objective,failed\n";
    for (const auto& t : result.trials) {
        csv << t.index << ',' << t.spec.widths.size() - 1 << ',';
        for (std::size_t i = 0; i < t.spec.widths.size(); ++i)
            csv << (i ? ";" : "") << t.spec.widths[i];
        csv << ',' << t.spec.hyper.order << ',' << t.spec.hyper.grid << ','
            << t.spec.hyper.pade_q << ',' << t.spec.hyper.pade_k << ','
            << (t.failed ? 0.0 : t.objective) << ',' << (t.failed ? 1 : 0) << '\n';
    }
    write_text(fs::path(out) / "trials.csv", csv.str());

    // retrain the incumbent and report its test metrics
    network::Model best(result.best_spec);
    optim::TrainReport report =
        optim::train(best, p.x_train, p.y_train, tc, network::PenaltySpec{lambda});
    metrics::MetricReport test =
        metrics::evaluate(best.predict_logits(p.x_test), p.y_test, p.full.n_classes);
    checkpoint::save_checkpoint((fs::path(out) / "model.bin").string(), best);

    json manifest = manifest_base("nas", argv, p, da.seed);
    manifest["spec"] = checkpoint::spec_to_json(result.best_spec);
    manifest["best_validation_objective"] = result.best_objective;
    manifest["trials"] = result.trials.size();
    manifest["train_report"] = report_json(report);
    manifest["metrics"] = {{"test", metrics_json(test)}};
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "best val objective " << result.best_objective << "  test accuracy "
              << test.accuracy;
    if (test.auc) std::cout << "  auc " << *test.auc;
    std::cout << '\n';
    return 0;
}

// ------------------------------------------------------------- transfer

int cmd_transfer(const DataArgs& da, const ModelArgs& ma, const std::string& mode, double beta,
                 int steps, int group, const std::string& out, bool force,
                 const std::vector<std::string>& argv) {
    Pipeline p = run_pipeline(da);
    prepare_out(out, force, {"manifest.json"});
    // transfer slices rows itself; give it the full scaled matrix
    data::Dataset ds = p.full;
    data::ScalerState sc = data::fit_scaler(ds.x, data::scale_mode_from_name(da.scale));
    ds.x = data::apply_scaler(sc, ds.x);

    transfer::TransferConfig tc;
    tc.mode = mode == "grpo" ? transfer::FinetuneMode::grpo : transfer::FinetuneMode::standard;
    tc.seed = derive_seed(da.seed, 0x7866657272ULL);
    tc.train.max_iters = ma.iters;
    tc.grpo.beta = beta;
    tc.grpo.steps = steps;
    tc.grpo.group_size = group;
    network::NetworkSpec spec = make_spec(ma, p, 0);
    transfer::TransferResult result = transfer::pretrain_then_finetune(ds, spec, tc);

    auto dir_json = [](const transfer::DirectionResult& d) {
        return json{{"zero_shot", metrics_json(d.zero_shot)},
                    {"fine_tuned", metrics_json(d.fine_tuned)},
                    {"pretrain_report", report_json(d.pretrain_report)}};
    };
    json manifest = manifest_base("transfer", argv, p, da.seed);
    manifest["spec"] = checkpoint::spec_to_json(spec);
    manifest["mode"] = mode;
    manifest["split"] = {{"shared_features", result.split.shared_features},
                         {"set1_only", result.split.set1_only},
                         {"set2_only", result.split.set2_only}};
    manifest["dir12"] = dir_json(result.dir12);
    manifest["dir21"] = dir_json(result.dir21);
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    auto show = [](const char* tag, const transfer::DirectionResult& d) {
        std::cout << tag << " zero-shot acc " << d.zero_shot.accuracy << " -> fine-tuned "
                  << d.fine_tuned.accuracy << '\n';
    };
    show("1->2", result.dir12);
    show("2->1", result.dir21);
    return 0;
}

// ------------------------------------------------------------ interpret

int cmd_interpret(const std::string& ckpt, const std::string& edges, int layer, int points,
                  const std::string& out, bool force, const std::vector<std::string>& argv) {
    require_file(ckpt, "checkpoint");
    network::Model model = checkpoint::load_checkpoint(ckpt);
    const layers::Layer& l = *model.layer_stack().at(layer);

    std::vector<std::pair<int, int>> pairs;
    if (edges == "all") {
        for (int i = 0; i < l.n_in(); ++i)
            for (int o = 0; o < l.n_out(); ++o) pairs.emplace_back(i, o);
    } else {
        int i = 0, o = 0;
        if (std::sscanf(edges.c_str(), "%d,%d", &i, &o) != 2)
            throw std::runtime_error("--edges expects 'all' or 'i,o'");
        pairs.emplace_back(i, o);
    }
    std::vector<std::string> outputs = {"manifest.json", "energy.json"};
    for (auto [i, o] : pairs) {
        std::string stem = "edge_L" + std::to_string(layer) + "_" + std::to_string(i) + "_" +
                           std::to_string(o);
        outputs.push_back(stem + ".csv");
        outputs.push_back(stem + ".svg");
    }
    prepare_out(out, force, outputs);
    for (auto [i, o] : pairs) {
        interpret::EdgeFunction edge = interpret::extract_edge_function(model, layer, i, o);
        std::string stem = "edge_L" + std::to_string(layer) + "_" + std::to_string(i) + "_" +
                           std::to_string(o);
        interpret::write_curve_csv((fs::path(out) / (stem + ".csv")).string(), edge, points);
        interpret::write_curve_svg((fs::path(out) / (stem + ".svg")).string(), edge, points);
    }

    json manifest{{"tool_version", kVersion},
                  {"command", "interpret"},
                  {"args", argv},
                  {"checkpoint", ckpt},
                  {"spec", checkpoint::spec_to_json(model.spec())},
                  {"edges", pairs.size()}};
    layers::Variant v = model.spec().variant;
    if (v == layers::Variant::cheby || v == layers::Variant::fourier) {
        interpret::EnergyReport energy = interpret::high_order_energy(model);
        json ej{{"aggregate", energy.aggregate}, {"defined", energy.defined}};
        json per = json::array();
        for (const auto& e : energy.edges)
            per.push_back({{"layer", e.layer},
                           {"feature", e.feature},
                           {"output", e.output},
                           {"energy", e.energy},
                           {"defined", e.defined}});
        ej["edges"] = std::move(per);
        write_text(fs::path(out) / "energy.json", ej.dump(2) + "\n");
        manifest["high_order_energy"] = energy.defined ? json(energy.aggregate) : json(nullptr);
    } else {
        write_text(fs::path(out) / "energy.json",
                   json{{"aggregate", nullptr}, {"defined", false}}.dump(2) + "\n");
    }
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << pairs.size() << " edge curves to " << out << '\n';
    return 0;
}

// ----------------------------------------------------------- importance

int cmd_importance(const std::string& ckpt, const DataArgs& da, const std::string& out,
                   bool force, const std::vector<std::string>& argv) {
    require_file(ckpt, "checkpoint");
    network::Model model = checkpoint::load_checkpoint(ckpt);
    Pipeline p = run_pipeline(da);
    std::vector<double> scores = interpret::feature_importance(model);
    if (scores.size() != p.full.feature_names.size())
        throw std::runtime_error("checkpoint input width does not match dataset");
    prepare_out(out, force, {"importance.csv", "manifest.json"});
    interpret::write_importance_csv((fs::path(out) / "importance.csv").string(), scores,
                                    p.full.feature_names);
    json manifest = manifest_base("importance", argv, p, da.seed);
    manifest["spec"] = checkpoint::spec_to_json(model.spec());
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote importance for " << scores.size() << " features\n";
    return 0;
}

// ---------------------------------------------------------------- kfold

int cmd_kfold(const DataArgs& da, const ModelArgs& ma, std::vector<int> ks,
              const std::string& out, bool force, const std::vector<std::string>& argv) {
    if (ks.empty()) ks = {3, 5, 7};
    Pipeline p = run_pipeline(da);
    prepare_out(out, force, {"manifest.json", "kfold.csv"});
    std::ostringstream csv;
    csv.precision(10);
    csv << "k,fold,accuracy,f1,macro_f1\n";
    json summary = json::array();
    for (int k : ks) {
        auto folds = data::stratified_kfold(p.full.y, k, derive_seed(da.seed, 0x6b666f6c64ULL));
        std::vector<double> accs;
        for (std::size_t fi = 0; fi < folds.size(); ++fi) {
            data::Dataset train = data::subset(p.full, folds[fi].train);
            if (da.balance)
                train = data::balance_smote(
                    train, derive_seed(da.seed, 0x736d6f7465ULL + fi + 1000ull * k));
            data::ScalerState sc =
                data::fit_scaler(train.x, data::scale_mode_from_name(da.scale));
            data::Dataset val = data::subset(p.full, folds[fi].val);
            network::NetworkSpec spec =
                make_spec(ma, p, derive_seed(da.seed, 0x666f6c64ULL + fi + 1000ull * k));
            network::Model model(spec);
            optim::TrainConfig tc;
            tc.max_iters = ma.iters;
            optim::train(model, data::apply_scaler(sc, train.x), train.y, tc,
                         network::PenaltySpec{ma.lambda});
            metrics::MetricReport rep = metrics::evaluate(
                model.predict_logits(data::apply_scaler(sc, val.x)), val.y, p.full.n_classes);
            accs.push_back(rep.accuracy);
            csv << k << ',' << fi << ',' << rep.accuracy << ',' << rep.f1 << ',' << rep.macro_f1
                << '\n';
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        double stddev = std::sqrt(var / static_cast<double>(accs.size()));
        summary.push_back({{"k", k}, {"mean_accuracy", mean}, {"std_accuracy", stddev}});
        std::cout << "K=" << k << " accuracy " << mean << " +/- " << stddev << '\n';
    }
    write_text(fs::path(out) / "kfold.csv", csv.str());
    json manifest = manifest_base("kfold", argv, p, da.seed);
    manifest["summary"] = summary;
    write_text(fs::path(out) / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TabKAN: Kolmogorov-Arnold networks for tabular classification"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::vector<std::string> raw_args(argv + 1, argv + argc);

    DataArgs da;
    ModelArgs ma;
    std::string out = "runs/out";
    bool force = false;

    auto* train = app.add_subcommand("train", "preprocess, train, evaluate");
    add_data_args(train, da);
    add_model_args(train, ma);
    train->add_option("--out", out, "output directory");
    train->add_flag("--force", force, "overwrite existing artifacts");

    int trials = 100, initial = 10, workers = 1;
    auto* nas_cmd = app.add_subcommand("nas", "GP-BO architecture search");
    add_data_args(nas_cmd, da);
    nas_cmd->add_option("--variant", ma.variant)->default_val("cheby");
    nas_cmd->add_option("--trials", trials)->default_val(100);
    nas_cmd->add_option("--initial", initial)->default_val(10);
    nas_cmd->add_option("--iters", ma.iters)->default_val(500);
    nas_cmd->add_option("--lambda", ma.lambda)->default_val(0.0);
    nas_cmd->add_option("--workers", workers)->default_val(1);
    nas_cmd->add_option("--out", out);
    nas_cmd->add_flag("--force", force);

    std::string mode = "standard";
    double beta = 0.0;
    int steps = 200, group = 8;
    auto* transfer_cmd = app.add_subcommand("transfer", "feature-overlap transfer learning");
    add_data_args(transfer_cmd, da);
    add_model_args(transfer_cmd, ma);
    transfer_cmd->add_option("--mode", mode, "standard|grpo")->default_val("standard");
    transfer_cmd->add_option("--beta", beta, "GRPO KL weight")->default_val(0.0);
    transfer_cmd->add_option("--steps", steps, "GRPO steps")->default_val(200);
    transfer_cmd->add_option("--group", group, "GRPO group size")->default_val(8);
    transfer_cmd->add_option("--out", out);
    transfer_cmd->add_flag("--force", force);

    std::string ckpt, edges = "all";
    int layer = 0, points = 200;
    auto* interp = app.add_subcommand("interpret", "edge-function curves + energy");
    interp->add_option("--checkpoint", ckpt)->required();
    interp->add_option("--edges", edges, "'all' or 'i,o'")->default_val("all");
    interp->add_option("--layer", layer)->default_val(0);
    interp->add_option("--points", points)->default_val(200);
    interp->add_option("--out", out);
    interp->add_flag("--force", force);

    auto* imp = app.add_subcommand("importance", "first-layer feature importance");
    imp->add_option("--checkpoint", ckpt)->required();
    add_data_args(imp, da);
    imp->add_option("--out", out);
    imp->add_flag("--force", force);

    std::vector<int> ks;
    auto* kfold = app.add_subcommand("kfold", "stratified k-fold stability");
    add_data_args(kfold, da);
    add_model_args(kfold, ma);
    kfold->add_option("--k", ks, "fold counts")->delimiter(',');
    kfold->add_option("--out", out);
    kfold->add_flag("--force", force);

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(da, ma, out, force, raw_args);
        if (nas_cmd->parsed())
            return cmd_nas(da, ma.variant, trials, initial, ma.iters, ma.lambda, workers, out,
                           force, raw_args);
        if (transfer_cmd->parsed())
            return cmd_transfer(da, ma, mode, beta, steps, group, out, force, raw_args);
        if (interp->parsed())
            return cmd_interpret(ckpt, edges, layer, points, out, force, raw_args);
        if (imp->parsed()) return cmd_importance(ckpt, da, out, force, raw_args);
        if (kfold->parsed()) return cmd_kfold(da, ma, ks, out, force, raw_args);
    } catch (const FileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
