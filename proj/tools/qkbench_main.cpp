// qkbench command line: dataset generation, Gram computation, hyperparameter
// studies, importances, correlation analyses and KTA training.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qkbench/io.hpp"
#include "qkbench/version.hpp"

namespace {

using qkb::io::json;
namespace fs = std::filesystem;

struct DatasetGenOptions {
    std::string family;
    int control = 5;
    int total = 300;
    double sigma = 0.01;
    std::uint64_t seed = 0;
    std::string images;
    std::string out;
};

struct DatasetLoadOptions {
    std::string csv;
    std::string profile = "custom";
    std::uint64_t seed = 0;
    std::string out;
};

struct GramOptions {
    std::string dataset_dir;
    std::string circuit = "SeparableRx";
    int layers = 1;
    int qubits = 0; // 0 = number of features
    std::string strategy = "Option1";
    std::uint64_t param_seed = 0;
    std::string kernel = "fqk";
    std::string opset = "AllP1";
    std::string outer = "gaussian";
    double gamma = 1.0, ell = 1.0, alpha = 1.0;
    double f_min = 0.0, f_max = 0.0; // 0 = circuit default box
    std::string block = "train";
    bool diagnostics = false;
    std::string out;
};

struct TuneOptions {
    std::string dataset_dir;
    std::string learner = "qkrr";
    std::string kernel = "fqk";
    std::string circuit = "SeparableRx";
    std::string strategy = "Option1";
    std::string opset = "AllP1";
    std::string outer = "gaussian";
    int layers = 1;
    int qubits = 0;
    int trials = 100;
    std::string sampler = "tpe";
    std::uint64_t search_seed = 0;
    std::uint64_t param_seed = 0;
    bool search_qubits_layers = false;
    bool search_outer = false;
    bool search_opset = false;
    std::string out = "runs/study";
};

struct GridOptions {
    std::string dataset_dir;
    std::string learner = "qkrr";
    std::string kernel = "fqk";
    std::string circuits = "all";
    std::string strategy = "Option1";
    std::string opset = "AllP1";
    std::string outer = "gaussian";
    std::string qubits = "d";
    std::string layers = "1..8";
    int trials = 100;
    std::string sampler = "tpe";
    std::uint64_t search_seed = 0;
    std::uint64_t param_seed = 0;
    std::string out = "runs/grid";
};

struct KtaOptions {
    std::string dataset_dir;
    std::string circuit = "ChebyshevPQC";
    std::string strategy = "Option1";
    int layers = 1;
    int qubits = 0;
    std::string kernel = "fqk";
    std::string opset = "AllP1";
    std::string outer = "gaussian";
    double gamma = 1.0, ell = 1.0, alpha = 1.0;
    double f_min = 0.0, f_max = 0.0;
    int iters = 100;
    double lr = 0.05;
    std::uint64_t param_seed = 0;
    std::string out;
};

qkb::ScalerSpec fit_train_scaler(const qkb::Dataset& ds, const qkb::CircuitSpec& spec,
                                 double f_min, double f_max) {
    const bool cheby = spec.name == qkb::CircuitName::ChebyshevPQC;
    const double box = cheby ? 1.0 : std::numbers::pi / 2.0;
    if (f_min == 0.0) {
        f_min = -box;
    }
    if (f_max == 0.0) {
        f_max = box;
    }
    return qkb::scaler_fit(ds.train_X(), f_min, f_max, cheby);
}

qkb::KernelConfig kernel_config_from(const std::string& kernel, const std::string& opset,
                                     const std::string& outer, double gamma, double ell,
                                     double alpha) {
    qkb::KernelConfig config;
    config.kind = qkb::kernel_kind_from_string(kernel);
    if (config.kind == qkb::KernelKind::PQK) {
        config.opset = qkb::opset_from_string(opset);
        config.outer.kind = qkb::outer_from_string(outer);
        config.outer.gamma = gamma;
        config.outer.ell = ell;
        config.outer.alpha = alpha;
        config.outer.validate();
    }
    return config;
}

int cmd_dataset_gen(const DatasetGenOptions& opt) {
    qkb::Dataset ds;
    const qkb::DatasetFamily family = qkb::family_from_string(opt.family);
    switch (family) {
    case qkb::DatasetFamily::Friedman:
        ds = qkb::friedman1(opt.control, opt.total, opt.sigma, opt.seed);
        break;
    case qkb::DatasetFamily::TwoCurvesDiff:
        ds = qkb::two_curves_diff(opt.control, opt.total, opt.seed);
        break;
    case qkb::DatasetFamily::HiddenManifoldDiff:
        ds = qkb::hidden_manifold_diff(opt.control, opt.total, opt.seed);
        break;
    case qkb::DatasetFamily::QFMNIST:
        if (opt.images.empty()) {
            throw qkb::ConfigError("qfmnist needs --images pointing at an IDX file");
        }
        ds = qkb::qfmnist(opt.control, opt.total, opt.images, opt.seed);
        break;
    default:
        throw qkb::ConfigError("dataset gen cannot produce family " + opt.family +
                               "; use 'dataset load'");
    }
    qkb::io::save_dataset(ds, opt.out);
    std::vector<int> constant;
    const double cbar = qkb::complexity_cbar(ds, &constant);
    for (int c : constant) {
        std::cerr << "warning: feature " << c << " is constant and contributes 0 to C-bar\n";
    }
    std::cout << "wrote " << opt.out << " (" << ds.train_idx.size() << " train / "
              << ds.test_idx.size() << " test), C-bar = " << cbar << "\n";
    return 0;
}

int cmd_dataset_load(const DatasetLoadOptions& opt) {
    const qkb::Dataset ds = qkb::load_csv_regression(opt.csv, opt.profile, opt.seed);
    qkb::io::save_dataset(ds, opt.out);
    const double cbar = qkb::complexity_cbar(ds);
    std::cout << "wrote " << opt.out << " (" << ds.train_idx.size() << " train / "
              << ds.test_idx.size() << " test), C-bar = " << cbar << "\n";
    return 0;
}

int cmd_gram(const GramOptions& opt) {
    const qkb::Dataset ds = qkb::io::load_dataset(opt.dataset_dir);
    const int qubits = opt.qubits > 0 ? opt.qubits : ds.n_features();
    const qkb::CircuitSpec spec =
        qkb::named_circuit(qkb::circuit_from_string(opt.circuit), qubits, opt.layers,
                           ds.n_features(), qkb::strategy_from_string(opt.strategy));
    const std::vector<double> params = qkb::init_params(spec, opt.param_seed);
    const qkb::KernelConfig kernel =
        kernel_config_from(opt.kernel, opt.opset, opt.outer, opt.gamma, opt.ell, opt.alpha);

    const qkb::ScalerSpec scaler = fit_train_scaler(ds, spec, opt.f_min, opt.f_max);
    const Eigen::MatrixXd train = qkb::scaler_apply(scaler, ds.train_X());

    Eigen::MatrixXd G;
    if (opt.block == "train") {
        G = qkb::kernel_gram(spec, params, kernel, train);
    } else if (opt.block == "test") {
        G = qkb::kernel_gram(spec, params, kernel, qkb::scaler_apply(scaler, ds.test_X()));
    } else if (opt.block == "cross") {
        G = qkb::kernel_gram(spec, params, kernel, qkb::scaler_apply(scaler, ds.test_X()),
                             train);
    } else {
        throw qkb::ConfigError("--block must be train, test or cross");
    }

    fs::create_directories(opt.out);
    qkb::io::save_gram_csv(opt.out + "/gram.csv", G);

    qkb::GramMeta meta;
    meta.kind = kernel.kind;
    meta.circuit = qkb::to_string(spec.name);
    meta.hyperparameters["n_qubits"] = spec.n_qubits;
    meta.hyperparameters["n_layers"] = spec.n_layers;
    meta.hyperparameters["f_min"] = scaler.f_min;
    meta.hyperparameters["f_max"] = scaler.f_max;
    meta.hyperparameters["param_seed"] = static_cast<double>(opt.param_seed);
    if (kernel.kind == qkb::KernelKind::PQK) {
        meta.operator_set = qkb::to_string(kernel.opset);
        meta.outer_kernel = qkb::to_string(kernel.outer.kind);
        switch (kernel.outer.kind) {
        case qkb::OuterKernelKind::Gaussian:
            meta.hyperparameters["gamma"] = kernel.outer.gamma;
            break;
        case qkb::OuterKernelKind::Matern32:
            meta.hyperparameters["ell"] = kernel.outer.ell;
            break;
        case qkb::OuterKernelKind::RationalQuadratic:
            meta.hyperparameters["ell"] = kernel.outer.ell;
            meta.hyperparameters["alpha"] = kernel.outer.alpha;
            break;
        }
    }
    qkb::io::save_gram_meta(opt.out + "/gram.meta.json", meta);

    if (opt.diagnostics) {
        json diag;
        if (G.rows() == G.cols() && G.rows() > 1) {
            diag["var_g"] = qkb::gram_variance(G);
        }
        if (kernel.kind == qkb::KernelKind::PQK &&
            kernel.outer.kind == qkb::OuterKernelKind::Gaussian && (G.array() > 0.0).all()) {
            const Eigen::MatrixXd F = qkb::extract_F(G, kernel.outer.gamma);
            qkb::io::save_gram_csv(opt.out + "/f_matrix.csv", F);
            if (F.rows() == F.cols() && F.rows() > 1) {
                diag["var_f"] = qkb::gram_variance(F);
            }
        }
        qkb::io::write_json(opt.out + "/diagnostics.json", diag);
    }
    std::cout << "wrote " << opt.out << "/gram.csv (" << G.rows() << "x" << G.cols() << ")\n";
    return 0;
}

namespace {

// kernel kind recorded in the sidecar next to a gram CSV, if present
std::string sidecar_kind(const std::string& csv_path) {
    std::string meta = csv_path;
    const auto dot = meta.rfind(".csv");
    if (dot == std::string::npos) {
        return "";
    }
    meta.replace(dot, 4, ".meta.json");
    if (!fs::exists(meta)) {
        return "";
    }
    const json j = qkb::io::read_json(meta);
    return j.value("kind", "");
}

} // namespace

int cmd_gram_dist(const std::string& a, const std::string& b, bool normalize) {
    Eigen::MatrixXd ga = qkb::io::load_gram_csv(a);
    Eigen::MatrixXd gb = qkb::io::load_gram_csv(b);
    // matrices of different kernel kinds are min-max normalized before
    // distancing; same-kind entries are already commensurate
    const std::string kind_a = sidecar_kind(a);
    const std::string kind_b = sidecar_kind(b);
    if (normalize || (!kind_a.empty() && !kind_b.empty() && kind_a != kind_b)) {
        ga = qkb::minmax_normalize(ga);
        gb = qkb::minmax_normalize(gb);
    }
    std::cout << qkb::gram_distance(ga, gb) << "\n";
    return 0;
}

qkb::StudyTemplate make_template(const qkb::Dataset& ds, const std::string& learner,
                                 const std::string& kernel, const std::string& circuit,
                                 const std::string& strategy, const std::string& opset,
                                 const std::string& outer, int qubits, int layers,
                                 std::uint64_t param_seed) {
    qkb::StudyTemplate tmpl;
    tmpl.task = ds.task;
    tmpl.learner = qkb::learner_from_string(learner);
    if (ds.task == qkb::Task::Classification && tmpl.learner != qkb::LearnerKind::QSVC) {
        throw qkb::ConfigError("classification datasets need --learner qsvc");
    }
    if (ds.task == qkb::Task::Regression && tmpl.learner == qkb::LearnerKind::QSVC) {
        throw qkb::ConfigError("regression datasets need --learner qkrr or qsvr");
    }
    tmpl.kernel_kind = qkb::kernel_kind_from_string(kernel);
    tmpl.circuit = qkb::circuit_from_string(circuit);
    tmpl.strategy = qkb::strategy_from_string(strategy);
    tmpl.opset = qkb::opset_from_string(opset);
    tmpl.outer = qkb::outer_from_string(outer);
    tmpl.n_qubits = qubits;
    tmpl.n_layers = layers;
    tmpl.data_seed = ds.seed;
    tmpl.param_seed = param_seed;
    return tmpl;
}

json template_to_json(const qkb::StudyTemplate& tmpl) {
    json j;
    j["task"] = tmpl.task == qkb::Task::Regression ? "regression" : "classification";
    j["learner"] = qkb::to_string(tmpl.learner);
    j["kernel"] = qkb::to_string(tmpl.kernel_kind);
    j["circuit"] = qkb::to_string(tmpl.circuit);
    j["strategy"] = qkb::to_string(tmpl.strategy);
    j["opset"] = qkb::to_string(tmpl.opset);
    j["outer"] = qkb::to_string(tmpl.outer);
    j["n_qubits"] = tmpl.n_qubits;
    j["n_layers"] = tmpl.n_layers;
    j["data_seed"] = tmpl.data_seed;
    j["param_seed"] = tmpl.param_seed;
    return j;
}

int cmd_tune(const TuneOptions& opt) {
    const qkb::Dataset ds = qkb::io::load_dataset(opt.dataset_dir);
    const qkb::StudyTemplate tmpl =
        make_template(ds, opt.learner, opt.kernel, opt.circuit, opt.strategy, opt.opset,
                      opt.outer, opt.qubits, opt.layers, opt.param_seed);
    const qkb::SearchSpace space = qkb::default_space(
        tmpl, opt.search_qubits_layers, ds.n_features(), opt.search_outer, opt.search_opset);

    json manifest;
    manifest["schema"] = 1;
    manifest["version"] = qkb::kVersion;
    manifest["command"] = "tune";
    manifest["dataset"] = opt.dataset_dir;
    manifest["template"] = template_to_json(tmpl);
    manifest["space"] = qkb::io::search_space_to_json(space);
    manifest["sampler"] = opt.sampler;
    manifest["n_trials"] = opt.trials;
    manifest["search_seed"] = opt.search_seed;
    qkb::io::write_json(opt.out + "/manifest.json", manifest);

    // resume from an interrupted run by replaying the persisted history
    std::vector<qkb::TrialRecord> resume;
    const std::string trials_path = opt.out + "/trials.jsonl";
    if (fs::exists(trials_path)) {
        resume = qkb::io::load_trials_jsonl(trials_path);
        std::cout << "resuming from " << resume.size() << " persisted trials\n";
    }

    const auto on_trial = [&](const qkb::TrialRecord& rec) {
        qkb::io::append_trial_jsonl(trials_path, rec);
    };
    const qkb::StudyResult result =
        qkb::run_study(ds, tmpl, space, opt.trials, qkb::sampler_from_string(opt.sampler),
                       opt.search_seed, on_trial, std::move(resume));

    const auto& best = result.records[result.best_trial];
    json best_json = qkb::io::trial_to_json(best);
    qkb::io::write_json(opt.out + "/best.json", best_json);
    std::cout << "best trial " << best.trial_id << ": objective = " << best.objective
              << ", test score = " << best.test_score << "\n";
    return 0;
}

std::vector<int> parse_int_grid(const std::string& text, int d) {
    std::vector<int> values;
    if (text == "d") {
        values.push_back(d);
        return values;
    }
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        const auto dots = token.find("..");
        if (dots != std::string::npos) {
            const int lo = std::stoi(token.substr(0, dots));
            const int hi = std::stoi(token.substr(dots + 2));
            for (int v = lo; v <= hi; ++v) {
                values.push_back(v);
            }
        } else if (!token.empty()) {
            values.push_back(std::stoi(token));
        }
    }
    if (values.empty()) {
        throw qkb::ConfigError("empty grid specification: " + text);
    }
    return values;
}

std::vector<qkb::CircuitName> parse_circuits(const std::string& text) {
    if (text == "all") {
        return qkb::all_circuits();
    }
    std::vector<qkb::CircuitName> circuits;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) {
            circuits.push_back(qkb::circuit_from_string(token));
        }
    }
    if (circuits.empty()) {
        throw qkb::ConfigError("empty circuit list");
    }
    return circuits;
}

int cmd_grid(const GridOptions& opt) {
    const qkb::Dataset ds = qkb::io::load_dataset(opt.dataset_dir);
    const auto circuits = parse_circuits(opt.circuits);
    const auto qubit_grid = parse_int_grid(opt.qubits, ds.n_features());
    const auto layer_grid = parse_int_grid(opt.layers, ds.n_features());
    const qkb::StudyTemplate tmpl =
        make_template(ds, opt.learner, opt.kernel, qkb::to_string(circuits.front()),
                      opt.strategy, opt.opset, opt.outer, 0, 1, opt.param_seed);

    json manifest;
    manifest["schema"] = 1;
    manifest["version"] = qkb::kVersion;
    manifest["command"] = "grid";
    manifest["dataset"] = opt.dataset_dir;
    manifest["template"] = template_to_json(tmpl);
    json circ_names = json::array();
    for (auto c : circuits) {
        circ_names.push_back(qkb::to_string(c));
    }
    manifest["circuits"] = circ_names;
    manifest["qubit_grid"] = qubit_grid;
    manifest["layer_grid"] = layer_grid;
    manifest["sampler"] = opt.sampler;
    manifest["n_trials_per_cell"] = opt.trials;
    manifest["search_seed"] = opt.search_seed;
    qkb::io::write_json(opt.out + "/manifest.json", manifest);

    const std::string trials_path = opt.out + "/trials.jsonl";
    const auto on_trial = [&](const qkb::TrialRecord& rec) {
        qkb::io::append_trial_jsonl(trials_path, rec);
    };
    const qkb::GridResult result =
        qkb::grid_search(ds, circuits, qubit_grid, layer_grid, tmpl, opt.trials,
                         qkb::sampler_from_string(opt.sampler), opt.search_seed, on_trial);

    json cells = json::array();
    for (const auto& cell : result.cells) {
        json c;
        c["circuit"] = qkb::to_string(cell.circuit);
        c["n_qubits"] = cell.n_qubits;
        c["n_layers"] = cell.n_layers;
        if (cell.best_trial >= 0) {
            c["best_objective"] = cell.best_objective;
            c["best_trial"] = result.records[cell.best_trial].trial_id;
            c["best_test_score"] = result.records[cell.best_trial].test_score;
        } else {
            c["failed"] = true;
        }
        cells.push_back(c);
    }
    qkb::io::write_json(opt.out + "/cells.json", cells);
    std::cout << "grid finished: " << result.cells.size() << " cells, "
              << result.records.size() << " trials\n";
    return 0;
}

int cmd_importance(const std::string& study_dir, std::string out_path) {
    const json manifest = qkb::io::read_json(study_dir + "/manifest.json");
    const qkb::SearchSpace space = qkb::io::search_space_from_json(manifest.at("space"));
    const auto records = qkb::io::load_trials_jsonl(study_dir + "/trials.jsonl");
    const qkb::ImportanceReport report = qkb::fanova_importance(records, space);
    if (out_path.empty()) {
        out_path = study_dir + "/importance.json";
    }
    qkb::io::write_json(out_path, qkb::io::importance_to_json(report));
    for (std::size_t i = 0; i < report.names.size(); ++i) {
        std::cout << report.names[i] << ": " << report.importance[i] << "\n";
    }
    if (report.degenerate) {
        std::cerr << "warning: constant objective, importances are uniform placeholders\n";
    }
    return 0;
}

int cmd_correlate(const std::string& trials_path, const std::string& vars_csv,
                  const std::string& method, bool adjust_bh, const std::string& out_path) {
    const auto records = qkb::io::load_trials_jsonl(trials_path);
    const auto columns = qkb::io::trial_table_columns(records);

    std::vector<std::string> variables;
    if (vars_csv.empty()) {
        // default selection: every non-constant numeric column
        for (const auto& [name, values] : columns) {
            const bool constant =
                std::all_of(values.begin(), values.end(),
                            [&](double v) { return v == values.front(); });
            if (!constant) {
                variables.push_back(name);
            }
        }
        if (variables.empty()) {
            throw qkb::ConfigError("correlate: every column is constant");
        }
    } else {
        std::string token;
        std::stringstream ss(vars_csv);
        while (std::getline(ss, token, ',')) {
            if (!token.empty()) {
                variables.push_back(token);
            }
        }
    }

    const qkb::CorrMethod m =
        method == "pearson" ? qkb::CorrMethod::Pearson : qkb::CorrMethod::Spearman;
    qkb::CorrMatrix matrix = qkb::corr_matrix(columns, variables, m);

    if (adjust_bh) {
        std::vector<double> pvals;
        const int v = static_cast<int>(variables.size());
        for (int i = 0; i < v; ++i) {
            for (int j = i + 1; j < v; ++j) {
                pvals.push_back(matrix.p_values(i, j));
            }
        }
        const auto adjusted = qkb::benjamini_hochberg(pvals);
        int at = 0;
        for (int i = 0; i < v; ++i) {
            for (int j = i + 1; j < v; ++j) {
                matrix.p_values(i, j) = adjusted[at];
                matrix.p_values(j, i) = adjusted[at];
                ++at;
            }
        }
    }

    qkb::io::write_json(out_path, qkb::io::corr_matrix_to_json(matrix));
    std::cout << "wrote " << out_path << " (" << variables.size() << " variables, "
              << columns.begin()->second.size() << " rows)\n";
    return 0;
}

int cmd_kta(const KtaOptions& opt) {
    const qkb::Dataset ds = qkb::io::load_dataset(opt.dataset_dir);
    if (ds.task != qkb::Task::Classification) {
        throw qkb::ConfigError("kta needs a classification dataset (labels +-1)");
    }
    const int qubits = opt.qubits > 0 ? opt.qubits : ds.n_features();
    const qkb::CircuitSpec spec =
        qkb::named_circuit(qkb::circuit_from_string(opt.circuit), qubits, opt.layers,
                           ds.n_features(), qkb::strategy_from_string(opt.strategy));
    const std::vector<double> params0 = qkb::init_params(spec, opt.param_seed);
    const qkb::KernelConfig kernel =
        kernel_config_from(opt.kernel, opt.opset, opt.outer, opt.gamma, opt.ell, opt.alpha);

    const qkb::ScalerSpec scaler = fit_train_scaler(ds, spec, opt.f_min, opt.f_max);
    const Eigen::MatrixXd X = qkb::scaler_apply(scaler, ds.train_X());

    qkb::KtaConfig config;
    config.iterations = opt.iters;
    config.learning_rate = opt.lr;
    const qkb::KtaResult result =
        qkb::kta_optimize(spec, params0, X, ds.train_y(), kernel, config);

    json j;
    j["schema"] = 1;
    j["circuit"] = qkb::to_string(spec.name);
    j["initial_kta"] = result.initial_kta;
    j["best_kta"] = result.best_kta;
    j["trace"] = result.trace;
    j["params0"] = params0;
    j["params"] = result.params;
    qkb::io::write_json(opt.out, j);
    std::cout << "kta: " << result.initial_kta << " -> " << result.best_kta << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum kernel benchmarking toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "cap the OpenMP worker pool");

    // dataset
    auto* dataset = app.add_subcommand("dataset", "generate or load datasets");
    dataset->require_subcommand(1);
    DatasetGenOptions gen_opt;
    auto* gen = dataset->add_subcommand("gen", "generate a synthetic family");
    gen->add_option("--family", gen_opt.family,
                    "friedman | two-curves-diff | hidden-manifold-diff | qfmnist")
        ->required();
    gen->add_option("--control,--d,--D,--m", gen_opt.control, "complexity knob (d, D or m)");
    gen->add_option("--total", gen_opt.total, "total sample count (default 300)");
    gen->add_option("--sigma", gen_opt.sigma, "noise level (friedman)");
    gen->add_option("--seed", gen_opt.seed, "data seed");
    gen->add_option("--images", gen_opt.images, "fashion-MNIST IDX image file (qfmnist)");
    gen->add_option("--out", gen_opt.out, "output directory")->required();

    DatasetLoadOptions load_opt;
    auto* load = dataset->add_subcommand("load", "load a regression CSV");
    load->add_option("--csv", load_opt.csv, "CSV with d feature columns + target")->required();
    load->add_option("--profile", load_opt.profile, "nh3 | custom");
    load->add_option("--seed", load_opt.seed, "split seed");
    load->add_option("--out", load_opt.out, "output directory")->required();

    // gram
    GramOptions gram_opt;
    auto* gram = app.add_subcommand("gram", "compute a kernel Gram matrix");
    gram->add_option("--dataset", gram_opt.dataset_dir)->required();
    gram->add_option("--circuit", gram_opt.circuit);
    gram->add_option("--layers", gram_opt.layers);
    gram->add_option("--qubits", gram_opt.qubits, "0 = number of features");
    gram->add_option("--strategy", gram_opt.strategy);
    gram->add_option("--param-seed", gram_opt.param_seed);
    gram->add_option("--kernel", gram_opt.kernel, "fqk | pqk");
    gram->add_option("--opset", gram_opt.opset);
    gram->add_option("--outer", gram_opt.outer, "gaussian | matern32 | rq");
    gram->add_option("--gamma", gram_opt.gamma);
    gram->add_option("--ell", gram_opt.ell);
    gram->add_option("--alpha", gram_opt.alpha);
    gram->add_option("--f-min", gram_opt.f_min);
    gram->add_option("--f-max", gram_opt.f_max);
    gram->add_option("--block", gram_opt.block, "train | test | cross");
    gram->add_flag("--diagnostics", gram_opt.diagnostics, "emit Var(G) and the F-matrix");
    gram->add_option("--out", gram_opt.out)->required();

    // gram-dist
    std::string dist_a, dist_b;
    bool dist_normalize = false;
    auto* gram_dist = app.add_subcommand("gram-dist", "mean squared distance of two Gram CSVs");
    gram_dist->add_option("a", dist_a)->required();
    gram_dist->add_option("b", dist_b)->required();
    gram_dist->add_flag("--normalize", dist_normalize, "min-max normalize before distancing");

    // tune
    TuneOptions tune_opt;
    auto* tune = app.add_subcommand("tune", "hyperparameter search for one configuration");
    tune->add_option("--dataset", tune_opt.dataset_dir)->required();
    tune->add_option("--learner", tune_opt.learner, "qkrr | qsvr | qsvc");
    tune->add_option("--kernel", tune_opt.kernel, "fqk | pqk");
    tune->add_option("--circuit", tune_opt.circuit);
    tune->add_option("--strategy", tune_opt.strategy);
    tune->add_option("--opset", tune_opt.opset);
    tune->add_option("--outer", tune_opt.outer);
    tune->add_option("--layers", tune_opt.layers);
    tune->add_option("--qubits", tune_opt.qubits, "0 = number of features");
    tune->add_option("--trials", tune_opt.trials);
    tune->add_option("--sampler", tune_opt.sampler, "random | tpe");
    tune->add_option("--search-seed", tune_opt.search_seed);
    tune->add_option("--param-seed", tune_opt.param_seed);
    tune->add_flag("--search-qubits-layers", tune_opt.search_qubits_layers,
                   "search n_qubits (multiples of d, <= 15) and n_layers in [1, 8]");
    tune->add_flag("--search-outer", tune_opt.search_outer,
                   "search the PQK outer kernel jointly");
    tune->add_flag("--search-opset", tune_opt.search_opset,
                   "search the PQK measurement operator jointly");
    tune->add_option("--out", tune_opt.out);

    // grid
    GridOptions grid_opt;
    auto* grid = app.add_subcommand("grid", "qubits x layers grid of searches");
    grid->add_option("--dataset", grid_opt.dataset_dir)->required();
    grid->add_option("--learner", grid_opt.learner);
    grid->add_option("--kernel", grid_opt.kernel);
    grid->add_option("--circuits", grid_opt.circuits, "all or comma-separated names");
    grid->add_option("--strategy", grid_opt.strategy);
    grid->add_option("--opset", grid_opt.opset);
    grid->add_option("--outer", grid_opt.outer);
    grid->add_option("--qubits", grid_opt.qubits, "grid, e.g. 'd' or '4,8,12' or '4..8'");
    grid->add_option("--layers", grid_opt.layers, "grid, e.g. '1..8'");
    grid->add_option("--trials", grid_opt.trials, "trials per cell");
    grid->add_option("--sampler", grid_opt.sampler);
    grid->add_option("--search-seed", grid_opt.search_seed);
    grid->add_option("--param-seed", grid_opt.param_seed);
    grid->add_option("--out", grid_opt.out);

    // importance
    std::string imp_study, imp_out;
    auto* importance = app.add_subcommand("importance", "fANOVA hyperparameter importances");
    importance->add_option("--study", imp_study, "study directory (manifest + trials)")
        ->required();
    importance->add_option("--out", imp_out, "output JSON (default <study>/importance.json)");

    // correlate
    std::string corr_trials, corr_vars, corr_method = "spearman", corr_out = "corr.json";
    bool corr_bh = false;
    auto* correlate = app.add_subcommand("correlate", "correlation matrix over a trial table");
    correlate->add_option("--trials", corr_trials, "trials.jsonl path")->required();
    correlate->add_option("--vars", corr_vars, "comma-separated columns (default: all)");
    correlate->add_option("--method", corr_method, "spearman | pearson");
    correlate->add_flag("--adjust-bh", corr_bh, "Benjamini-Hochberg adjusted p-values");
    correlate->add_option("--out", corr_out);

    // kta
    KtaOptions kta_opt;
    auto* kta_cmd = app.add_subcommand("kta", "kernel-target alignment training");
    kta_cmd->add_option("--dataset", kta_opt.dataset_dir)->required();
    kta_cmd->add_option("--circuit", kta_opt.circuit, "needs trainable parameters");
    kta_cmd->add_option("--strategy", kta_opt.strategy);
    kta_cmd->add_option("--layers", kta_opt.layers);
    kta_cmd->add_option("--qubits", kta_opt.qubits);
    kta_cmd->add_option("--kernel", kta_opt.kernel);
    kta_cmd->add_option("--opset", kta_opt.opset);
    kta_cmd->add_option("--outer", kta_opt.outer);
    kta_cmd->add_option("--gamma", kta_opt.gamma);
    kta_cmd->add_option("--ell", kta_opt.ell);
    kta_cmd->add_option("--alpha", kta_opt.alpha);
    kta_cmd->add_option("--f-min", kta_opt.f_min);
    kta_cmd->add_option("--f-max", kta_opt.f_max);
    kta_cmd->add_option("--iters", kta_opt.iters);
    kta_cmd->add_option("--lr", kta_opt.lr);
    kta_cmd->add_option("--param-seed", kta_opt.param_seed);
    kta_cmd->add_option("--out", kta_opt.out)->required();

    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    if (threads > 0) {
        omp_set_num_threads(threads);
    }
#endif

    try {
        if (gen->parsed()) {
            return cmd_dataset_gen(gen_opt);
        }
        if (load->parsed()) {
            return cmd_dataset_load(load_opt);
        }
        if (gram->parsed()) {
            return cmd_gram(gram_opt);
        }
        if (gram_dist->parsed()) {
            return cmd_gram_dist(dist_a, dist_b, dist_normalize);
        }
        if (tune->parsed()) {
            return cmd_tune(tune_opt);
        }
        if (grid->parsed()) {
            return cmd_grid(grid_opt);
        }
        if (importance->parsed()) {
            return cmd_importance(imp_study, imp_out);
        }
        if (correlate->parsed()) {
            return cmd_correlate(corr_trials, corr_vars, corr_method, corr_bh, corr_out);
        }
        if (kta_cmd->parsed()) {
            return cmd_kta(kta_opt);
        }
    } catch (const qkb::StudyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const qkb::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const qkb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
