#include "qkbench/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "qkbench/rng.hpp"

namespace qkb {

const SearchParam* SearchSpace::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) {
            return &p;
        }
    }
    return nullptr;
}

double as_double(const ParamValue& v) {
    if (std::holds_alternative<double>(v)) {
        return std::get<double>(v);
    }
    if (std::holds_alternative<std::int64_t>(v)) {
        return static_cast<double>(std::get<std::int64_t>(v));
    }
    throw ConfigError("parameter value is not numeric");
}

std::string param_value_to_string(const ParamValue& v) {
    if (std::holds_alternative<std::string>(v)) {
        return std::get<std::string>(v);
    }
    if (std::holds_alternative<std::int64_t>(v)) {
        return std::to_string(std::get<std::int64_t>(v));
    }
    return std::to_string(std::get<double>(v));
}

std::string to_string(SamplerKind kind) { return kind == SamplerKind::Random ? "random" : "tpe"; }

SamplerKind sampler_from_string(const std::string& name) {
    if (name == "random") {
        return SamplerKind::Random;
    }
    if (name == "tpe") {
        return SamplerKind::TPE;
    }
    throw ConfigError("unknown sampler: " + name);
}

int tpe_good_count(int n_history, double gamma) {
    return static_cast<int>(std::ceil(gamma * n_history));
}

namespace {

bool condition_holds(const std::optional<Condition>& when, const Assignment& assignment) {
    if (!when) {
        return true;
    }
    const auto it = assignment.find(when->param);
    if (it == assignment.end()) {
        return false;
    }
    const std::string value = param_value_to_string(it->second);
    return std::find(when->any_of.begin(), when->any_of.end(), value) != when->any_of.end();
}

// continuous internal coordinate (log space for LogUniform domains)
double domain_lo(const ParamDomain& d) {
    return d.kind == DomainKind::LogUniform ? std::log(d.lo) : d.lo;
}
double domain_hi(const ParamDomain& d) {
    return d.kind == DomainKind::LogUniform ? std::log(d.hi) : d.hi;
}

double to_internal(const ParamDomain& d, const ParamValue& v) {
    if (d.kind == DomainKind::Categorical) {
        const std::string s = param_value_to_string(v);
        for (std::size_t i = 0; i < d.options.size(); ++i) {
            if (d.options[i] == s) {
                return static_cast<double>(i);
            }
        }
        throw ConfigError("value '" + s + "' not in categorical domain");
    }
    const double x = as_double(v);
    return d.kind == DomainKind::LogUniform ? std::log(x) : x;
}

std::int64_t snap_integer(const ParamDomain& d, double u) {
    const auto lo = static_cast<std::int64_t>(d.lo);
    const auto hi = static_cast<std::int64_t>(d.hi);
    const std::int64_t steps = (hi - lo) / d.step;
    std::int64_t k = static_cast<std::int64_t>(std::llround((u - d.lo) / static_cast<double>(d.step)));
    k = std::clamp<std::int64_t>(k, 0, steps);
    return lo + k * d.step;
}

ParamValue from_internal(const ParamDomain& d, double u) {
    switch (d.kind) {
    case DomainKind::Uniform:
        return std::clamp(u, d.lo, d.hi);
    case DomainKind::LogUniform:
        return std::clamp(std::exp(u), d.lo, d.hi);
    case DomainKind::Integer:
        return snap_integer(d, u);
    case DomainKind::Categorical: {
        const auto idx = static_cast<std::size_t>(
            std::clamp<double>(std::llround(u), 0.0, static_cast<double>(d.options.size() - 1)));
        return d.options[idx];
    }
    }
    throw ConfigError("bad domain kind");
}

ParamValue random_draw(const ParamDomain& d, Rng& rng) {
    switch (d.kind) {
    case DomainKind::Uniform:
        return rng.uniform(d.lo, d.hi);
    case DomainKind::LogUniform:
        return std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
    case DomainKind::Integer: {
        const auto lo = static_cast<std::int64_t>(d.lo);
        const auto hi = static_cast<std::int64_t>(d.hi);
        const std::int64_t steps = (hi - lo) / d.step;
        return lo + d.step * rng.randint(0, steps);
    }
    case DomainKind::Categorical:
        return d.options[static_cast<std::size_t>(
            rng.randint(0, static_cast<std::int64_t>(d.options.size()) - 1))];
    }
    throw ConfigError("bad domain kind");
}

Assignment random_assignment(const SearchSpace& space, Rng& rng) {
    Assignment assignment;
    for (const auto& param : space.params) {
        if (!condition_holds(param.when, assignment)) {
            continue;
        }
        assignment[param.name] = random_draw(param.domain, rng);
    }
    return assignment;
}

// Gaussian kernel density over observed points
struct Kde {
    std::vector<double> points;
    double bandwidth = 1.0;
    double lo = 0.0, hi = 1.0;

    double density(double x) const {
        if (points.empty()) {
            // uniform prior over the domain
            return 1.0 / std::max(hi - lo, 1e-300);
        }
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        double s = 0.0;
        for (double c : points) {
            const double z = (x - c) / bandwidth;
            s += std::exp(-0.5 * z * z);
        }
        return s * inv_sqrt_2pi / (bandwidth * static_cast<double>(points.size()));
    }
};

Kde make_kde(std::vector<double> points, double lo, double hi, double floor_frac) {
    Kde kde;
    kde.lo = lo;
    kde.hi = hi;
    kde.points = std::move(points);
    const double width = std::max(hi - lo, 1e-300);
    double bw = floor_frac * width;
    if (kde.points.size() > 1) {
        double mean = 0.0;
        for (double p : kde.points) {
            mean += p;
        }
        mean /= static_cast<double>(kde.points.size());
        double var = 0.0;
        for (double p : kde.points) {
            var += (p - mean) * (p - mean);
        }
        var /= static_cast<double>(kde.points.size());
        // Scott's rule with the domain-fraction floor
        const double scott =
            std::sqrt(var) * std::pow(static_cast<double>(kde.points.size()), -0.2);
        bw = std::max(bw, scott);
    }
    kde.bandwidth = std::max(bw, 1e-12);
    return kde;
}

ParamValue tpe_draw(const SearchParam& param, const std::vector<const TrialRecord*>& good,
                    const std::vector<const TrialRecord*>& bad, Rng& rng,
                    const TpeConfig& config) {
    const ParamDomain& d = param.domain;

    if (d.kind == DomainKind::Categorical) {
        // category-count smoothing (+1) on both sides
        const std::size_t n_opt = d.options.size();
        std::vector<double> wl(n_opt, 1.0), wg(n_opt, 1.0);
        auto tally = [&](const std::vector<const TrialRecord*>& recs, std::vector<double>& w) {
            for (const auto* rec : recs) {
                const auto it = rec->params.find(param.name);
                if (it == rec->params.end()) {
                    continue;
                }
                const std::string s = param_value_to_string(it->second);
                for (std::size_t i = 0; i < n_opt; ++i) {
                    if (d.options[i] == s) {
                        w[i] += 1.0;
                    }
                }
            }
        };
        tally(good, wl);
        tally(bad, wg);
        double suml = 0.0, sumg = 0.0;
        for (std::size_t i = 0; i < n_opt; ++i) {
            suml += wl[i];
            sumg += wg[i];
        }
        std::size_t best = 0;
        double best_ratio = -1.0;
        for (int c = 0; c < config.n_candidates; ++c) {
            // draw a category from l
            double r = rng.uniform() * suml;
            std::size_t pick = n_opt - 1;
            for (std::size_t i = 0; i < n_opt; ++i) {
                if (r < wl[i]) {
                    pick = i;
                    break;
                }
                r -= wl[i];
            }
            const double ratio = (wl[pick] / suml) / (wg[pick] / sumg);
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best = pick;
            }
        }
        return d.options[best];
    }

    const double lo = domain_lo(d);
    const double hi = domain_hi(d);
    auto collect = [&](const std::vector<const TrialRecord*>& recs) {
        std::vector<double> vals;
        for (const auto* rec : recs) {
            const auto it = rec->params.find(param.name);
            if (it != rec->params.end()) {
                vals.push_back(to_internal(d, it->second));
            }
        }
        return vals;
    };
    const Kde l = make_kde(collect(good), lo, hi, config.bandwidth_floor);
    const Kde g = make_kde(collect(bad), lo, hi, config.bandwidth_floor);

    double best_u = 0.5 * (lo + hi);
    double best_ratio = -1.0;
    for (int c = 0; c < config.n_candidates; ++c) {
        double u;
        if (l.points.empty()) {
            u = rng.uniform(lo, hi);
        } else {
            const auto pick = static_cast<std::size_t>(
                rng.randint(0, static_cast<std::int64_t>(l.points.size()) - 1));
            u = std::clamp(l.points[pick] + l.bandwidth * rng.normal(), lo, hi);
        }
        const double ratio = l.density(u) / std::max(g.density(u), 1e-300);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_u = u;
        }
    }
    return from_internal(d, best_u);
}

} // namespace

Assignment suggest(const SearchSpace& space, const std::vector<TrialRecord>& history,
                   SamplerKind sampler, std::uint64_t seed, const TpeConfig& tpe) {
    if (space.params.empty()) {
        throw ConfigError("suggest: empty search space");
    }
    Rng rng(derive_seed(seed, "suggest"));

    std::vector<const TrialRecord*> ok;
    for (const auto& rec : history) {
        if (rec.status == "ok") {
            ok.push_back(&rec);
        }
    }

    if (sampler == SamplerKind::Random || static_cast<int>(ok.size()) < tpe.n_startup) {
        return random_assignment(space, rng);
    }

    // split at the top-gamma quantile by objective (maximization)
    std::sort(ok.begin(), ok.end(),
              [](const TrialRecord* a, const TrialRecord* b) { return a->objective > b->objective; });
    const int n_good = tpe_good_count(static_cast<int>(ok.size()), tpe.gamma);
    std::vector<const TrialRecord*> good(ok.begin(), ok.begin() + n_good);
    std::vector<const TrialRecord*> bad(ok.begin() + n_good, ok.end());

    Assignment assignment;
    for (const auto& param : space.params) {
        if (!condition_holds(param.when, assignment)) {
            continue;
        }
        assignment[param.name] = tpe_draw(param, good, bad, rng, tpe);
    }
    return assignment;
}

SearchSpace default_space(const StudyTemplate& tmpl, bool search_qubits_layers, int d,
                          bool search_outer, bool search_opset) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    const bool cheby = tmpl.circuit == CircuitName::ChebyshevPQC;
    const double box = cheby ? 1.0 : half_pi;

    SearchSpace space;
    if (search_qubits_layers) {
        const std::int64_t max_mult = std::max<std::int64_t>(1, 15 / d);
        space.params.push_back(
            {"n_qubits", ParamDomain::integer(d, max_mult * d, d), std::nullopt});
        space.params.push_back({"n_layers", ParamDomain::integer(1, 8), std::nullopt});
    }
    space.params.push_back({"f_min", ParamDomain::uniform(-box, -1e-3), std::nullopt});
    space.params.push_back({"f_max", ParamDomain::uniform(1e-3, box), std::nullopt});

    switch (tmpl.learner) {
    case LearnerKind::QKRR:
        space.params.push_back({"lambda", ParamDomain::log_uniform(1e-8, 1e1), std::nullopt});
        break;
    case LearnerKind::QSVR:
        space.params.push_back({"C", ParamDomain::log_uniform(1e-2, 1e3), std::nullopt});
        space.params.push_back({"epsilon", ParamDomain::log_uniform(1e-4, 1.0), std::nullopt});
        break;
    case LearnerKind::QSVC:
        space.params.push_back({"C", ParamDomain::log_uniform(1e-2, 1e3), std::nullopt});
        break;
    }

    if (tmpl.kernel_kind == KernelKind::PQK) {
        if (search_opset) {
            std::vector<std::string> sets;
            for (OperatorSetName s : all_opsets()) {
                sets.push_back(to_string(s));
            }
            space.params.push_back({"opset", ParamDomain::categorical(sets), std::nullopt});
        }
        if (search_outer) {
            space.params.push_back(
                {"outer", ParamDomain::categorical({"gaussian", "matern32", "rq"}), std::nullopt});
            space.params.push_back({"gamma", ParamDomain::log_uniform(1e-4, 1e2),
                                    Condition{"outer", {"gaussian"}}});
            space.params.push_back({"ell", ParamDomain::log_uniform(1e-2, 1e2),
                                    Condition{"outer", {"matern32", "rq"}}});
            space.params.push_back(
                {"alpha", ParamDomain::log_uniform(1e-2, 1e2), Condition{"outer", {"rq"}}});
        } else {
            switch (tmpl.outer) {
            case OuterKernelKind::Gaussian:
                space.params.push_back(
                    {"gamma", ParamDomain::log_uniform(1e-4, 1e2), std::nullopt});
                break;
            case OuterKernelKind::Matern32:
                space.params.push_back({"ell", ParamDomain::log_uniform(1e-2, 1e2), std::nullopt});
                break;
            case OuterKernelKind::RationalQuadratic:
                space.params.push_back({"ell", ParamDomain::log_uniform(1e-2, 1e2), std::nullopt});
                space.params.push_back(
                    {"alpha", ParamDomain::log_uniform(1e-2, 1e2), std::nullopt});
                break;
            }
        }
    }
    return space;
}

PipelineConfig make_pipeline(const StudyTemplate& tmpl, const Assignment& assignment, int d) {
    auto get_double = [&](const std::string& name, double fallback) {
        const auto it = assignment.find(name);
        return it == assignment.end() ? fallback : as_double(it->second);
    };
    auto get_int = [&](const std::string& name, int fallback) {
        const auto it = assignment.find(name);
        return it == assignment.end() ? fallback
                                      : static_cast<int>(std::llround(as_double(it->second)));
    };
    auto get_string = [&](const std::string& name, const std::string& fallback) {
        const auto it = assignment.find(name);
        return it == assignment.end() ? fallback : param_value_to_string(it->second);
    };

    const int n_qubits = get_int("n_qubits", tmpl.n_qubits > 0 ? tmpl.n_qubits : d);
    const int n_layers = get_int("n_layers", tmpl.n_layers);

    PipelineConfig config;
    config.circuit = named_circuit(tmpl.circuit, n_qubits, n_layers, d, tmpl.strategy);
    config.param_seed = tmpl.param_seed;
    config.learner = tmpl.learner;
    config.kernel.kind = tmpl.kernel_kind;
    if (tmpl.kernel_kind == KernelKind::PQK) {
        config.kernel.opset = opset_from_string(get_string("opset", to_string(tmpl.opset)));
        config.kernel.outer.kind = outer_from_string(get_string("outer", to_string(tmpl.outer)));
        config.kernel.outer.gamma = get_double("gamma", 1.0);
        config.kernel.outer.ell = get_double("ell", 1.0);
        config.kernel.outer.alpha = get_double("alpha", 1.0);
    }
    config.lambda = get_double("lambda", 1e-3);
    config.C = get_double("C", 1.0);
    config.epsilon = get_double("epsilon", 0.1);

    const bool cheby = tmpl.circuit == CircuitName::ChebyshevPQC;
    const double box = cheby ? 1.0 : std::numbers::pi / 2.0;
    config.f_min = get_double("f_min", -box);
    config.f_max = get_double("f_max", box);
    return config;
}

StudyResult run_study(const Dataset& dataset, const StudyTemplate& tmpl,
                      const SearchSpace& space, int n_trials, SamplerKind sampler,
                      std::uint64_t search_seed, const TrialCallback& on_trial,
                      std::vector<TrialRecord> resume_from) {
    if (n_trials < 1) {
        throw ConfigError("run_study: n_trials must be >= 1");
    }
    const int d = dataset.n_features();
    const std::uint64_t cv_seed = derive_seed(tmpl.data_seed, "cv-split");

    StudyResult result;
    result.records = std::move(resume_from);

    for (int t = static_cast<int>(result.records.size()); t < n_trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(search_seed, static_cast<std::uint64_t>(t));
        TrialRecord rec;
        rec.trial_id = t;
        rec.seed = trial_seed;
        rec.circuit = to_string(tmpl.circuit);
        rec.n_layers = tmpl.n_layers;
        rec.n_qubits = tmpl.n_qubits > 0 ? tmpl.n_qubits : d;

        const auto t0 = std::chrono::steady_clock::now();
        try {
            rec.params = suggest(space, result.records, sampler, trial_seed);
            if (const auto it = rec.params.find("n_qubits"); it != rec.params.end()) {
                rec.n_qubits = static_cast<int>(std::llround(as_double(it->second)));
            }
            if (const auto it = rec.params.find("n_layers"); it != rec.params.end()) {
                rec.n_layers = static_cast<int>(std::llround(as_double(it->second)));
            }
            const PipelineConfig config = make_pipeline(tmpl, rec.params, d);
            const CVResult cv = cv_evaluate(dataset, config, cv_seed);
            rec.fold_scores = cv.fold_scores;
            rec.objective = cv.objective;
        } catch (const Error& e) {
            rec.status = "failed";
            rec.error = e.what();
        }
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.records.push_back(rec);
        if (on_trial) {
            on_trial(result.records.back());
        }
    }

    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const auto& rec = result.records[i];
        if (rec.status == "ok" &&
            (result.best_trial < 0 ||
             rec.objective > result.records[result.best_trial].objective)) {
            result.best_trial = static_cast<int>(i);
        }
    }
    if (result.best_trial < 0) {
        throw StudyError("run_study: all trials failed");
    }

    auto& best = result.records[result.best_trial];
    const PipelineConfig best_config = make_pipeline(tmpl, best.params, d);
    const FinalScores final_scores = fit_final_and_test(dataset, best_config);
    best.train_score = final_scores.train_score;
    best.test_score = final_scores.test_score;
    best.has_final_scores = true;
    return result;
}

GridResult grid_search(const Dataset& dataset, const std::vector<CircuitName>& circuits,
                       const std::vector<int>& qubit_grid, const std::vector<int>& layer_grid,
                       const StudyTemplate& tmpl, int n_trials_per_cell, SamplerKind sampler,
                       std::uint64_t search_seed, const TrialCallback& on_trial) {
    if (circuits.empty() || qubit_grid.empty() || layer_grid.empty()) {
        throw ConfigError("grid_search: circuits, qubit grid and layer grid must be non-empty");
    }
    GridResult result;
    std::uint64_t cell_index = 0;
    for (CircuitName circuit : circuits) {
        for (int q : qubit_grid) {
            for (int l : layer_grid) {
                StudyTemplate cell_tmpl = tmpl;
                cell_tmpl.circuit = circuit;
                cell_tmpl.n_qubits = q;
                cell_tmpl.n_layers = l;
                const SearchSpace space =
                    default_space(cell_tmpl, /*search_qubits_layers=*/false,
                                  dataset.n_features());
                const std::uint64_t cell_seed = derive_seed(search_seed, cell_index);

                GridCell cell;
                cell.circuit = circuit;
                cell.n_qubits = q;
                cell.n_layers = l;
                try {
                    StudyResult study = run_study(dataset, cell_tmpl, space, n_trials_per_cell,
                                                  sampler, cell_seed, on_trial);
                    const int offset = static_cast<int>(result.records.size());
                    cell.best_trial = offset + study.best_trial;
                    cell.best_objective = study.records[study.best_trial].objective;
                    for (auto& rec : study.records) {
                        rec.circuit = to_string(circuit);
                        rec.n_qubits = q;
                        rec.n_layers = l;
                        result.records.push_back(std::move(rec));
                    }
                } catch (const StudyError&) {
                    cell.best_trial = -1; // every trial in the cell failed
                }
                result.cells.push_back(cell);
                ++cell_index;
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// random forest + functional ANOVA importances
// ---------------------------------------------------------------------------

namespace {

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
};

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    const RandomForestConfig& config;
    Tree tree;

    int build(std::vector<int> samples, int depth) {
        double mean = 0.0;
        for (int s : samples) {
            mean += y(s);
        }
        mean /= static_cast<double>(samples.size());

        TreeNode node;
        node.value = mean;
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);

        if (depth >= config.max_depth ||
            static_cast<int>(samples.size()) < 2 * config.min_leaf) {
            return node_id;
        }

        // best SSE-reduction split over all features, thresholds at
        // midpoints between consecutive distinct values
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        double parent_sse = 0.0;
        for (int s : samples) {
            parent_sse += (y(s) - mean) * (y(s) - mean);
        }

        const int k = static_cast<int>(X.cols());
        std::vector<int> order = samples;
        for (int f = 0; f < k; ++f) {
            std::sort(order.begin(), order.end(),
                      [&](int a, int b) { return X(a, f) < X(b, f); });
            const int n = static_cast<int>(order.size());
            // prefix sums for O(n) split evaluation
            double sum_left = 0.0, sumsq_left = 0.0;
            double sum_all = 0.0, sumsq_all = 0.0;
            for (int s : order) {
                sum_all += y(s);
                sumsq_all += y(s) * y(s);
            }
            for (int i = 0; i + 1 < n; ++i) {
                const int s = order[i];
                sum_left += y(s);
                sumsq_left += y(s) * y(s);
                if (X(order[i + 1], f) <= X(s, f)) {
                    continue; // no distinct midpoint here
                }
                const int nl = i + 1;
                const int nr = n - nl;
                if (nl < config.min_leaf || nr < config.min_leaf) {
                    continue;
                }
                const double sum_right = sum_all - sum_left;
                const double sumsq_right = sumsq_all - sumsq_left;
                const double sse_left = sumsq_left - sum_left * sum_left / nl;
                const double sse_right = sumsq_right - sum_right * sum_right / nr;
                const double gain = parent_sse - sse_left - sse_right;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (X(s, f) + X(order[i + 1], f));
                }
            }
        }
        if (best_feature < 0) {
            return node_id;
        }

        std::vector<int> left, right;
        for (int s : samples) {
            (X(s, best_feature) <= best_threshold ? left : right).push_back(s);
        }
        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        const int l = build(std::move(left), depth + 1);
        tree.nodes[node_id].left = l;
        tree.nodes[node_id].right = build(std::move(right), depth + 1);
        return node_id;
    }
};

// Marginal mean of the tree over all dimensions except `dim` fixed at x,
// under the uniform measure on the node's box. Boxes are tracked through
// the recursion as interval widths.
double marginal_mean(const Tree& tree, int node_id, int dim, double x,
                     std::vector<std::pair<double, double>>& box) {
    const TreeNode& node = tree.nodes[node_id];
    if (node.feature < 0) {
        return node.value;
    }
    auto& iv = box[node.feature];
    const double lo = iv.first, hi = iv.second;
    if (node.feature == dim) {
        const int child = x <= node.threshold ? node.left : node.right;
        return marginal_mean(tree, child, dim, x, box);
    }
    const double wl = (node.threshold - lo) / (hi - lo);
    iv = {lo, node.threshold};
    const double ml = marginal_mean(tree, node.left, dim, x, box);
    iv = {node.threshold, hi};
    const double mr = marginal_mean(tree, node.right, dim, x, box);
    iv = {lo, hi};
    return wl * ml + (1.0 - wl) * mr;
}

// leaf boxes under the uniform measure: (weight, value) pairs
void collect_leaves(const Tree& tree, int node_id, double weight,
                    std::vector<std::pair<double, double>>& box,
                    std::vector<std::pair<double, double>>& out) {
    const TreeNode& node = tree.nodes[node_id];
    if (node.feature < 0) {
        out.emplace_back(weight, node.value);
        return;
    }
    auto& iv = box[node.feature];
    const double lo = iv.first, hi = iv.second;
    const double wl = (node.threshold - lo) / (hi - lo);
    iv = {lo, node.threshold};
    collect_leaves(tree, node.left, weight * wl, box, out);
    iv = {node.threshold, hi};
    collect_leaves(tree, node.right, weight * (1.0 - wl), box, out);
    iv = {lo, hi};
}

void collect_thresholds(const Tree& tree, int dim, std::vector<double>& out) {
    for (const auto& node : tree.nodes) {
        if (node.feature == dim) {
            out.push_back(node.threshold);
        }
    }
}

} // namespace

ImportanceReport fanova_importance(const std::vector<TrialRecord>& records,
                                   const SearchSpace& space, const RandomForestConfig& config,
                                   std::uint64_t seed) {
    std::vector<const TrialRecord*> ok;
    for (const auto& rec : records) {
        if (rec.status == "ok") {
            ok.push_back(&rec);
        }
    }
    if (static_cast<int>(ok.size()) < 30) {
        throw InsufficiencyError("fanova_importance: need at least 30 successful trials, have " +
                                 std::to_string(ok.size()));
    }

    // use the parameters present in every successful trial (conditionals
    // that were inactive somewhere cannot be marginalized coherently)
    std::vector<const SearchParam*> active;
    for (const auto& param : space.params) {
        bool everywhere = true;
        for (const auto* rec : ok) {
            if (rec->params.find(param.name) == rec->params.end()) {
                everywhere = false;
                break;
            }
        }
        if (everywhere) {
            active.push_back(&param);
        }
    }
    if (active.empty()) {
        throw ConfigError("fanova_importance: no parameter is present in every trial");
    }

    const int n = static_cast<int>(ok.size());
    const int k = static_cast<int>(active.size());
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        y(i) = ok[i]->objective;
        for (int j = 0; j < k; ++j) {
            const ParamDomain& d = active[j]->domain;
            const double u = to_internal(d, ok[i]->params.at(active[j]->name));
            double lo, hi;
            if (d.kind == DomainKind::Categorical) {
                lo = 0.0;
                hi = std::max<double>(1.0, static_cast<double>(d.options.size()) - 1.0);
            } else {
                lo = domain_lo(d);
                hi = domain_hi(d);
            }
            X(i, j) = hi - lo < 1e-300 ? 0.5 : (u - lo) / (hi - lo);
        }
    }

    ImportanceReport report;
    for (const auto* param : active) {
        report.names.push_back(param->name);
    }
    report.importance.assign(k, 0.0);

    if ((y.array() - y(0)).abs().maxCoeff() < 1e-300) {
        report.degenerate = true;
        report.importance.assign(k, 1.0 / k);
        return report;
    }

    std::vector<double> sums(k, 0.0);
    int valid_trees = 0;
    for (int t = 0; t < config.n_trees; ++t) {
        Rng rng(derive_seed(seed, derive_seed(0xf0404a, static_cast<std::uint64_t>(t))));
        std::vector<int> bootstrap(n);
        for (int i = 0; i < n; ++i) {
            bootstrap[i] = static_cast<int>(rng.randint(0, n - 1));
        }
        TreeBuilder builder{X, y, config, {}};
        builder.build(bootstrap, 0);
        const Tree& tree = builder.tree;

        std::vector<std::pair<double, double>> box(k, {0.0, 1.0});
        std::vector<std::pair<double, double>> leaves;
        collect_leaves(tree, 0, 1.0, box, leaves);
        double f0 = 0.0;
        for (const auto& [w, v] : leaves) {
            f0 += w * v;
        }
        double v_total = 0.0;
        for (const auto& [w, v] : leaves) {
            v_total += w * (v - f0) * (v - f0);
        }
        if (v_total <= 1e-300) {
            continue;
        }
        ++valid_trees;
        for (int j = 0; j < k; ++j) {
            std::vector<double> cuts = {0.0, 1.0};
            collect_thresholds(tree, j, cuts);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            double vj = 0.0;
            for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
                const double len = cuts[s + 1] - cuts[s];
                if (len <= 0.0) {
                    continue;
                }
                const double mid = 0.5 * (cuts[s] + cuts[s + 1]);
                const double m = marginal_mean(tree, 0, j, mid, box);
                vj += len * (m - f0) * (m - f0);
            }
            sums[j] += vj / v_total;
        }
    }

    if (valid_trees == 0) {
        report.degenerate = true;
        report.importance.assign(k, 1.0 / k);
        return report;
    }
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        report.importance[j] = sums[j] / valid_trees;
        total += report.importance[j];
    }
    if (total <= 1e-300) {
        report.degenerate = true;
        report.importance.assign(k, 1.0 / k);
        return report;
    }
    for (double& v : report.importance) {
        v /= total;
    }
    return report;
}

} // namespace qkb
