#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qkbench/learners.hpp"

namespace qkb {

enum class DomainKind { Uniform, LogUniform, Integer, Categorical };

struct ParamDomain {
    DomainKind kind = DomainKind::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    std::int64_t step = 1; // Integer domains only
    std::vector<std::string> options;

    static ParamDomain uniform(double lo, double hi) {
        return {DomainKind::Uniform, lo, hi};
    }
    static ParamDomain log_uniform(double lo, double hi) {
        return {DomainKind::LogUniform, lo, hi};
    }
    static ParamDomain integer(std::int64_t lo, std::int64_t hi, std::int64_t step = 1) {
        ParamDomain d;
        d.kind = DomainKind::Integer;
        d.lo = static_cast<double>(lo);
        d.hi = static_cast<double>(hi);
        d.step = step;
        return d;
    }
    static ParamDomain categorical(std::vector<std::string> options) {
        ParamDomain d;
        d.kind = DomainKind::Categorical;
        d.options = std::move(options);
        return d;
    }
};

/// A parameter is active when the referenced categorical parameter holds one
/// of the listed values (or unconditionally without a condition).
struct Condition {
    std::string param;
    std::vector<std::string> any_of;
};

struct SearchParam {
    std::string name;
    ParamDomain domain;
    std::optional<Condition> when;
};

struct SearchSpace {
    std::vector<SearchParam> params;

    const SearchParam* find(const std::string& name) const;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;
using Assignment = std::map<std::string, ParamValue>;

double as_double(const ParamValue& v);
std::string param_value_to_string(const ParamValue& v);

enum class SamplerKind { Random, TPE };

std::string to_string(SamplerKind kind);
SamplerKind sampler_from_string(const std::string& name);

struct TpeConfig {
    double gamma = 0.25;      // top quantile regarded as "good"
    int n_startup = 10;       // random trials before TPE kicks in
    int n_candidates = 24;    // candidates drawn from l(x) per dimension
    double bandwidth_floor = 0.01; // fraction of the domain width
};

/// Number of history entries placed in the good set: ceil(gamma * n).
int tpe_good_count(int n_history, double gamma);

struct TrialRecord {
    int trial_id = 0;
    Assignment params;
    std::array<double, 5> fold_scores{};
    double objective = 0.0;
    double train_score = 0.0;
    double test_score = 0.0;
    bool has_final_scores = false;
    std::string status = "ok"; // "ok" or "failed"
    std::string error;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    // grid cell tags
    std::string circuit;
    int n_qubits = 0;
    int n_layers = 0;
};

/// Draws one assignment. Random samples every active domain independently;
/// TPE splits the history at the top-gamma quantile by objective, fits
/// kernel densities l (good) and g (bad) per dimension and returns the
/// candidate maximizing l/g. Falls back to Random while fewer than
/// n_startup successful trials exist.
Assignment suggest(const SearchSpace& space, const std::vector<TrialRecord>& history,
                   SamplerKind sampler, std::uint64_t seed, const TpeConfig& tpe = {});

/// The fixed parts of a study; assignments fill in the searched parts.
struct StudyTemplate {
    Task task = Task::Regression;
    LearnerKind learner = LearnerKind::QKRR;
    KernelKind kernel_kind = KernelKind::FQK;
    CircuitName circuit = CircuitName::SeparableRx;
    EncodingStrategy strategy = EncodingStrategy::Option1;
    int n_qubits = 0; // 0 = take from the assignment / dataset width
    int n_layers = 1;
    OperatorSetName opset = OperatorSetName::AllP1;
    OuterKernelKind outer = OuterKernelKind::Gaussian;
    std::uint64_t data_seed = 0;
    std::uint64_t param_seed = 0;
};

/// Default hyperparameter domains for a study. search_qubits_layers adds
/// n_layers in [1, 8] and n_qubits over integer multiples of d up to 15;
/// search_outer/search_opset turn the PQK outer kernel and measurement
/// operator into categorical dimensions with conditional length scales.
SearchSpace default_space(const StudyTemplate& tmpl, bool search_qubits_layers, int d,
                          bool search_outer = false, bool search_opset = false);

PipelineConfig make_pipeline(const StudyTemplate& tmpl, const Assignment& assignment, int d);

using TrialCallback = std::function<void(const TrialRecord&)>;

struct StudyResult {
    std::vector<TrialRecord> records;
    int best_trial = -1;
};

/// Sequential trial loop maximizing the five-fold CV objective. Failed
/// trials are recorded, excluded from the sampler history and never abort
/// the study. The best trial is refit on the full training split. Records
/// from an interrupted run can be passed back in to resume.
StudyResult run_study(const Dataset& dataset, const StudyTemplate& tmpl,
                      const SearchSpace& space, int n_trials, SamplerKind sampler,
                      std::uint64_t search_seed, const TrialCallback& on_trial = {},
                      std::vector<TrialRecord> resume_from = {});

struct GridCell {
    CircuitName circuit;
    int n_qubits = 0;
    int n_layers = 0;
    int best_trial = -1; // index into records
    double best_objective = 0.0;
};

struct GridResult {
    std::vector<TrialRecord> records;
    std::vector<GridCell> cells;
};

/// Inner hyperparameter search per (circuit, n_qubits, n_layers) cell.
GridResult grid_search(const Dataset& dataset, const std::vector<CircuitName>& circuits,
                       const std::vector<int>& qubit_grid, const std::vector<int>& layer_grid,
                       const StudyTemplate& tmpl, int n_trials_per_cell, SamplerKind sampler,
                       std::uint64_t search_seed, const TrialCallback& on_trial = {});

struct RandomForestConfig {
    int n_trees = 64;
    int max_depth = 64;
    int min_leaf = 2;
};

struct ImportanceReport {
    std::vector<std::string> names;
    std::vector<double> importance; // sums to 1
    bool degenerate = false;        // all-constant objective
};

/// Random-forest functional-ANOVA importances of the searched
/// hyperparameters for the CV objective. Needs >= 30 successful trials.
ImportanceReport fanova_importance(const std::vector<TrialRecord>& records,
                                   const SearchSpace& space,
                                   const RandomForestConfig& config = {},
                                   std::uint64_t seed = 0);

} // namespace qkb
