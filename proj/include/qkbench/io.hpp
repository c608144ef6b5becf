#pragma once

#include <string>
#include <vector>

#include "qkbench/datasets.hpp"
#include "qkbench/kernels.hpp"
#include "qkbench/stats.hpp"
#include "qkbench/tuner.hpp"

// vendored single-header json
#include "json.hpp"

namespace qkb::io {

using json = nlohmann::json;

inline constexpr int kTrialSchemaVersion = 1;

/// manifest.json + data.csv under `dir`.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

/// Full matrix, row-major, 17 significant digits per entry.
void save_gram_csv(const std::string& path, const Eigen::MatrixXd& G);
Eigen::MatrixXd load_gram_csv(const std::string& path);

json gram_meta_to_json(const GramMeta& meta);
void save_gram_meta(const std::string& path, const GramMeta& meta);

json trial_to_json(const TrialRecord& record);
TrialRecord trial_from_json(const json& j);

/// JSON-lines persistence, one self-describing record per line, append-only.
void append_trial_jsonl(const std::string& path, const TrialRecord& record);
std::vector<TrialRecord> load_trials_jsonl(const std::string& path);

json search_space_to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const json& j);

json corr_matrix_to_json(const CorrMatrix& matrix);
json importance_to_json(const ImportanceReport& report);

/// Numeric columns of a trial table: every numeric hyperparameter plus
/// objective, train_score/test_score where present, and the derived
/// embedding width w_e = f_max - f_min. Failed trials are dropped.
std::map<std::string, std::vector<double>> trial_table_columns(
    const std::vector<TrialRecord>& records);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

} // namespace qkb::io
