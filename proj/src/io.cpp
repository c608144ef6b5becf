#include "qkbench/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace qkb::io {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& content) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path);
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

namespace {

std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string task_name(Task task) {
    return task == Task::Regression ? "regression" : "classification";
}

Task task_from_name(const std::string& name) {
    if (name == "regression") {
        return Task::Regression;
    }
    if (name == "classification") {
        return Task::Classification;
    }
    throw SchemaError("unknown task: " + name);
}

} // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(dir);

    json manifest;
    manifest["schema"] = 1;
    manifest["family"] = to_string(dataset.family);
    manifest["task"] = task_name(dataset.task);
    manifest["control"] = dataset.control;
    manifest["seed"] = dataset.seed;
    manifest["n_total"] = dataset.n_total();
    manifest["n_features"] = dataset.n_features();
    manifest["train_idx"] = dataset.train_idx;
    manifest["test_idx"] = dataset.test_idx;
    write_json(dir + "/manifest.json", manifest);

    std::ostringstream csv;
    for (int c = 0; c < dataset.n_features(); ++c) {
        csv << "f" << c << ",";
    }
    csv << "y\n";
    for (int i = 0; i < dataset.n_total(); ++i) {
        for (int c = 0; c < dataset.n_features(); ++c) {
            csv << format_g17(dataset.X(i, c)) << ",";
        }
        csv << format_g17(dataset.y(i)) << "\n";
    }
    write_text(dir + "/data.csv", csv.str());
}

Dataset load_dataset(const std::string& dir) {
    const json manifest = read_json(dir + "/manifest.json");
    Dataset ds;
    ds.family = family_from_string(manifest.at("family").get<std::string>());
    ds.task = task_from_name(manifest.at("task").get<std::string>());
    ds.control = manifest.at("control").get<double>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.train_idx = manifest.at("train_idx").get<std::vector<int>>();
    ds.test_idx = manifest.at("test_idx").get<std::vector<int>>();

    const int n = manifest.at("n_total").get<int>();
    const int d = manifest.at("n_features").get<int>();
    ds.X.resize(n, d);
    ds.y.resize(n);

    std::istringstream in(read_text(dir + "/data.csv"));
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError(dir + "/data.csv: missing header");
    }
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (row >= n) {
            throw SchemaError(dir + "/data.csv: more rows than the manifest declares");
        }
        std::stringstream ss(line);
        std::string field;
        for (int c = 0; c <= d; ++c) {
            if (!std::getline(ss, field, ',')) {
                throw SchemaError(dir + "/data.csv: short row " + std::to_string(row + 2));
            }
            const double v = std::stod(field);
            if (c < d) {
                ds.X(row, c) = v;
            } else {
                ds.y(row) = v;
            }
        }
        ++row;
    }
    if (row != n) {
        throw SchemaError(dir + "/data.csv: expected " + std::to_string(n) + " rows, got " +
                          std::to_string(row));
    }
    return ds;
}

void save_gram_csv(const std::string& path, const Eigen::MatrixXd& G) {
    std::ostringstream out;
    for (int i = 0; i < G.rows(); ++i) {
        for (int j = 0; j < G.cols(); ++j) {
            if (j > 0) {
                out << ",";
            }
            out << format_g17(G(i, j));
        }
        out << "\n";
    }
    write_text(path, out.str());
}

Eigen::MatrixXd load_gram_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            row.push_back(std::stod(field));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw SchemaError(path + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw SchemaError(path + ": empty matrix");
    }
    Eigen::MatrixXd G(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            G(i, j) = rows[i][j];
        }
    }
    return G;
}

json gram_meta_to_json(const GramMeta& meta) {
    json j;
    j["kind"] = to_string(meta.kind);
    if (!meta.circuit.empty()) {
        j["circuit"] = meta.circuit;
    }
    if (!meta.operator_set.empty()) {
        j["operator_set"] = meta.operator_set;
    }
    if (!meta.outer_kernel.empty()) {
        j["outer_kernel"] = meta.outer_kernel;
    }
    j["hyperparameters"] = meta.hyperparameters;
    return j;
}

void save_gram_meta(const std::string& path, const GramMeta& meta) {
    write_json(path, gram_meta_to_json(meta));
}

namespace {

json param_value_to_json(const ParamValue& v) {
    if (std::holds_alternative<double>(v)) {
        return std::get<double>(v);
    }
    if (std::holds_alternative<std::int64_t>(v)) {
        return std::get<std::int64_t>(v);
    }
    return std::get<std::string>(v);
}

ParamValue param_value_from_json(const json& j) {
    if (j.is_string()) {
        return j.get<std::string>();
    }
    if (j.is_number_integer()) {
        return j.get<std::int64_t>();
    }
    return j.get<double>();
}

} // namespace

json trial_to_json(const TrialRecord& record) {
    json j;
    j["schema"] = kTrialSchemaVersion;
    j["trial"] = record.trial_id;
    json params = json::object();
    for (const auto& [name, value] : record.params) {
        params[name] = param_value_to_json(value);
    }
    j["params"] = params;
    j["status"] = record.status;
    if (record.status == "ok") {
        j["fold_scores"] = record.fold_scores;
        j["objective"] = record.objective;
    } else {
        j["error"] = record.error;
    }
    if (record.has_final_scores) {
        j["train_score"] = record.train_score;
        j["test_score"] = record.test_score;
    }
    j["wall_time_s"] = record.wall_time_s;
    j["seed"] = record.seed;
    if (!record.circuit.empty()) {
        j["circuit"] = record.circuit;
        j["n_qubits"] = record.n_qubits;
        j["n_layers"] = record.n_layers;
    }
    return j;
}

TrialRecord trial_from_json(const json& j) {
    if (!j.contains("schema") || j.at("schema").get<int>() != kTrialSchemaVersion) {
        throw SchemaError("trial record with unsupported schema version");
    }
    TrialRecord rec;
    rec.trial_id = j.at("trial").get<int>();
    for (const auto& [name, value] : j.at("params").items()) {
        rec.params[name] = param_value_from_json(value);
    }
    rec.status = j.at("status").get<std::string>();
    if (rec.status == "ok") {
        const auto scores = j.at("fold_scores").get<std::vector<double>>();
        if (scores.size() != rec.fold_scores.size()) {
            throw SchemaError("trial record with malformed fold_scores");
        }
        std::copy(scores.begin(), scores.end(), rec.fold_scores.begin());
        rec.objective = j.at("objective").get<double>();
    } else {
        rec.error = j.value("error", "");
    }
    if (j.contains("train_score")) {
        rec.train_score = j.at("train_score").get<double>();
        rec.test_score = j.at("test_score").get<double>();
        rec.has_final_scores = true;
    }
    rec.wall_time_s = j.value("wall_time_s", 0.0);
    rec.seed = j.value("seed", std::uint64_t{0});
    rec.circuit = j.value("circuit", "");
    rec.n_qubits = j.value("n_qubits", 0);
    rec.n_layers = j.value("n_layers", 0);
    return rec;
}

void append_trial_jsonl(const std::string& path, const TrialRecord& record) {
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw IoError("cannot append to " + path);
    }
    out << trial_to_json(record).dump() << "\n";
}

std::vector<TrialRecord> load_trials_jsonl(const std::string& path) {
    std::istringstream in(read_text(path));
    std::vector<TrialRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            records.push_back(trial_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

namespace {

std::string domain_kind_name(DomainKind kind) {
    switch (kind) {
    case DomainKind::Uniform:
        return "uniform";
    case DomainKind::LogUniform:
        return "log_uniform";
    case DomainKind::Integer:
        return "integer";
    case DomainKind::Categorical:
        return "categorical";
    }
    return "?";
}

DomainKind domain_kind_from_name(const std::string& name) {
    if (name == "uniform") {
        return DomainKind::Uniform;
    }
    if (name == "log_uniform") {
        return DomainKind::LogUniform;
    }
    if (name == "integer") {
        return DomainKind::Integer;
    }
    if (name == "categorical") {
        return DomainKind::Categorical;
    }
    throw SchemaError("unknown domain kind: " + name);
}

} // namespace

json search_space_to_json(const SearchSpace& space) {
    json arr = json::array();
    for (const auto& param : space.params) {
        json p;
        p["name"] = param.name;
        p["kind"] = domain_kind_name(param.domain.kind);
        if (param.domain.kind == DomainKind::Categorical) {
            p["options"] = param.domain.options;
        } else {
            p["lo"] = param.domain.lo;
            p["hi"] = param.domain.hi;
            if (param.domain.kind == DomainKind::Integer) {
                p["step"] = param.domain.step;
            }
        }
        if (param.when) {
            p["when"] = {{"param", param.when->param}, {"any_of", param.when->any_of}};
        }
        arr.push_back(p);
    }
    return arr;
}

SearchSpace search_space_from_json(const json& j) {
    SearchSpace space;
    for (const auto& p : j) {
        SearchParam param;
        param.name = p.at("name").get<std::string>();
        param.domain.kind = domain_kind_from_name(p.at("kind").get<std::string>());
        if (param.domain.kind == DomainKind::Categorical) {
            param.domain.options = p.at("options").get<std::vector<std::string>>();
        } else {
            param.domain.lo = p.at("lo").get<double>();
            param.domain.hi = p.at("hi").get<double>();
            param.domain.step = p.value("step", std::int64_t{1});
        }
        if (p.contains("when")) {
            Condition cond;
            cond.param = p.at("when").at("param").get<std::string>();
            cond.any_of = p.at("when").at("any_of").get<std::vector<std::string>>();
            param.when = cond;
        }
        space.params.push_back(std::move(param));
    }
    return space;
}

json corr_matrix_to_json(const CorrMatrix& matrix) {
    const int v = static_cast<int>(matrix.variables.size());
    json coeff = json::array();
    json pvals = json::array();
    json sig = json::array();
    for (int i = 0; i < v; ++i) {
        json crow = json::array(), prow = json::array(), srow = json::array();
        for (int j = 0; j < v; ++j) {
            crow.push_back(matrix.coefficients(i, j));
            prow.push_back(matrix.p_values(i, j));
            srow.push_back(i != j && matrix.significant(i, j));
        }
        coeff.push_back(crow);
        pvals.push_back(prow);
        sig.push_back(srow);
    }
    json j;
    j["schema"] = 1;
    j["variables"] = matrix.variables;
    j["coefficients"] = coeff;
    j["p_values"] = pvals;
    j["significant"] = sig;
    return j;
}

json importance_to_json(const ImportanceReport& report) {
    json imp = json::object();
    for (std::size_t i = 0; i < report.names.size(); ++i) {
        imp[report.names[i]] = report.importance[i];
    }
    json j;
    j["schema"] = 1;
    j["importance"] = imp;
    j["degenerate"] = report.degenerate;
    return j;
}

std::map<std::string, std::vector<double>> trial_table_columns(
    const std::vector<TrialRecord>& records) {
    std::vector<const TrialRecord*> ok;
    for (const auto& rec : records) {
        if (rec.status == "ok") {
            ok.push_back(&rec);
        }
    }

    // numeric params present in every successful trial
    std::set<std::string> numeric;
    bool first = true;
    for (const auto* rec : ok) {
        std::set<std::string> here;
        for (const auto& [name, value] : rec->params) {
            if (!std::holds_alternative<std::string>(value)) {
                here.insert(name);
            }
        }
        if (first) {
            numeric = here;
            first = false;
        } else {
            std::set<std::string> keep;
            std::set_intersection(numeric.begin(), numeric.end(), here.begin(), here.end(),
                                  std::inserter(keep, keep.begin()));
            numeric = keep;
        }
    }

    std::map<std::string, std::vector<double>> columns;
    for (const auto* rec : ok) {
        for (const auto& name : numeric) {
            columns[name].push_back(as_double(rec->params.at(name)));
        }
        columns["objective"].push_back(rec->objective);
        if (numeric.count("f_min") && numeric.count("f_max")) {
            columns["w_e"].push_back(as_double(rec->params.at("f_max")) -
                                     as_double(rec->params.at("f_min")));
        }
        if (rec->n_qubits > 0 && numeric.count("n_qubits") == 0) {
            columns["n_qubits"].push_back(rec->n_qubits);
        }
        if (rec->n_qubits > 0 && numeric.count("n_layers") == 0) {
            columns["n_layers"].push_back(rec->n_layers);
        }
        if (rec->has_final_scores) {
            columns["train_score"].push_back(rec->train_score);
            columns["test_score"].push_back(rec->test_score);
        }
    }

    // drop ragged columns (e.g. test_score present for best trials only)
    const std::size_t n = ok.size();
    for (auto it = columns.begin(); it != columns.end();) {
        if (it->second.size() != n) {
            it = columns.erase(it);
        } else {
            ++it;
        }
    }
    return columns;
}

} // namespace qkb::io
