#include "qkbench/datasets.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qkbench/circuits.hpp"
#include "qkbench/rng.hpp"
#include "qkbench/stats.hpp"

namespace qkb {

namespace {

constexpr double kTestFraction = 0.2;

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) {
        idx[i] = i;
    }
    rng.shuffle(idx);
    return idx;
}

// Deterministic train/test split; classification splits are stratified so
// the balance invariant carries over to both parts.
void split_dataset(Dataset& ds, std::uint64_t seed, int n_test) {
    Rng rng(derive_seed(seed, "train-test-split"));
    const int n = ds.n_total();
    ds.train_idx.clear();
    ds.test_idx.clear();
    if (ds.task == Task::Classification) {
        std::vector<int> pos, neg;
        for (int i = 0; i < n; ++i) {
            (ds.y(i) > 0 ? pos : neg).push_back(i);
        }
        rng.shuffle(pos);
        rng.shuffle(neg);
        const int test_pos = static_cast<int>(std::lround(
            static_cast<double>(n_test) * pos.size() / static_cast<double>(n)));
        const int test_neg = n_test - test_pos;
        for (int i = 0; i < static_cast<int>(pos.size()); ++i) {
            (i < test_pos ? ds.test_idx : ds.train_idx).push_back(pos[i]);
        }
        for (int i = 0; i < static_cast<int>(neg.size()); ++i) {
            (i < test_neg ? ds.test_idx : ds.train_idx).push_back(neg[i]);
        }
    } else {
        auto idx = shuffled_indices(n, rng);
        for (int i = 0; i < n; ++i) {
            (i < n_test ? ds.test_idx : ds.train_idx).push_back(idx[i]);
        }
    }
    std::sort(ds.train_idx.begin(), ds.train_idx.end());
    std::sort(ds.test_idx.begin(), ds.test_idx.end());
}

int default_test_size(int M_total) {
    return std::max(1, static_cast<int>(std::lround(M_total * kTestFraction)));
}

} // namespace

std::string to_string(DatasetFamily family) {
    switch (family) {
    case DatasetFamily::Friedman:
        return "friedman";
    case DatasetFamily::TwoCurvesDiff:
        return "two-curves-diff";
    case DatasetFamily::HiddenManifoldDiff:
        return "hidden-manifold-diff";
    case DatasetFamily::QFMNIST:
        return "qfmnist";
    case DatasetFamily::NH3PES:
        return "nh3-pes";
    case DatasetFamily::CsvCustom:
        return "csv";
    }
    return "?";
}

DatasetFamily family_from_string(const std::string& name) {
    if (name == "friedman") {
        return DatasetFamily::Friedman;
    }
    if (name == "two-curves-diff") {
        return DatasetFamily::TwoCurvesDiff;
    }
    if (name == "hidden-manifold-diff") {
        return DatasetFamily::HiddenManifoldDiff;
    }
    if (name == "qfmnist") {
        return DatasetFamily::QFMNIST;
    }
    if (name == "nh3-pes") {
        return DatasetFamily::NH3PES;
    }
    if (name == "csv") {
        return DatasetFamily::CsvCustom;
    }
    throw ConfigError("unknown dataset family: " + name);
}

Eigen::MatrixXd Dataset::rows(const std::vector<int>& idx) const {
    Eigen::MatrixXd out(idx.size(), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.row(i) = X.row(idx[i]);
    }
    return out;
}

Eigen::VectorXd Dataset::targets(const std::vector<int>& idx) const {
    Eigen::VectorXd out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out(i) = y(idx[i]);
    }
    return out;
}

double friedman1_value(const Eigen::VectorXd& x) {
    constexpr double pi = std::numbers::pi;
    return 10.0 * std::sin(pi * x(0) * x(1)) + 20.0 * (x(2) - 0.5) * (x(2) - 0.5) +
           10.0 * x(3) + 5.0 * x(4);
}

Dataset friedman1(int d, int M_total, double sigma, std::uint64_t seed) {
    if (d < 5) {
        throw ConfigError("friedman1 requires d >= 5");
    }
    Rng rng(derive_seed(seed, "friedman1"));
    Dataset ds;
    ds.family = DatasetFamily::Friedman;
    ds.task = Task::Regression;
    ds.control = d;
    ds.seed = seed;
    ds.X.resize(M_total, d);
    ds.y.resize(M_total);
    for (int i = 0; i < M_total; ++i) {
        for (int j = 0; j < d; ++j) {
            ds.X(i, j) = rng.uniform();
        }
        ds.y(i) = friedman1_value(ds.X.row(i)) + sigma * rng.normal();
    }
    split_dataset(ds, seed, default_test_size(M_total));
    return ds;
}

double two_curves_offset(int D) { return 1.0 / (2.0 * D); }

Dataset two_curves_diff(int D, int M_total, std::uint64_t seed) {
    if (D < 1) {
        throw ConfigError("two_curves_diff requires D >= 1");
    }
    constexpr int d = 4;
    constexpr double noise_sigma = 0.01;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Rng rng(derive_seed(seed, "two-curves-diff"));

    // Fourier coefficients per output dimension, variance 1/D
    const double coef_std = 1.0 / std::sqrt(static_cast<double>(D));
    Eigen::MatrixXd a(d, D), b(d, D);
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < D; ++k) {
            a(j, k) = rng.normal(0.0, coef_std);
            b(j, k) = rng.normal(0.0, coef_std);
        }
    }
    const double delta = two_curves_offset(D);

    Dataset ds;
    ds.family = DatasetFamily::TwoCurvesDiff;
    ds.task = Task::Classification;
    ds.control = D;
    ds.seed = seed;
    ds.X.resize(M_total, d);
    ds.y.resize(M_total);
    const int n_pos = (M_total + 1) / 2;
    for (int i = 0; i < M_total; ++i) {
        const bool first_curve = i < n_pos;
        const double t = rng.uniform();
        for (int j = 0; j < d; ++j) {
            double v = 0.0;
            for (int k = 0; k < D; ++k) {
                v += a(j, k) * std::cos(two_pi * (k + 1) * t) +
                     b(j, k) * std::sin(two_pi * (k + 1) * t);
            }
            if (!first_curve) {
                v += delta;
            }
            ds.X(i, j) = v + rng.normal(0.0, noise_sigma);
        }
        ds.y(i) = first_curve ? 1.0 : -1.0;
    }
    split_dataset(ds, seed, default_test_size(M_total));
    return ds;
}

Dataset hidden_manifold_diff(int m, int M_total, std::uint64_t seed) {
    if (m < 1) {
        throw ConfigError("hidden_manifold_diff requires m >= 1");
    }
    constexpr int d = 4;
    Rng rng(derive_seed(seed, "hidden-manifold-diff"));

    const int width = 2 * m;
    Eigen::MatrixXd w_hidden(width, m);
    Eigen::VectorXd v_out(width);
    Eigen::MatrixXd w_proj(d, m);
    for (int i = 0; i < width; ++i) {
        for (int j = 0; j < m; ++j) {
            w_hidden(i, j) = rng.normal();
        }
        v_out(i) = rng.normal();
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < m; ++j) {
            w_proj(i, j) = rng.normal();
        }
    }

    auto label_of = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd h = (w_hidden * z).array().tanh();
        return v_out.dot(h) >= 0.0 ? 1.0 : -1.0;
    };

    Dataset ds;
    ds.family = DatasetFamily::HiddenManifoldDiff;
    ds.task = Task::Classification;
    ds.control = m;
    ds.seed = seed;
    ds.X.resize(M_total, d);
    ds.y.resize(M_total);

    // class quotas keep the labels balanced; candidates for a full class
    // are resampled
    const int quota_pos = (M_total + 1) / 2;
    const int quota_neg = M_total - quota_pos;
    int got_pos = 0, got_neg = 0, row = 0;
    const long max_draws = 100L * std::max(M_total, 4);
    for (long draws = 0; row < M_total; ++draws) {
        if (draws >= max_draws) {
            throw GenerationError("hidden_manifold_diff: could not balance labels (network "
                                  "appears degenerate)");
        }
        Eigen::VectorXd z(m);
        for (int j = 0; j < m; ++j) {
            z(j) = rng.uniform(-1.0, 1.0);
        }
        const double label = label_of(z);
        if (label > 0 && got_pos >= quota_pos) {
            continue;
        }
        if (label < 0 && got_neg >= quota_neg) {
            continue;
        }
        ds.X.row(row) = (w_proj * z).array().tanh();
        ds.y(row) = label;
        (label > 0 ? got_pos : got_neg)++;
        ++row;
    }
    split_dataset(ds, seed, default_test_size(M_total));
    return ds;
}

PCAModel pca_fit(const Eigen::MatrixXd& X, int k) {
    if (k < 1 || k > std::min(X.rows(), X.cols())) {
        throw ShapeError("pca_fit: k must be in [1, min(samples, dims)]");
    }
    PCAModel model;
    model.mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / std::max<double>(1.0, X.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw ConditioningError("pca_fit: eigendecomposition failed");
    }
    // eigenvalues come out ascending; take the top k in descending order
    model.components.resize(k, X.cols());
    model.explained_variance.resize(k);
    const int dim = static_cast<int>(X.cols());
    for (int i = 0; i < k; ++i) {
        model.components.row(i) = solver.eigenvectors().col(dim - 1 - i).transpose();
        model.explained_variance(i) = std::max(0.0, solver.eigenvalues()(dim - 1 - i));
    }
    return model;
}

Eigen::MatrixXd pca_apply(const PCAModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.mean.size()) {
        throw ShapeError("pca_apply: dimension mismatch");
    }
    return (X.rowwise() - model.mean.transpose()) * model.components.transpose();
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw IngestError(path + ": truncated at byte " + std::to_string(offset));
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

} // namespace

Eigen::MatrixXd load_idx_images(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open IDX file: " + path);
    }
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != 0x00000803u) {
        throw IngestError(path + ": bad image magic at byte 0 (expected 0x803)");
    }
    const std::uint32_t count = read_be32(in, path, 4);
    const std::uint32_t rows = read_be32(in, path, 8);
    const std::uint32_t cols = read_be32(in, path, 12);
    const std::size_t pixels = std::size_t(rows) * cols;
    Eigen::MatrixXd X(count, pixels);
    std::vector<unsigned char> buf(pixels);
    for (std::uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
        if (!in) {
            throw IngestError(path + ": truncated at byte " +
                              std::to_string(16 + std::size_t(i) * pixels));
        }
        for (std::size_t p = 0; p < pixels; ++p) {
            X(i, p) = buf[p] / 255.0;
        }
    }
    return X;
}

std::vector<int> load_idx_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IngestError("cannot open IDX file: " + path);
    }
    const std::uint32_t magic = read_be32(in, path, 0);
    if (magic != 0x00000801u) {
        throw IngestError(path + ": bad label magic at byte 0 (expected 0x801)");
    }
    const std::uint32_t count = read_be32(in, path, 4);
    std::vector<int> labels(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const int c = in.get();
        if (c == EOF) {
            throw IngestError(path + ": truncated at byte " + std::to_string(8 + i));
        }
        labels[i] = c;
    }
    return labels;
}

Dataset qfmnist(int d, int M_total, const std::string& images_path, std::uint64_t seed) {
    Eigen::MatrixXd images = load_idx_images(images_path);
    if (images.rows() < M_total) {
        throw IngestError("qfmnist: IDX file holds fewer than M_total images");
    }
    Rng rng(derive_seed(seed, "qfmnist"));
    auto order = shuffled_indices(static_cast<int>(images.rows()), rng);

    Eigen::MatrixXd sample(M_total, images.cols());
    for (int i = 0; i < M_total; ++i) {
        sample.row(i) = images.row(order[i]);
    }

    const PCAModel pca = pca_fit(sample, d);
    Eigen::MatrixXd comps = pca_apply(pca, sample);
    // per-component min-max scale to [-1, 1]
    for (int c = 0; c < d; ++c) {
        const double lo = comps.col(c).minCoeff();
        const double hi = comps.col(c).maxCoeff();
        if (hi - lo < 1e-300) {
            comps.col(c).setZero();
        } else {
            comps.col(c) = 2.0 * (comps.col(c).array() - lo) / (hi - lo) - 1.0;
        }
    }

    // second-order Pauli-Z encoding (two repetitions), label = <Z_0>
    const CircuitSpec enc =
        named_circuit(CircuitName::ZZFeatureMap, d, 2, d, EncodingStrategy::Option1);
    const std::vector<double> no_params;
    const PauliString z0 = PauliString::single(PauliOp::Z, 0);

    Dataset ds;
    ds.family = DatasetFamily::QFMNIST;
    ds.task = Task::Regression;
    ds.control = d;
    ds.seed = seed;
    ds.X = comps;
    ds.y.resize(M_total);
    for (int i = 0; i < M_total; ++i) {
        std::vector<double> x(d);
        for (int c = 0; c < d; ++c) {
            x[c] = comps(i, c);
        }
        const StateVector state = encode_state(enc, x, no_params);
        ds.y(i) = pauli_expectation(state, z0);
    }
    split_dataset(ds, seed, default_test_size(M_total));
    return ds;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

Dataset load_csv_regression(const std::string& path, const std::string& profile,
                            std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("cannot open CSV file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError(path + ": missing header row");
    }
    const auto header = split_csv_line(line);
    if (header.size() < 2) {
        throw SchemaError(path + ": need at least one feature column and one target column");
    }
    const int d = static_cast<int>(header.size()) - 1;

    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != d + 1) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(d + 1) + " columns, got " +
                              std::to_string(fields.size()));
        }
        std::vector<double> row(d + 1);
        for (int c = 0; c <= d; ++c) {
            try {
                row[c] = std::stod(fields[c]);
            } catch (const std::exception&) {
                throw SchemaError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric field '" + fields[c] + "'");
            }
        }
        rows.push_back(std::move(row));
    }

    Dataset ds;
    ds.task = Task::Regression;
    ds.seed = seed;
    int n_test;
    if (profile == "nh3") {
        if (d != 6) {
            throw SchemaError(path + ": NH3 profile expects 6 feature columns, got " +
                              std::to_string(d));
        }
        if (rows.size() != 193) {
            throw SchemaError(path + ": NH3 profile expects 193 rows, got " +
                              std::to_string(rows.size()));
        }
        ds.family = DatasetFamily::NH3PES;
        n_test = 38;
    } else if (profile == "custom") {
        ds.family = DatasetFamily::CsvCustom;
        n_test = default_test_size(static_cast<int>(rows.size()));
    } else {
        throw ConfigError("unknown CSV profile: " + profile);
    }

    ds.control = d;
    ds.X.resize(rows.size(), d);
    ds.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int c = 0; c < d; ++c) {
            ds.X(i, c) = rows[i][c];
        }
        ds.y(i) = rows[i][d];
    }
    split_dataset(ds, seed, n_test);
    return ds;
}

double complexity_cbar(const Dataset& dataset, std::vector<int>* constant_features) {
    const int n = dataset.n_total();
    if (n < 3) {
        throw ShapeError("complexity_cbar: need at least 3 samples");
    }
    const int d = dataset.n_features();
    std::vector<double> target(n);
    for (int i = 0; i < n; ++i) {
        target[i] = dataset.y(i);
    }
    double total = 0.0;
    for (int c = 0; c < d; ++c) {
        const double lo = dataset.X.col(c).minCoeff();
        const double hi = dataset.X.col(c).maxCoeff();
        if (hi - lo < 1e-300) {
            if (constant_features != nullptr) {
                constant_features->push_back(c);
            }
            continue; // contributes 0
        }
        std::vector<double> feature(n);
        for (int i = 0; i < n; ++i) {
            feature[i] = (dataset.X(i, c) - lo) / (hi - lo);
        }
        total += std::abs(spearman(feature, target).coefficient);
    }
    return total / d;
}

} // namespace qkb
