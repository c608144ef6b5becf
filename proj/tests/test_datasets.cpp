#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "qkbench/circuits.hpp"
#include "qkbench/datasets.hpp"
#include "qkbench/rng.hpp"
#include "qkbench/stats.hpp"
#include "support/oracles.hpp"

using namespace qkb;
constexpr double pi = std::numbers::pi;

namespace {

void check_split(const Dataset& ds, int expected_train, int expected_test) {
    CHECK(ds.train_idx.size() == expected_train);
    CHECK(ds.test_idx.size() == expected_test);
    std::set<int> all(ds.train_idx.begin(), ds.train_idx.end());
    for (int idx : ds.test_idx) {
        CHECK(all.count(idx) == 0);
        all.insert(idx);
    }
    CHECK(all.size() == static_cast<std::size_t>(expected_train + expected_test));
}

int balance_gap(const Dataset& ds) {
    int pos = 0, neg = 0;
    for (int i = 0; i < ds.n_total(); ++i) {
        (ds.y(i) > 0 ? pos : neg)++;
    }
    return std::abs(pos - neg);
}

std::string temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "qkb_datasets_test";
    std::filesystem::create_directories(dir);
    return dir.string();
}

// minimal big-endian IDX image file with deterministic pixel noise
std::string write_idx_images(int count, int rows, int cols, std::uint64_t seed) {
    const std::string path = temp_dir() + "/images_" + std::to_string(seed) + ".idx";
    std::ofstream out(path, std::ios::binary);
    auto be32 = [&](std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(0x00000803u);
    be32(count);
    be32(rows);
    be32(cols);
    Rng rng(seed);
    for (int i = 0; i < count * rows * cols; ++i) {
        out.put(static_cast<char>(rng.randint(0, 255)));
    }
    return path;
}

} // namespace

TEST_CASE("friedman1 evaluates the closed form without noise") {
    const Dataset ds = friedman1(5, 300, 0.0, 3);
    check_split(ds, 240, 60);
    for (int i = 0; i < ds.n_total(); ++i) {
        CHECK(std::abs(ds.y(i) - friedman1_value(ds.X.row(i))) <= 1e-12);
    }

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(5);
    CHECK(friedman1_value(zero) == doctest::Approx(5.0)); // 20 * (0 - 0.5)^2
    Eigen::VectorXd half = Eigen::VectorXd::Constant(5, 0.5);
    CHECK(friedman1_value(half) == doctest::Approx(14.5711).epsilon(1e-4));

    CHECK_THROWS_AS(friedman1(4, 300, 0.0, 3), ConfigError);
}

TEST_CASE("friedman1 distractor features are independent of the target") {
    const Dataset ds = friedman1(8, 300, 0.0, 11);
    std::vector<double> target(ds.n_total());
    for (int i = 0; i < ds.n_total(); ++i) {
        target[i] = ds.y(i);
    }
    for (int c = 5; c < 8; ++c) {
        std::vector<double> feature(ds.n_total());
        for (int i = 0; i < ds.n_total(); ++i) {
            feature[i] = ds.X(i, c);
        }
        CHECK(std::abs(spearman(feature, target).coefficient) < 0.15);
    }
}

TEST_CASE("friedman1 is deterministic in the seed") {
    const Dataset a = friedman1(6, 100, 0.01, 42);
    const Dataset b = friedman1(6, 100, 0.01, 42);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(a.train_idx == b.train_idx);
}

TEST_CASE("two curves diff is balanced with the documented offset") {
    const Dataset ds = two_curves_diff(13, 300, 5);
    CHECK(ds.n_features() == 4);
    CHECK(ds.task == Task::Classification);
    CHECK(balance_gap(ds) <= 1);
    check_split(ds, 240, 60);
    for (int i = 0; i < ds.n_total(); ++i) {
        CHECK((ds.y(i) == 1.0 || ds.y(i) == -1.0));
    }
    CHECK(two_curves_offset(13) == doctest::Approx(1.0 / 26.0));
}

TEST_CASE("two curves diff complexity falls from D=2 to D=20") {
    double lo_sum = 0.0, hi_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        lo_sum += complexity_cbar(two_curves_diff(2, 300, seed));
        hi_sum += complexity_cbar(two_curves_diff(20, 300, seed));
    }
    CHECK(lo_sum / 5.0 > hi_sum / 5.0);
}

TEST_CASE("hidden manifold diff labels and determinism") {
    const Dataset a = hidden_manifold_diff(4, 200, 9);
    const Dataset b = hidden_manifold_diff(4, 200, 9);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(a.n_features() == 4);
    CHECK(balance_gap(a) <= 1);
    for (int i = 0; i < a.n_total(); ++i) {
        CHECK((a.y(i) == 1.0 || a.y(i) == -1.0));
        for (int c = 0; c < 4; ++c) {
            CHECK(std::abs(a.X(i, c)) <= 1.0); // tanh embedding
        }
    }
}

TEST_CASE("hidden manifold diff complexity falls from m=2 to m=20") {
    double lo_sum = 0.0, hi_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        lo_sum += complexity_cbar(hidden_manifold_diff(2, 300, seed));
        hi_sum += complexity_cbar(hidden_manifold_diff(20, 300, seed));
    }
    CHECK(lo_sum / 5.0 > hi_sum / 5.0);
}

TEST_CASE("pca recovers axis-aligned structure") {
    Rng rng(21);
    Eigen::MatrixXd X(50, 3);
    for (int i = 0; i < 50; ++i) {
        X(i, 0) = rng.normal() * 5.0;
        X(i, 1) = 1.0; // constant
        X(i, 2) = rng.normal() * 0.01;
    }
    const PCAModel model = pca_fit(X, 1);
    CHECK(std::abs(model.components(0, 0)) == doctest::Approx(1.0).epsilon(1e-3));

    // orthonormal components, non-increasing variances
    const PCAModel full = pca_fit(X, 3);
    const Eigen::MatrixXd gram = full.components * full.components.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(full.explained_variance(0) >= full.explained_variance(1));
    CHECK(full.explained_variance(1) >= full.explained_variance(2));

    // full-rank reconstruction
    const Eigen::MatrixXd scores = pca_apply(full, X);
    const Eigen::MatrixXd back =
        (scores * full.components).rowwise() + full.mean.transpose();
    CHECK((back - X).cwiseAbs().maxCoeff() < 1e-8);

    CHECK_THROWS_AS(pca_fit(X, 4), ShapeError);
    CHECK_THROWS_AS(pca_fit(X, 0), ShapeError);
}

TEST_CASE("idx loader round trip and error reporting") {
    const std::string path = write_idx_images(10, 4, 4, 77);
    const Eigen::MatrixXd images = load_idx_images(path);
    CHECK(images.rows() == 10);
    CHECK(images.cols() == 16);
    CHECK(images.minCoeff() >= 0.0);
    CHECK(images.maxCoeff() <= 1.0);

    // corrupt magic
    const std::string bad = temp_dir() + "/bad.idx";
    {
        std::ofstream out(bad, std::ios::binary);
        out.write("\x00\x00\x08\x05", 4);
    }
    CHECK_THROWS_AS(load_idx_images(bad), IngestError);
    CHECK_THROWS_AS(load_idx_images(temp_dir() + "/missing.idx"), IngestError);

    // truncated pixel payload reports the offset
    const std::string trunc = temp_dir() + "/trunc.idx";
    {
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
        std::ofstream out(trunc, std::ios::binary);
        out.write(content.data(), static_cast<std::streamsize>(content.size() - 8));
    }
    try {
        load_idx_images(trunc);
        CHECK(false);
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
}

TEST_CASE("idx label files parse and validate") {
    const std::string path = temp_dir() + "/labels.idx";
    {
        std::ofstream out(path, std::ios::binary);
        const unsigned char header[8] = {0, 0, 8, 1, 0, 0, 0, 5};
        out.write(reinterpret_cast<const char*>(header), 8);
        for (unsigned char l : {3, 1, 4, 1, 5}) {
            out.put(static_cast<char>(l));
        }
    }
    const auto labels = load_idx_labels(path);
    CHECK(labels == std::vector<int>{3, 1, 4, 1, 5});

    const std::string wrong_magic = temp_dir() + "/labels_bad.idx";
    {
        std::ofstream out(wrong_magic, std::ios::binary);
        const unsigned char header[8] = {0, 0, 8, 3, 0, 0, 0, 5};
        out.write(reinterpret_cast<const char*>(header), 8);
    }
    CHECK_THROWS_AS(load_idx_labels(wrong_magic), IngestError);

    const std::string short_file = temp_dir() + "/labels_trunc.idx";
    {
        std::ofstream out(short_file, std::ios::binary);
        const unsigned char header[8] = {0, 0, 8, 1, 0, 0, 0, 5};
        out.write(reinterpret_cast<const char*>(header), 8);
        out.put(1);
    }
    CHECK_THROWS_AS(load_idx_labels(short_file), IngestError);
}

TEST_CASE("qfmnist labels are first-qubit Z expectations") {
    const std::string path = write_idx_images(80, 6, 6, 123);
    const Dataset ds = qfmnist(3, 40, path, 7);
    CHECK(ds.n_features() == 3);
    check_split(ds, 32, 8);
    for (int i = 0; i < ds.n_total(); ++i) {
        CHECK(ds.y(i) >= -1.0);
        CHECK(ds.y(i) <= 1.0);
        for (int c = 0; c < 3; ++c) {
            CHECK(ds.X(i, c) >= -1.0 - 1e-12);
            CHECK(ds.X(i, c) <= 1.0 + 1e-12);
        }
    }

    const Dataset again = qfmnist(3, 40, path, 7);
    CHECK(ds.X == again.X);
    CHECK(ds.y == again.y);

    // labels match the density-matrix trace tr(rho Z_0) recomputed from the
    // encoding circuit
    const CircuitSpec enc = named_circuit(CircuitName::ZZFeatureMap, 3, 2, 3,
                                          EncodingStrategy::Option1);
    const PauliString z0 = PauliString::single(PauliOp::Z, 0);
    for (int i = 0; i < 10; ++i) {
        std::vector<double> x(3);
        for (int c = 0; c < 3; ++c) {
            x[c] = ds.X(i, c);
        }
        const StateVector state = encode_state(enc, x, {});
        const Complex expected = oracles::density_matrix_expectation(state, z0);
        CHECK(std::abs(expected.imag()) < 1e-10);
        CHECK(std::abs(ds.y(i) - expected.real()) < 1e-10);
    }
}

TEST_CASE("qfmnist with d=1 reduces to the single-qubit phase circuit") {
    const std::string path = write_idx_images(50, 5, 5, 55);
    const Dataset ds = qfmnist(1, 30, path, 3);
    // H then PHASE(2x), twice; <Z> has the closed form
    // cos(2x)cos(4x) - (1-... -- compute via the dense oracle instead
    const CircuitSpec enc =
        named_circuit(CircuitName::ZZFeatureMap, 1, 2, 1, EncodingStrategy::Option1);
    for (int i = 0; i < ds.n_total(); ++i) {
        std::vector<double> x = {ds.X(i, 0)};
        const StateVector state = encode_state(enc, x, {});
        const Complex z = oracles::density_matrix_expectation(
            state, PauliString::single(PauliOp::Z, 0));
        CHECK(std::abs(ds.y(i) - z.real()) < 1e-10);
    }
}

TEST_CASE("csv loader profiles") {
    const std::string dir = temp_dir();

    // NH3-like synthetic file: 6 features + energy, 193 rows
    const std::string nh3 = dir + "/nh3.csv";
    {
        std::ofstream out(nh3);
        out << "r1,r2,r3,a1,a2,a3,energy\n";
        Rng rng(1);
        for (int i = 0; i < 193; ++i) {
            for (int c = 0; c < 6; ++c) {
                out << rng.uniform(0.9, 1.1) << ",";
            }
            out << rng.uniform(-56.6, -56.3) << "\n";
        }
    }
    const Dataset ds = load_csv_regression(nh3, "nh3", 11);
    CHECK(ds.n_total() == 193);
    CHECK(ds.n_features() == 6);
    check_split(ds, 155, 38);
    CHECK(ds.family == DatasetFamily::NH3PES);

    // custom profile with 3 columns and 10 rows -> d = 2
    const std::string tiny = dir + "/tiny.csv";
    {
        std::ofstream out(tiny);
        out << "a,b,y\n";
        for (int i = 0; i < 10; ++i) {
            out << i << "," << 2 * i << "," << 3 * i << "\n";
        }
    }
    const Dataset custom = load_csv_regression(tiny, "custom", 1);
    CHECK(custom.n_total() == 10);
    CHECK(custom.n_features() == 2);

    // schema errors
    const std::string wrong = dir + "/wrong.csv";
    {
        std::ofstream out(wrong);
        out << "a,b,y\n1,2,3\n";
    }
    CHECK_THROWS_AS(load_csv_regression(wrong, "nh3", 1), SchemaError);
    CHECK_THROWS_AS(load_csv_regression(dir + "/nope.csv", "custom", 1), IngestError);

    const std::string ragged = dir + "/ragged.csv";
    {
        std::ofstream out(ragged);
        out << "a,b,y\n1,2,3\n1,2\n";
    }
    CHECK_THROWS_AS(load_csv_regression(ragged, "custom", 1), SchemaError);
}

TEST_CASE("complexity measure basics") {
    // y = x1 exactly: perfect monotone relation
    Dataset ds;
    ds.task = Task::Regression;
    ds.X.resize(50, 1);
    ds.y.resize(50);
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
        ds.X(i, 0) = rng.uniform();
        ds.y(i) = ds.X(i, 0);
    }
    CHECK(complexity_cbar(ds) == doctest::Approx(1.0));

    // monotone rescaling leaves the measure unchanged
    Dataset cubed = ds;
    for (int i = 0; i < 50; ++i) {
        cubed.X(i, 0) = std::pow(ds.X(i, 0), 3);
    }
    CHECK(complexity_cbar(cubed) == doctest::Approx(1.0));

    // independent noise: near zero
    Dataset noise;
    noise.task = Task::Regression;
    noise.X.resize(300, 2);
    noise.y.resize(300);
    for (int i = 0; i < 300; ++i) {
        noise.X(i, 0) = rng.uniform();
        noise.X(i, 1) = rng.uniform();
        noise.y(i) = rng.uniform();
    }
    CHECK(complexity_cbar(noise) < 0.15);

    // constant feature flagged, contributes zero
    Dataset constant = ds;
    constant.X.conservativeResize(50, 2);
    constant.X.col(1).setConstant(4.2);
    std::vector<int> flagged;
    const double value = complexity_cbar(constant, &flagged);
    CHECK(value == doctest::Approx(0.5));
    REQUIRE(flagged.size() == 1);
    CHECK(flagged[0] == 1);
}
