#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qkbench/errors.hpp"

namespace qkb {

enum class DatasetFamily { Friedman, TwoCurvesDiff, HiddenManifoldDiff, QFMNIST, NH3PES, CsvCustom };
enum class Task { Regression, Classification };

std::string to_string(DatasetFamily family);
DatasetFamily family_from_string(const std::string& name);

struct Dataset {
    Eigen::MatrixXd X; // M_total x d
    Eigen::VectorXd y; // targets, or +-1 labels for classification
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    DatasetFamily family = DatasetFamily::CsvCustom;
    Task task = Task::Regression;
    double control = 0.0; // the family's complexity knob (d, D or m)
    std::uint64_t seed = 0;

    int n_features() const { return static_cast<int>(X.cols()); }
    int n_total() const { return static_cast<int>(X.rows()); }

    Eigen::MatrixXd rows(const std::vector<int>& idx) const;
    Eigen::VectorXd targets(const std::vector<int>& idx) const;
    Eigen::MatrixXd train_X() const { return rows(train_idx); }
    Eigen::MatrixXd test_X() const { return rows(test_idx); }
    Eigen::VectorXd train_y() const { return targets(train_idx); }
    Eigen::VectorXd test_y() const { return targets(test_idx); }
};

/// Friedman #1: features i.i.d. uniform on [0,1], only the first five enter
/// the target; sigma scales the additive Gaussian noise.
Dataset friedman1(int d, int M_total, double sigma, std::uint64_t seed);

/// Noiseless Friedman #1 target for one point (test oracle and generator
/// share this).
double friedman1_value(const Eigen::VectorXd& x);

/// Two classes sampled along two degree-D Fourier curves embedded in 4
/// dimensions; inter-curve offset 1/(2D), coordinate noise sigma = 0.01.
Dataset two_curves_diff(int D, int M_total, std::uint64_t seed);

double two_curves_offset(int D);

/// Latent points on an m-dimensional manifold labeled by a random
/// one-hidden-layer tanh network, projected to 4 dimensions.
Dataset hidden_manifold_diff(int m, int M_total, std::uint64_t seed);

struct PCAModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components; // k x d, orthonormal rows, descending variance
    Eigen::VectorXd explained_variance;
};

PCAModel pca_fit(const Eigen::MatrixXd& X, int k);
Eigen::MatrixXd pca_apply(const PCAModel& model, const Eigen::MatrixXd& X);

/// Big-endian IDX parsers (magic 0x803 for images, 0x801 for labels).
/// Images come back flattened row-major and scaled to [0, 1].
Eigen::MatrixXd load_idx_images(const std::string& path);
std::vector<int> load_idx_labels(const std::string& path);

/// Fashion-MNIST images reduced by PCA to d components (scaled per
/// component to [-1, 1]), relabeled by the Pauli-Z expectation of qubit 0
/// after a second-order Pauli-Z encoding.
Dataset qfmnist(int d, int M_total, const std::string& images_path, std::uint64_t seed);

/// Regression CSV loader. profile "nh3" enforces 6 feature columns and 193
/// rows with a 155/38 split; profile "custom" takes any d+1-column CSV with
/// an 80/20 split.
Dataset load_csv_regression(const std::string& path, const std::string& profile,
                            std::uint64_t seed);

/// Mean over features of |Spearman rho| between the [0,1]-normalized
/// feature and the output. Constant features contribute 0 and are reported
/// through `constant_features` when given.
double complexity_cbar(const Dataset& dataset, std::vector<int>* constant_features = nullptr);

} // namespace qkb
