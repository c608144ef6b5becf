#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qkbench/errors.hpp"

namespace qkb {

struct CorrResult {
    double coefficient = 0.0;
    double p_value = 1.0;
    int n = 0;
    bool significant = false; // p_value <= 0.05
};

enum class CorrMethod { Pearson, Spearman };
enum class PartialMode { Partial, SemipartialX, SemipartialY };

/// Mid-ranks (ties share the average rank), 1-based.
std::vector<double> midranks(std::span<const double> x);

/// Linear correlation with a two-sided Student-t p-value.
CorrResult pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of the mid-rank-transformed data. With
/// exact_small_n set, n <= 10 uses the exact permutation p-value instead of
/// the t approximation.
CorrResult spearman(std::span<const double> x, std::span<const double> y,
                    bool exact_small_n = false);

/// Correlation between x and y after regressing the control matrix Z
/// (columns = controls) out of both variables (Partial) or exactly one
/// (SemipartialX removes Z from x, SemipartialY from y). Spearman mode
/// rank-transforms everything first.
CorrResult partial_corr(std::span<const double> x, std::span<const double> y,
                        const Eigen::MatrixXd& Z, CorrMethod method,
                        PartialMode mode = PartialMode::Partial);

/// Pairwise correlation matrix over named columns; coefficients mirror into
/// both triangles, p-values likewise.
struct CorrMatrix {
    std::vector<std::string> variables;
    Eigen::MatrixXd coefficients;
    Eigen::MatrixXd p_values;

    bool significant(int i, int j) const { return p_values(i, j) <= 0.05; }
};

CorrMatrix corr_matrix(const std::map<std::string, std::vector<double>>& columns,
                       const std::vector<std::string>& variables, CorrMethod method);

/// Benjamini-Hochberg adjusted p-values (optional multiple-comparison
/// control; off by default everywhere).
std::vector<double> benjamini_hochberg(const std::vector<double>& p_values);

} // namespace qkb
