#pragma once

// Soft-margin support vector machine trained by sequential minimal
// optimization on the dual:
//
//   maximize   sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//   subject to 0 <= a_i <= C,  sum_i a_i y_i = 0
//
// Working set: the maximal violator i paired with the j of largest
// second-order gain. Stops when the KKT gap
// max_{I_up} -y G - min_{I_low} -y G drops below tol.

#include "gazeclass/types.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace gazeclass {

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    double gamma = 1.0;  // RBF only

    double operator()(std::span<const double> a, std::span<const double> b) const;
    void validate() const;
};

// Symmetric kernel matrix over all rows.
RowMatrix gram_matrix(const RowMatrix& rows, const KernelSpec& kernel);

// A principal submatrix of a precomputed Gram matrix, selected by row index.
class GramView {
public:
    GramView(const RowMatrix& gram, std::span<const std::size_t> index)
        : data_(gram.data().data()), stride_(gram.cols()), index_(index) {}

    std::size_t size() const { return index_.size(); }
    double operator()(std::size_t i, std::size_t j) const { return data_[index_[i] * stride_ + index_[j]]; }
    const double* row_base(std::size_t i) const { return data_ + index_[i] * stride_; }
    std::span<const std::size_t> index() const { return index_; }

private:
    const double* data_;
    std::size_t stride_;
    std::span<const std::size_t> index_;
};

struct SmoProgress {
    std::size_t iteration = 0;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::span<const double> alpha;
};

struct SmoOptions {
    double tol = 1e-3;
    std::size_t max_iterations = 0;  // 0 = max(10^7, 100 n)
    // Called after every pair update. Slows training; meant for tests.
    std::function<void(const SmoProgress&)> observer;
    // Warm start, one value per row of the problem. Clipped to [0, C] and
    // rescaled within one class so that sum_i a_i y_i = 0 holds.
    std::span<const double> initial_alpha;
};

struct SmoSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double objective = 0.0;  // dual objective (maximized)
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

// labels are +1 / -1. Throws "degenerate labels" unless both occur, and
// reports the final KKT residual when max_iterations is exhausted.
SmoSolution smo_solve(const GramView& gram, std::span<const int> labels, double C, const SmoOptions& options = {});

double dual_objective(const GramView& gram, std::span<const int> labels, std::span<const double> alpha);

// Trained binary machine. Support vectors are rows of a shared, immutable
// training matrix; decision(x) = sum_i alpha_i y_i K(sv_i, x) + bias.
struct SvmModel {
    KernelSpec kernel;
    double C = 1.0;
    std::shared_ptr<const RowMatrix> training;
    std::vector<std::size_t> support_indices;  // rows of *training
    std::vector<double> alphas;
    std::vector<int> labels;
    double bias = 0.0;
    std::vector<double> weights;  // primal weights, linear kernel only

    double decision(std::span<const double> x) const;
    std::span<const double> support_vector(std::size_t i) const { return training->row(support_indices[i]); }
};

// Builds a model from a solved subproblem. `subset` maps the solution's
// positions to rows of *training.
SvmModel make_model(std::shared_ptr<const RowMatrix> training, std::span<const std::size_t> subset,
                    std::span<const int> labels, const SmoSolution& solution, const KernelSpec& kernel, double C);

// Recomputes the primal weights of a linear model from its support vectors.
void refresh_weights(SvmModel& model);

SvmModel smo_train(const RowMatrix& rows, std::span<const int> labels, double C, const KernelSpec& kernel,
                   const SmoOptions& options = {});

}  // namespace gazeclass
