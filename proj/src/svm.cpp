#include "gazeclass/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gazeclass {

double KernelSpec::operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == KernelKind::Linear) return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

void KernelSpec::validate() const {
    if (kind == KernelKind::Rbf && !(gamma > 0.0)) throw Error("kernel: RBF gamma must be positive");
}

RowMatrix gram_matrix(const RowMatrix& rows, const KernelSpec& kernel) {
    const std::size_t n = rows.rows();
    RowMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ri = rows.row(i);
        for (std::size_t j = i; j < n; ++j) {
            const double k = kernel(ri, rows.row(j));
            g(i, j) = k;
            g(j, i) = k;
        }
    }
    return g;
}

double dual_objective(const GramView& gram, std::span<const int> labels, std::span<const double> alpha) {
    const std::size_t n = gram.size();
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] == 0.0) continue;
        linear += alpha[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (alpha[j] == 0.0) continue;
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * gram(i, j);
        }
    }
    return linear - 0.5 * quad;
}

SmoSolution smo_solve(const GramView& gram, std::span<const int> labels, double C, const SmoOptions& options) {
    const std::size_t n = gram.size();
    if (labels.size() != n) throw Error("smo: label count does not match rows");
    if (!(C > 0.0)) throw Error("smo: C must be positive");
    const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), -1) != labels.end();
    if (!has_pos || !has_neg) throw Error("degenerate labels");

    constexpr double kTau = 1e-12;
    constexpr double kSnap = 1e-12;
    const std::size_t max_iter =
        options.max_iterations > 0 ? options.max_iterations : std::max<std::size_t>(10'000'000, 100 * n);
    const auto& index = gram.index();

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i];
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = gram(i, i);

    if (!options.initial_alpha.empty()) {
        if (options.initial_alpha.size() != n) throw Error("smo: initial alpha count does not match rows");
        double pos = 0.0, neg = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            alpha[t] = std::clamp(options.initial_alpha[t], 0.0, C);
            (y[t] > 0 ? pos : neg) += alpha[t];
        }
        // Shrink the heavier class onto the lighter one.
        const double scale_pos = pos > neg ? neg / pos : 1.0;
        const double scale_neg = neg > pos ? pos / neg : 1.0;
        for (std::size_t t = 0; t < n; ++t) alpha[t] *= y[t] > 0 ? scale_pos : scale_neg;
        for (std::size_t t = 0; t < n; ++t) {
            if (alpha[t] == 0.0) continue;
            const double* kt = gram.row_base(t);
            const double w = alpha[t] * y[t];
            for (std::size_t k = 0; k < n; ++k) grad[k] += y[k] * kt[index[k]] * w;
        }
    }

    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
        return -0.5 * f;
    };

    // Shrinking: bound variables that cannot join a violating pair leave
    // the active set. Their gradients are rebuilt before the final check.
    const bool shrinking = !options.observer;
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), 0);
    bool unshrunk = false;
    const std::size_t shrink_period = std::min<std::size_t>(n, 1000);
    std::size_t countdown = shrink_period;

    auto reconstruct_gradient = [&] {
        if (active.size() == n) return;
        std::vector<char> is_active(n, 0);
        for (std::size_t t : active) is_active[t] = 1;
        std::vector<std::size_t> inactive;
        for (std::size_t k = 0; k < n; ++k)
            if (!is_active[k]) inactive.push_back(k);
        for (std::size_t k : inactive) grad[k] = -1.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (alpha[t] == 0.0) continue;
            const double* kt = gram.row_base(t);
            const double w = alpha[t] * y[t];
            for (std::size_t k : inactive) grad[k] += y[k] * kt[index[k]] * w;
        }
        active.resize(n);
        std::iota(active.begin(), active.end(), 0);
    };

    auto extremes = [&] {
        double hi = -std::numeric_limits<double>::infinity(), lo = std::numeric_limits<double>::infinity();
        for (std::size_t t : active) {
            const double v = -y[t] * grad[t];
            if (in_up(t)) hi = std::max(hi, v);
            if (in_low(t)) lo = std::min(lo, v);
        }
        return std::pair{hi, lo};
    };

    auto shrink = [&] {
        auto [hi, lo] = extremes();
        if (!unshrunk && hi - lo <= 10.0 * options.tol) {
            unshrunk = true;
            reconstruct_gradient();
            std::tie(hi, lo) = extremes();
        }
        std::erase_if(active, [&](std::size_t t) {
            const double v = -y[t] * grad[t];
            const bool up = in_up(t), low = in_low(t);
            return (up && !low && v < lo) || (low && !up && v > hi);
        });
    };

    // Second-order working set selection: i maximizes the violation,
    // j maximizes the guaranteed objective gain given i.
    auto select_pair = [&](std::size_t& i, std::size_t& j, double& residual) {
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        i = n;
        j = n;
        for (std::size_t t : active) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v >= g_max) {
                g_max = v;
                i = t;
            }
            if (in_low(t) && v < g_min) g_min = v;
        }
        residual = g_max - g_min;
        if (i == n || residual < options.tol) return;
        const double* ki_sel = gram.row_base(i);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t : active) {
            if (!in_low(t)) continue;
            const double b = g_max + y[t] * grad[t];
            if (b <= 0.0) continue;
            double a = diag[i] + diag[t] - 2.0 * ki_sel[index[t]];
            if (a <= 0.0) a = kTau;
            const double gain = -(b * b) / a;
            if (gain <= best) {
                best = gain;
                j = t;
            }
        }
    };

    SmoSolution sol;
    std::size_t iter = 0;
    double residual = std::numeric_limits<double>::infinity();
    for (;;) {
        if (shrinking && --countdown == 0) {
            countdown = shrink_period;
            shrink();
        }
        std::size_t i = n, j = n;
        select_pair(i, j, residual);
        if (i == n || j == n || residual < options.tol) {
            if (active.size() == n) break;
            // Converged on the active set: recheck on the full problem.
            reconstruct_gradient();
            select_pair(i, j, residual);
            if (i == n || j == n || residual < options.tol) break;
            countdown = 1;
        }
        if (iter >= max_iter) {
            std::ostringstream msg;
            msg << "smo did not converge after " << iter << " iterations; KKT residual " << residual;
            throw Error(msg.str());
        }
        ++iter;

        const double* ki = gram.row_base(i);
        const double* kj = gram.row_base(j);
        const double kij = ki[index[j]];
        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = diag[i] + diag[j] - 2.0 * kij;
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = C - diff;
                }
            } else if (alpha[j] > C) {
                alpha[j] = C;
                alpha[i] = C + diff;
            }
        } else {
            double quad = diag[i] + diag[j] - 2.0 * kij;
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) {
                    alpha[i] = C;
                    alpha[j] = sum - C;
                }
                if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = sum - C;
                }
            } else {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = sum;
                }
                if (alpha[i] < 0) {
                    alpha[i] = 0;
                    alpha[j] = sum;
                }
            }
        }
        // Rounding in the clip arithmetic can leave a value a few ulps off a
        // bound, which would count it as a free vector for the bias.
        for (double* a : {&alpha[i], &alpha[j]}) {
            if (*a < kSnap * C) *a = 0.0;
            else if (*a > C - kSnap * C) *a = C;
        }

        // Q_ik = y_i y_k K_ik
        const double di = (alpha[i] - old_i) * y[i];
        const double dj = (alpha[j] - old_j) * y[j];
        for (std::size_t k : active) grad[k] += y[k] * (ki[index[k]] * di + kj[index[k]] * dj);

        if (options.observer) options.observer({iter, objective(), residual, alpha});
    }

    // Bias: average over free vectors, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_n = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= C) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++free_n;
        }
    }
    const double rho = free_n > 0 ? free_sum / static_cast<double>(free_n) : (ub + lb) / 2.0;

    sol.bias = -rho;
    sol.objective = objective();
    sol.kkt_residual = residual;
    sol.iterations = iter;
    sol.alpha = std::move(alpha);
    return sol;
}

double SvmModel::decision(std::span<const double> x) const {
    if (kernel.kind == KernelKind::Linear && !weights.empty()) {
        return std::inner_product(weights.begin(), weights.end(), x.begin(), 0.0) + bias;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < support_indices.size(); ++i) {
        sum += alphas[i] * labels[i] * kernel(support_vector(i), x);
    }
    return sum + bias;
}

void refresh_weights(SvmModel& model) {
    model.weights.clear();
    if (model.kernel.kind != KernelKind::Linear) return;
    model.weights.assign(model.training->cols(), 0.0);
    for (std::size_t i = 0; i < model.support_indices.size(); ++i) {
        const double c = model.alphas[i] * model.labels[i];
        const auto sv = model.support_vector(i);
        for (std::size_t f = 0; f < sv.size(); ++f) model.weights[f] += c * sv[f];
    }
}

SvmModel make_model(std::shared_ptr<const RowMatrix> training, std::span<const std::size_t> subset,
                    std::span<const int> labels, const SmoSolution& solution, const KernelSpec& kernel, double C) {
    SvmModel m;
    m.kernel = kernel;
    m.C = C;
    m.training = std::move(training);
    m.bias = solution.bias;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (solution.alpha[i] <= 0.0) continue;
        m.support_indices.push_back(subset[i]);
        m.alphas.push_back(solution.alpha[i]);
        m.labels.push_back(labels[i]);
    }
    refresh_weights(m);
    return m;
}

SvmModel smo_train(const RowMatrix& rows, std::span<const int> labels, double C, const KernelSpec& kernel,
                   const SmoOptions& options) {
    kernel.validate();
    for (double v : rows.data()) {
        if (!std::isfinite(v)) throw Error("smo: non-finite input value");
    }
    auto training = std::make_shared<const RowMatrix>(rows);
    const RowMatrix gram = gram_matrix(*training, kernel);
    std::vector<std::size_t> all(rows.rows());
    std::iota(all.begin(), all.end(), 0);
    const auto solution = smo_solve(GramView(gram, all), labels, C, options);
    return make_model(std::move(training), all, labels, solution, kernel, C);
}

}  // namespace gazeclass
