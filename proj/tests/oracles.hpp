#pragma once

// Reference implementations used to check the library. They share no code
// with it and favour directness over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

// Solves  min 1/2 a'Qa - 1'a  s.t. 0 <= a <= C, y'a = 0  with Q_ij = y_i y_j K_ij
// by accelerated projected gradient. Projection onto the feasible set is a
// bisection on the multiplier of the equality constraint.
struct QpSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    double dual_objective = 0.0;  // sum a - 1/2 a'Qa (maximization form)
};

inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double C) {
    auto clipped = [&](double lambda, std::vector<double>& out) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = std::clamp(v[i] - lambda * y[i], 0.0, C);
            s += y[i] * out[i];
        }
        return s;
    };
    std::vector<double> out(v.size());
    double lo = -1.0, hi = 1.0;
    while (clipped(lo, out) < 0.0) lo *= 2.0;
    while (clipped(hi, out) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (clipped(mid, out) > 0.0) lo = mid;
        else hi = mid;
    }
    clipped(0.5 * (lo + hi), out);
    return out;
}

inline QpSolution solve_svm_dual(const std::vector<std::vector<double>>& K, const std::vector<int>& y, double C,
                                 int iterations = 50000) {
    const std::size_t n = y.size();
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) Q[i][j] = y[i] * y[j] * K[i][j];
        trace += Q[i][i];
    }
    // Power iteration for the Lipschitz constant.
    std::vector<double> v(n, 1.0), w(n);
    double L = trace;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < n; ++i) w[i] = std::inner_product(Q[i].begin(), Q[i].end(), v.begin(), 0.0);
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (norm == 0.0) break;
        L = norm / std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    L = std::max(L * 1.01, 1e-12);

    auto objective = [&](const std::vector<double>& a) {
        double quad = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) quad += a[i] * Q[i][j] * a[j];
        return std::accumulate(a.begin(), a.end(), 0.0) - 0.5 * quad;
    };

    std::vector<double> a(n, 0.0), z = a, prev = a, grad(n), step(n);
    double t = 1.0, best = objective(a);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i)
            grad[i] = std::inner_product(Q[i].begin(), Q[i].end(), z.begin(), 0.0) - 1.0;
        for (std::size_t i = 0; i < n; ++i) step[i] = z[i] - grad[i] / L;
        prev = a;
        a = project(step, y, C);
        const double value = objective(a);
        if (value < best - 1e-15) {  // restart momentum when the objective drops
            t = 1.0;
            z = a;
            best = objective(a);
            continue;
        }
        best = value;
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) moved = std::max(moved, std::abs(a[i] - prev[i]));
        if (moved < 1e-14 * std::max(1.0, C)) break;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + (t - 1.0) / t_next * (a[i] - prev[i]);
        t = t_next;
    }

    QpSolution sol;
    sol.alpha = a;
    sol.dual_objective = objective(a);
    // Bias from free vectors, else the midpoint of the feasible interval.
    const double eps = 1e-7 * std::max(1.0, C);
    double sum = 0.0, lower = -1e300, upper = 1e300;
    std::size_t free = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = 0.0;
        for (std::size_t j = 0; j < n; ++j) f += a[j] * y[j] * K[j][i];
        const double r = y[i] - f;
        if (a[i] > eps && a[i] < C - eps) {
            sum += r;
            ++free;
        } else if ((a[i] <= eps) == (y[i] > 0)) {
            lower = std::max(lower, r);  // b >= r
        } else {
            upper = std::min(upper, r);
        }
    }
    sol.bias = free ? sum / static_cast<double>(free) : 0.5 * (lower + upper);
    return sol;
}

// Two-sided Mann-Whitney p-value by enumerating every assignment of the
// pooled values to the first group. U counts pairs with ties as 1/2.
inline double u_of(const std::vector<double>& xs, const std::vector<double>& ys) {
    double u = 0.0;
    for (double x : xs)
        for (double y : ys) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    return u;
}

inline double permutation_p(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> pooled(xs);
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    const std::size_t n = pooled.size(), n1 = xs.size();
    const double centre = static_cast<double>(xs.size() * ys.size()) / 2.0;
    const double observed = std::abs(u_of(xs, ys) - centre);
    std::size_t extreme = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
        ++total;
        if (std::abs(u_of(a, b) - centre) >= observed - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

// Hyndman-Fan type 7 quantile via selection, one call per probability.
inline double quantile7(std::vector<double> v, double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p + 1.0;
    const auto below = static_cast<std::size_t>(std::floor(h));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(below - 1), v.end());
    const double lo = v[below - 1];
    if (below >= v.size()) return lo;
    const double hi = *std::min_element(v.begin() + static_cast<long>(below), v.end());
    return lo + (h - static_cast<double>(below)) * (hi - lo);
}

}  // namespace oracle
