#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tabext/network.hpp"
#include "tabext/random.hpp"

namespace tabext::testing {

using Real = long double;

/// Step-by-step scalar forward pass, independent of the Eigen code path.
inline Real oracle_forward(const Mlp& m, const std::vector<double>& x)
{
    std::vector<Real> a(x.begin(), x.end());
    for (std::size_t layer = 0; layer < m.layers(); ++layer) {
        const auto& w = m.weights(layer);
        const auto& b = m.bias(layer);
        std::vector<Real> z(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            Real s = b(r);
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                s += static_cast<Real>(w(r, c)) * a[static_cast<std::size_t>(c)];
            }
            z[static_cast<std::size_t>(r)] = s;
        }
        if (layer + 1 < m.layers()) {
            for (auto& v : z) {
                v = v > 0 ? v : 0;
            }
            a = std::move(z);
        } else {
            const Real p = 1.0L / (1.0L + std::exp(-z[0]));
            return std::clamp(p, static_cast<Real>(kProbabilityEpsilon), 1.0L - static_cast<Real>(kProbabilityEpsilon));
        }
    }
    return 0.5L;
}

inline Real oracle_loss(const Mlp& m, const std::vector<std::vector<double>>& xs, const std::vector<int>& ys)
{
    Real sum = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Real p = oracle_forward(m, xs[i]);
        sum += ys[i] == 1 ? -std::log(p) : -std::log(1.0L - p);
    }
    return sum / static_cast<Real>(xs.size());
}

inline RowMatrix matrix_of(const std::vector<std::vector<double>>& xs)
{
    RowMatrix x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.front().size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs[i].size(); ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
        }
    }
    return x;
}

struct GradCheck {
    std::size_t compared = 0;
    std::size_t skipped = 0;
    double worst = 0.0;
};

/// Central differences (h = 1e-5) on every weight and bias against backward().
inline GradCheck finite_difference_check(Mlp model, const std::vector<std::vector<double>>& xs, const std::vector<int>& ys)
{
    constexpr double h = 1e-5;
    const auto grads = backward(model, matrix_of(xs), ys);
    GradCheck out;
    auto compare = [&](double analytic, double& param) {
        const double saved = param;
        param = saved + h;
        const Real up = oracle_loss(model, xs, ys);
        param = saved - h;
        const Real down = oracle_loss(model, xs, ys);
        param = saved;
        const double numeric = static_cast<double>((up - down) / (2.0L * h));
        if (std::abs(analytic) < 1e-8 && std::abs(numeric) < 1e-8) {
            ++out.skipped;
            return;
        }
        const double rel = std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric));
        out.worst = std::max(out.worst, rel);
        ++out.compared;
    };
    for (std::size_t layer = 0; layer < model.layers(); ++layer) {
        auto& w = model.weights(layer);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                compare(grads.weights[layer](r, c), w(r, c));
            }
        }
        auto& b = model.bias(layer);
        for (Eigen::Index r = 0; r < b.size(); ++r) {
            compare(grads.biases[layer](r), b(r));
        }
    }
    return out;
}

inline std::vector<std::vector<double>> random_inputs(Rng& rng, int n, int dim)
{
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(n));
    for (auto& x : xs) {
        for (int d = 0; d < dim; ++d) {
            x.push_back(rng.uniform(-1.0, 1.0));
        }
    }
    return xs;
}

inline std::vector<int> random_labels(Rng& rng, int n)
{
    std::vector<int> y;
    for (int i = 0; i < n; ++i) {
        y.push_back(rng.chance(0.5) ? 1 : 0);
    }
    return y;
}

/// Small random biases so that every unit of the stack sees gradient.
inline Mlp random_net(Rng& rng, const std::vector<int>& dims)
{
    auto m = Mlp::initialize(dims, rng.next());
    for (std::size_t layer = 0; layer < m.layers(); ++layer) {
        for (Eigen::Index r = 0; r < m.bias(layer).size(); ++r) {
            m.bias(layer)(r) = rng.uniform(0.0, 0.2);
        }
    }
    return m;
}


} // namespace tabext::testing
