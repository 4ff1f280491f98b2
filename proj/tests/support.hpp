// Test-only oracles. Nothing here calls into the tape's backward pass or
// the library's attention code.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gaq/tape.hpp"
#include "gaq/tensor.hpp"

namespace gaq::test {

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& gen,
                             double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Tensor2 t(rows, cols);
    for (double& v : t.values()) {
        v = dist(gen);
    }
    return t;
}

// Central differences at h = 1e-5 carry roughly 1e-10 · |loss| of roundoff,
// so entries smaller than this times max(1, |loss|) are compared on an
// absolute scale.
inline constexpr double kGradFloor = 1e-5;

// One-sided slopes that disagree by more than this (relative) mean the ±h
// window may straddle a ReLU or LeakyReLU kink. A kink can shift the central
// difference by up to half that gap, so the bound sits at twice the 1e-4
// acceptance tolerance. Such coordinates are counted and left out of max_rel.
inline constexpr double kKinkTolerance = 2e-4;

struct GradCheck {
    double max_rel = 0.0;
    std::string worst;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // coordinates skipped as possible kink crossings
};

/// Compares analytic gradients with central differences of step h.
/// `build` records a fresh forward pass ending in a 1x1 loss.
inline GradCheck check_gradients(const std::vector<std::pair<std::string, Param*>>& params,
                                 const std::function<Var(Tape&)>& build, double h = 1e-5) {
    for (auto& [_, p] : params) {
        p->zero_grad();
    }
    {
        Tape tape;
        tape.backward(build(tape));
    }
    auto loss_at = [&] {
        Tape tape;
        return tape.value(build(tape))[0];
    };
    const double base = loss_at();
    const double floor = kGradFloor * std::max(1.0, std::abs(base));
    GradCheck result;
    for (auto& [name, p] : params) {
        for (std::size_t k = 0; k < p->value.size(); ++k) {
            const double saved = p->value[k];
            p->value[k] = saved + h;
            const double up = loss_at();
            p->value[k] = saved - h;
            const double down = loss_at();
            p->value[k] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double analytic = p->grad[k];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
            const double rel = std::abs(numeric - analytic) / scale;
            const double forward = (up - base) / h;
            const double backward = (base - down) / h;
            const double side_scale = std::max({std::abs(forward), std::abs(backward), floor});
            if (std::abs(forward - backward) / side_scale > kKinkTolerance) {
                ++result.kinks;
                continue;
            }
            ++result.checked;
            if (rel > result.max_rel) {
                result.max_rel = rel;
                result.worst = name + "[" + std::to_string(k) + "]";
            }
        }
    }
    return result;
}

/// Dense single-head attention on an explicit adjacency list, written from
/// the textbook formula: e_ij = LeakyReLU(a·[W h_i ‖ W h_j]), α = softmax
/// over j in the closed neighbourhood.
inline std::vector<std::vector<double>> brute_alpha(const Tensor2& h, const Tensor2& w,
                                                    const Tensor2& a,
                                                    const std::vector<std::vector<int>>& closed) {
    const std::size_t n = h.rows();
    const std::size_t d = w.rows();
    std::vector<std::vector<double>> z(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < h.cols(); ++c) {
                z[i][r] += w(r, c) * h(i, c);
            }
        }
    }
    std::vector<std::vector<double>> alpha(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> e;
        for (int j : closed[i]) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                s += a[r] * z[i][r] + a[d + r] * z[static_cast<std::size_t>(j)][r];
            }
            e.push_back(s >= 0.0 ? s : 0.2 * s);
        }
        double denom = 0.0;
        for (double v : e) {
            denom += std::exp(v);
        }
        for (double v : e) {
            alpha[i].push_back(std::exp(v) / denom);
        }
    }
    return alpha;
}

/// Summed multi-head output Σ_m Σ_j α^m_ij W^m h_j, optionally passed
/// through ELU.
inline Tensor2 brute_layer(const Tensor2& h, const std::vector<std::pair<Tensor2, Tensor2>>& heads,
                           const std::vector<std::vector<int>>& closed, bool elu) {
    const std::size_t n = h.rows();
    const std::size_t d = heads.front().first.rows();
    Tensor2 out(n, d);
    for (const auto& [w, a] : heads) {
        const auto alpha = brute_alpha(h, w, a, closed);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < closed[i].size(); ++k) {
                const auto j = static_cast<std::size_t>(closed[i][k]);
                for (std::size_t r = 0; r < d; ++r) {
                    double wh = 0.0;
                    for (std::size_t c = 0; c < h.cols(); ++c) {
                        wh += w(r, c) * h(j, c);
                    }
                    out(i, r) += alpha[i][k] * wh;
                }
            }
        }
    }
    if (elu) {
        for (double& v : out.values()) {
            v = v > 0.0 ? v : std::expm1(v);
        }
    }
    return out;
}

}  // namespace gaq::test
