#pragma once

// Straightforward reference implementations used to cross-check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Counts {
    std::uint64_t a = 0;
    std::uint64_t b = 0;
};

inline double chebyshev(const std::vector<double>& x, std::size_t i, std::size_t j, std::size_t len) {
    double d = 0.0;
    for (std::size_t k = 0; k < len; ++k) d = std::max(d, std::fabs(x[i + k] - x[j + k]));
    return d;
}

// Both template lengths use the first N - m start positions.
inline Counts sampen_counts(const std::vector<double>& x, int m, double r) {
    const std::size_t n = x.size();
    const std::size_t starts = n - static_cast<std::size_t>(m);
    Counts c;
    for (std::size_t i = 0; i < starts; ++i) {
        for (std::size_t j = 0; j < starts; ++j) {
            if (j <= i) continue;
            if (chebyshev(x, i, j, static_cast<std::size_t>(m)) <= r) ++c.b;
            if (chebyshev(x, i, j, static_cast<std::size_t>(m) + 1) <= r) ++c.a;
        }
    }
    return c;
}

inline double sampen(const std::vector<double>& x, int m, double r) {
    const auto c = sampen_counts(x, m, r);
    if (c.a == 0 || c.b == 0) {
        const double nm = static_cast<double>(x.size()) - m;
        return -std::log(2.0 / (nm * (nm - 1.0)));
    }
    return std::log(static_cast<double>(c.b)) - std::log(static_cast<double>(c.a));
}

inline std::vector<double> coarse(const std::vector<double>& x, int scale) {
    std::vector<double> out;
    for (std::size_t start = 0; start + static_cast<std::size_t>(scale) <= x.size(); start += static_cast<std::size_t>(scale)) {
        double s = 0.0;
        for (int k = 0; k < scale; ++k) s += x[start + static_cast<std::size_t>(k)];
        out.push_back(s / scale);
    }
    return out;
}

inline double sd(const std::vector<double>& x) {
    if (x.size() < 2) return 0.0;
    long double mean = 0.0L;
    for (double v : x) mean += v;
    mean /= static_cast<long double>(x.size());
    long double ss = 0.0L;
    for (double v : x) ss += (v - mean) * (v - mean);
    return static_cast<double>(std::sqrt(ss / static_cast<long double>(x.size() - 1)));
}

inline double mean(const std::vector<double>& x) {
    long double s = 0.0L;
    for (double v : x) s += v;
    return static_cast<double>(s / static_cast<long double>(x.size()));
}

inline std::vector<double> mse(const std::vector<double>& x, int m, double r_factor, int max_scale) {
    double r = r_factor * sd(x);
    if (r <= 0.0) r = 1e-9;
    std::vector<double> out;
    for (int s = 1; s <= max_scale; ++s) out.push_back(sampen(coarse(x, s), m, r));
    return out;
}

// One-sided power by direct summation.
inline std::vector<double> dft_power(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> power;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        long double re = 0.0L, im = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double angle = 2.0L * std::numbers::pi_v<long double> * static_cast<long double>((k * t) % n) / n;
            re += x[t] * std::cos(angle);
            im -= x[t] * std::sin(angle);
        }
        long double p = (re * re + im * im) / (static_cast<long double>(n) * n);
        if (k > 0 && 2 * k < n) p *= 2.0L;
        power.push_back(static_cast<double>(p));
    }
    return power;
}

// LF_sum, MF_sum, HF_sum, LF_pct, MF_pct, HF_pct, LF_se, MF_se, HF_se with DC in LF.
inline std::array<double, 9> band_features(const std::vector<double>& x, double lf_mf = 0.75, double mf_hf = 1.25) {
    const auto power = dft_power(x);
    const double n = static_cast<double>(x.size());
    std::array<std::vector<double>, 3> bins;
    double total = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
        const double f = static_cast<double>(k) * 24.0 / n;
        total += power[k];
        if (f < lf_mf) {
            bins[0].push_back(power[k]);
        } else if (f <= mf_hf) {
            bins[1].push_back(power[k]);
        } else {
            bins[2].push_back(power[k]);
        }
    }
    std::array<double, 9> out{};
    for (int b = 0; b < 3; ++b) {
        double s = 0.0;
        for (double p : bins[b]) s += p;
        out[b] = s;
        out[3 + b] = total > 0.0 ? s / total : 0.0;
        double h = 0.0;
        if (s > 0.0 && bins[b].size() > 1) {
            for (double p : bins[b]) {
                if (p > 0.0) h -= (p / s) * std::log(p / s);
            }
            h /= std::log(static_cast<double>(bins[b].size()));
        }
        out[6 + b] = std::clamp(h, 0.0, 1.0);
    }
    return out;
}

// The 16 statistical features by explicit loops over days.
inline std::array<double, 16> statistical(const std::vector<double>& seq) {
    const std::size_t days = seq.size() / 24;
    std::array<std::vector<double>, 4> daily;  // max, min, mean, std
    for (std::size_t d = 0; d < days; ++d) {
        std::vector<double> h(seq.begin() + static_cast<long>(24 * d), seq.begin() + static_cast<long>(24 * d + 24));
        daily[0].push_back(*std::max_element(h.begin(), h.end()));
        daily[1].push_back(*std::min_element(h.begin(), h.end()));
        daily[2].push_back(mean(h));
        daily[3].push_back(sd(h));
    }
    std::array<double, 16> out{};
    for (int x = 0; x < 4; ++x) {
        const auto& v = daily[x];
        out[4 * x + 0] = *std::max_element(v.begin(), v.end());
        out[4 * x + 1] = *std::min_element(v.begin(), v.end());
        out[4 * x + 2] = mean(v);
        out[4 * x + 3] = sd(v);
    }
    return out;
}

// Benjamini-Hochberg by definition: adj_i = min over rank_j >= rank_i of p_j (m / rank_j), capped at 1.
inline std::vector<double> bh(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t r = 1;
        for (std::size_t j = 0; j < m; ++j) {
            if (p[j] < p[i] || (p[j] == p[i] && j < i)) ++r;
        }
        rank[i] = static_cast<double>(r);
    }
    std::vector<double> adj(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (rank[j] >= rank[i]) best = std::min(best, p[j] * (static_cast<double>(m) / rank[j]));
        }
        adj[i] = std::min(1.0, best);
    }
    return adj;
}

inline Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) { return x.householderQr().solve(y); }

// Asymptotic Kolmogorov p-value with the small-sample adjustment of the statistic.
inline double ks_pvalue(std::vector<double> u_sorted_cdf) {
    std::sort(u_sorted_cdf.begin(), u_sorted_cdf.end());
    const double n = static_cast<double>(u_sorted_cdf.size());
    double d = 0.0;
    for (std::size_t i = 0; i < u_sorted_cdf.size(); ++i) {
        const double f = u_sorted_cdf[i];
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double q = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        q += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(q, 0.0, 1.0);
}

}  // namespace oracle
