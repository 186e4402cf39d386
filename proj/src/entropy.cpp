#include "proxiphene/entropy.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace proxiphene {

std::vector<double> coarse_grain(std::span<const double> sequence, int scale) {
    if (scale < 1) throw std::invalid_argument("coarse_grain: scale must be >= 1");
    if (static_cast<std::size_t>(scale) > sequence.size()) {
        throw std::invalid_argument("coarse_grain: scale " + std::to_string(scale) + " exceeds sequence length " +
                                    std::to_string(sequence.size()));
    }
    const std::size_t width = static_cast<std::size_t>(scale);
    const std::size_t blocks = sequence.size() / width;
    std::vector<double> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        double sum = 0.0;
        for (std::size_t k = 0; k < width; ++k) sum += sequence[b * width + k];
        out[b] = sum / static_cast<double>(width);
    }
    return out;
}

double sample_entropy_cap(std::size_t n, int m) {
    const double templates = static_cast<double>(n) - m;
    return -std::log(2.0 / (templates * (templates - 1.0)));
}

SampleEntropy sample_entropy(std::span<const double> x, int m, double r) {
    if (m < 1) throw std::invalid_argument("sample_entropy: m must be >= 1");
    if (x.size() <= static_cast<std::size_t>(m) + 1) {
        throw std::invalid_argument("sample_entropy: sequence length " + std::to_string(x.size()) +
                                    " must exceed m + 1");
    }
    if (!(r > 0.0)) throw std::invalid_argument("sample_entropy: tolerance must be positive");

    const std::size_t templates = x.size() - static_cast<std::size_t>(m);
    const std::size_t len = static_cast<std::size_t>(m);
    std::uint64_t b = 0;
    std::uint64_t a = 0;
    for (std::size_t i = 0; i + 1 < templates; ++i) {
        for (std::size_t j = i + 1; j < templates; ++j) {
            std::size_t k = 0;
            while (k < len && std::abs(x[i + k] - x[j + k]) <= r) ++k;
            if (k < len) continue;
            ++b;
            if (std::abs(x[i + len] - x[j + len]) <= r) ++a;
        }
    }

    SampleEntropy out;
    out.template_matches = b;
    out.extended_matches = a;
    if (a == 0 || b == 0) {
        out.capped = true;
        out.value = sample_entropy_cap(x.size(), m);
    } else {
        out.value = -std::log(static_cast<double>(a) / static_cast<double>(b));
    }
    return out;
}

double mse_tolerance(std::span<const double> sequence, const MseParams& params) {
    const double n = static_cast<double>(sequence.size());
    double sd = 0.0;
    if (sequence.size() > 1) {
        const double mean = std::accumulate(sequence.begin(), sequence.end(), 0.0) / n;
        double ss = 0.0;
        for (const double v : sequence) ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / (n - 1.0));
    }
    const double r = params.r_factor * sd;
    return r > 0.0 ? r : kZeroToleranceFallback;
}

MseProfile mse_profile(std::span<const double> sequence, const MseParams& params) {
    if (params.max_scale < 1 || params.m < 1 || !(params.r_factor > 0.0)) {
        throw std::invalid_argument("mse_profile: invalid parameters");
    }
    if (sequence.size() / static_cast<std::size_t>(params.max_scale) <= static_cast<std::size_t>(params.m) + 1) {
        throw std::invalid_argument("mse_profile: sequence of length " + std::to_string(sequence.size()) +
                                    " too short for scale " + std::to_string(params.max_scale));
    }
    MseProfile profile;
    profile.tolerance = mse_tolerance(sequence, params);
    profile.values.resize(params.max_scale);
    profile.capped.resize(params.max_scale);
    for (int scale = 1; scale <= params.max_scale; ++scale) {
        const auto grained = coarse_grain(sequence, scale);
        const auto se = sample_entropy(grained, params.m, profile.tolerance);
        profile.values[scale - 1] = se.value;
        profile.capped[scale - 1] = se.capped;
    }
    return profile;
}

}  // namespace proxiphene
