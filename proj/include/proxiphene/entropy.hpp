#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace proxiphene {

/// Multiscale entropy settings. The tolerance is r_factor times the sample standard
/// deviation of the scale-1 sequence and stays fixed across scales.
struct MseParams {
    int m = 2;
    double r_factor = 0.15;
    int max_scale = 24;
};

inline constexpr double kZeroToleranceFallback = 1e-9;

/// Non-overlapping block means of length `scale`; the trailing remainder is dropped.
/// Throws std::invalid_argument when scale < 1 or scale > sequence length.
std::vector<double> coarse_grain(std::span<const double> sequence, int scale);

struct SampleEntropy {
    double value = 0.0;
    std::uint64_t template_matches = 0;   // B: pairs matching for m points
    std::uint64_t extended_matches = 0;   // A: pairs matching for m + 1 points
    bool capped = false;                  // A or B was zero; value is the cap
};

/// Largest finite sample entropy for a length-n series: ln of the number of template pairs.
double sample_entropy_cap(std::size_t n, int m);

/// -ln(A/B) over the n - m templates, Chebyshev distance, self-matches excluded.
/// Throws std::invalid_argument when n <= m + 1 or r <= 0.
SampleEntropy sample_entropy(std::span<const double> sequence, int m, double r);

struct MseProfile {
    std::vector<double> values;      // index s-1 holds MSE_s
    std::vector<bool> capped;
    double tolerance = 0.0;
};

/// Tolerance used by mse_profile for this sequence.
double mse_tolerance(std::span<const double> sequence, const MseParams& params);

MseProfile mse_profile(std::span<const double> sequence, const MseParams& params = {});

}  // namespace proxiphene
