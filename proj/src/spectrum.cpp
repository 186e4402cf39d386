#include "proxiphene/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

#include <fftw3.h>

namespace proxiphene {

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

double SpectrumGrid::total_power() const { return std::accumulate(power.begin(), power.end(), 0.0); }

SpectrumGrid power_spectrum(std::span<const double> sequence) {
    const std::size_t n = sequence.size();
    if (n < kMinSpectrumLength) {
        throw std::invalid_argument("power_spectrum: need at least " + std::to_string(kMinSpectrumLength) +
                                    " samples, got " + std::to_string(n));
    }
    const std::size_t bins = n / 2 + 1;
    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(n), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(bins), &fftw_free);
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    }
    if (!plan) throw std::runtime_error("power_spectrum: FFTW planning failed");
    std::copy(sequence.begin(), sequence.end(), in.get());
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }

    SpectrumGrid grid;
    grid.n = n;
    grid.frequencies.resize(bins);
    grid.power.resize(bins);
    const double norm = static_cast<double>(n) * static_cast<double>(n);
    for (std::size_t k = 0; k < bins; ++k) {
        const double re = out.get()[k][0];
        const double im = out.get()[k][1];
        double p = (re * re + im * im) / norm;
        if (k > 0 && 2 * k < n) p *= 2.0;
        grid.power[k] = p;
        grid.frequencies[k] = kSamplesPerDay * static_cast<double>(k) / static_cast<double>(n);
    }
    return grid;
}

int BandDefinition::band_of(std::size_t bin, double frequency) const {
    if (bin == 0) return dc_in_lf ? static_cast<int>(Band::lf) : -1;
    if (frequency < lf_mf_edge) return static_cast<int>(Band::lf);
    if (frequency <= mf_hf_edge) return static_cast<int>(Band::mf);
    return static_cast<int>(Band::hf);
}

BandFeatures band_features(const SpectrumGrid& spectrum, const BandDefinition& bands) {
    BandFeatures out;
    for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
        const int b = bands.band_of(k, spectrum.frequencies[k]);
        if (b >= 0) out.sum[b] += spectrum.power[k];
    }
    const double total = spectrum.total_power();
    if (total > 0.0) {
        for (int b = 0; b < 3; ++b) out.pct[b] = out.sum[b] / total;
    } else {
        out.zero_power = true;
    }
    return out;
}

BandEntropy band_spectral_entropy(const SpectrumGrid& spectrum, const BandDefinition& bands) {
    BandEntropy out;
    std::array<double, 3> totals{};
    for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
        const int b = bands.band_of(k, spectrum.frequencies[k]);
        if (b < 0) continue;
        totals[b] += spectrum.power[k];
        out.bins[b] += 1;
    }
    std::array<double, 3> h{};
    for (std::size_t k = 0; k < spectrum.power.size(); ++k) {
        const int b = bands.band_of(k, spectrum.frequencies[k]);
        if (b < 0 || !(totals[b] > 0.0)) continue;
        const double p = spectrum.power[k] / totals[b];
        if (p > 0.0) h[b] -= p * std::log(p);
    }
    for (int b = 0; b < 3; ++b) {
        if (out.bins[b] < 2 || !(totals[b] > 0.0)) {
            out.se[b] = 0.0;
            out.degenerate[b] = out.bins[b] == 0 || !(totals[b] > 0.0);
            continue;
        }
        out.se[b] = std::clamp(h[b] / std::log(static_cast<double>(out.bins[b])), 0.0, 1.0);
    }
    return out;
}

}  // namespace proxiphene
