#include "oracles.hpp"

#include "proxiphene/entropy.hpp"
#include "proxiphene/features.hpp"
#include "proxiphene/random.hpp"
#include "proxiphene/spectrum.hpp"
#include "proxiphene/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace proxiphene;

namespace {

std::vector<double> uniform_sequence(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

std::vector<double> sinusoid(std::size_t n, double cycles_per_day, double amplitude, double offset = 0.0) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = offset + amplitude * std::sin(2.0 * std::numbers::pi * cycles_per_day * static_cast<double>(t) / 24.0);
    }
    return x;
}

NbdcInterval interval_of(const std::vector<double>& seq) {
    return make_interval("P", {"P", parse_date("2019-06-15"), 10, 0}, seq);
}

}  // namespace

TEST_CASE("feature names follow the fixed 49-column order") {
    const auto& names = feature_names();
    CHECK(names.size() == 49);
    CHECK(names[0] == "Max_Max");
    CHECK(names[1] == "Min_Max");
    CHECK(names[2] == "Mean_Max");
    CHECK(names[3] == "Std_Max");
    CHECK(names[4] == "Max_Min");
    CHECK(names[15] == "Std_Std");
    CHECK(names[16] == "MSE_1");
    CHECK(names[39] == "MSE_24");
    CHECK(names[40] == "LF_sum");
    CHECK(names[48] == "HF_se");
    CHECK(feature_index("Mean_Max") == 2u);
    CHECK_FALSE(feature_index("nope").has_value());
}

TEST_CASE("daily statistics") {
    const std::array<double, 24> threes{3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3};
    const auto c = daily_stats(threes);
    CHECK(c.max == 3);
    CHECK(c.min == 3);
    CHECK(c.mean == 3);
    CHECK(c.std == 0);
    std::array<double, 24> ramp{};
    std::iota(ramp.begin(), ramp.end(), 0.0);
    const auto r = daily_stats(ramp);
    CHECK(r.max == 23);
    CHECK(r.min == 0);
    CHECK(r.mean == doctest::Approx(11.5));
    CHECK(r.std == doctest::Approx(std::sqrt(50.0)));
    const auto z = daily_stats(std::array<double, 24>{});
    CHECK(z.max == 0);
    CHECK(z.std == 0);
}

TEST_CASE("second-order features over two days of maxima 10 and 20") {
    const std::vector<DailyStats> days = {{10, 0, 5, 1}, {20, 0, 5, 1}};
    const auto f = second_order_features(days);
    CHECK(f[*feature_index("Mean_Max")] == doctest::Approx(15));
    CHECK(f[*feature_index("Max_Max")] == doctest::Approx(20));
    CHECK(f[*feature_index("Min_Max")] == doctest::Approx(10));
    CHECK(f[*feature_index("Std_Max")] == doctest::Approx(10 / std::sqrt(2.0)));
}

TEST_CASE("identical days give degenerate second-order features") {
    std::vector<double> seq;
    for (int d = 0; d < 14; ++d) {
        for (int h = 0; h < 24; ++h) seq.push_back(h % 6);
    }
    const auto f = second_order_features(interval_of(seq));
    for (int x = 0; x < 4; ++x) {
        CHECK(f[4 * x + 3] == 0.0);
        CHECK(f[4 * x + 0] == f[4 * x + 1]);
        CHECK(f[4 * x + 0] == doctest::Approx(f[4 * x + 2]));
    }
}

TEST_CASE("statistical features: oracle, ordering, shift equivariance, day permutation") {
    Rng rng(5);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t days = 10 + static_cast<std::size_t>(trial % 5);
        auto seq = uniform_sequence(24 * days, 100 + trial);
        for (auto& v : seq) v = std::round(v * 30);
        const auto f = second_order_features(interval_of(seq));
        const auto o = oracle::statistical(seq);
        for (std::size_t k = 0; k < 16; ++k) CHECK(f[k] == doctest::Approx(o[k]).epsilon(1e-12));
        for (int x = 0; x < 4; ++x) {
            CHECK(f[4 * x + 1] <= f[4 * x + 2] + 1e-12);
            CHECK(f[4 * x + 2] <= f[4 * x + 0] + 1e-12);
            CHECK(f[4 * x + 3] >= 0.0);
        }

        const double c = shift(rng);
        auto shifted = seq;
        for (auto& v : shifted) v += c;
        const auto g = second_order_features(interval_of(shifted));
        for (std::size_t k = 0; k < 16; ++k) {
            const bool std_rooted = k % 4 == 3 || k >= 12;
            const double expected = std_rooted ? f[k] : f[k] + c;
            CHECK(g[k] == doctest::Approx(expected).epsilon(1e-9).scale(std::max(1.0, std::fabs(c))));
        }

        std::vector<std::size_t> order(days);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> permuted;
        for (const auto d : order) permuted.insert(permuted.end(), seq.begin() + 24 * d, seq.begin() + 24 * d + 24);
        const auto h = second_order_features(interval_of(permuted));
        for (std::size_t k = 0; k < 16; ++k) CHECK(h[k] == doctest::Approx(f[k]).epsilon(1e-12));
    }
}

TEST_CASE("coarse graining") {
    const std::vector<double> x = {1, 2, 3, 4, 5, 6};
    CHECK(coarse_grain(x, 1) == x);
    CHECK(coarse_grain(x, 2) == std::vector<double>{1.5, 3.5, 5.5});
    CHECK(coarse_grain(uniform_sequence(336, 1), 24).size() == 14);
    CHECK_THROWS(coarse_grain(x, 7));
    const auto y = uniform_sequence(250, 3);
    const auto g = coarse_grain(y, 7);
    const double prefix = std::accumulate(y.begin(), y.begin() + 7 * 35, 0.0) / (7 * 35);
    CHECK(std::accumulate(g.begin(), g.end(), 0.0) / g.size() == doctest::Approx(prefix).epsilon(1e-12));
}

TEST_CASE("sample entropy matches brute-force counting") {
    const auto noise = uniform_sequence(336, 17);
    const double r = 0.15 * oracle::sd(noise);
    const auto se = sample_entropy(noise, 2, r);
    const auto counts = oracle::sampen_counts(noise, 2, r);
    CHECK(se.template_matches == counts.b);
    CHECK(se.extended_matches == counts.a);
    CHECK(se.value == doctest::Approx(oracle::sampen(noise, 2, r)).epsilon(1e-12));

    std::vector<double> alternating(336);
    for (std::size_t i = 0; i < alternating.size(); ++i) alternating[i] = static_cast<double>(i % 2);
    const double ra = 0.15 * oracle::sd(alternating);
    const auto sa = sample_entropy(alternating, 2, ra);
    const auto ca = oracle::sampen_counts(alternating, 2, ra);
    CHECK(sa.template_matches == ca.b);
    CHECK(sa.extended_matches == ca.a);
    CHECK(sa.value == oracle::sampen(alternating, 2, ra));
}

TEST_CASE("sample entropy of a constant sequence is zero") {
    const std::vector<double> c(300, 4.0);
    const auto profile = mse_profile(c);
    CHECK(profile.tolerance == kZeroToleranceFallback);
    for (const double v : profile.values) CHECK(v == 0.0);
}

TEST_CASE("sample entropy is invariant to adding a constant") {
    for (int trial = 0; trial < 10; ++trial) {
        auto x = uniform_sequence(260, 40 + trial);
        for (auto& v : x) v = std::round(v * 16);
        auto y = x;
        for (auto& v : y) v += 37.0;
        const auto a = sample_entropy(x, 2, 1.5);
        const auto b = sample_entropy(y, 2, 1.5);
        CHECK(a.template_matches == b.template_matches);
        CHECK(a.extended_matches == b.extended_matches);
        CHECK(a.value == b.value);
    }
}

TEST_CASE("no-match input returns the cap") {
    std::vector<double> x(40);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i * i);
    const auto se = sample_entropy(x, 2, 0.5);
    CHECK(se.capped);
    CHECK(se.value == doctest::Approx(-std::log(2.0 / (38.0 * 37.0))));
    CHECK_THROWS(sample_entropy(std::vector<double>{1, 2, 3}, 2, 0.1));
}

TEST_CASE("MSE profile of a 24-hour sinusoid matches the oracle at every scale") {
    const auto x = sinusoid(336, 1.0, 5.0, 10.0);
    const auto profile = mse_profile(x);
    const auto expected = oracle::mse(x, 2, 0.15, 24);
    REQUIRE(profile.values.size() == 24);
    for (std::size_t s = 0; s < 24; ++s) CHECK(profile.values[s] == doctest::Approx(expected[s]).epsilon(1e-12));
    CHECK(profile.values[0] < 0.5);
}

TEST_CASE("white-noise MSE is non-increasing in scale within Monte-Carlo error") {
    constexpr int kSeeds = 50;
    std::vector<std::vector<double>> profiles;
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(1000 + seed);
        std::normal_distribution<double> n;
        std::vector<double> x(336);
        for (auto& v : x) v = n(rng);
        profiles.push_back(mse_profile(x).values);
    }
    for (std::size_t s = 1; s < 24; ++s) {
        std::vector<double> diff;
        for (const auto& p : profiles) diff.push_back(p[s] - p[s - 1]);
        const double se = oracle::sd(diff) / std::sqrt(double(kSeeds));
        CAPTURE(s);
        CHECK(oracle::mean(diff) <= 3.0 * se);
    }
    double first = 0.0, twelfth = 0.0;
    for (const auto& p : profiles) {
        first += p[0];
        twelfth += p[11];
    }
    CHECK(twelfth < first);
}

TEST_CASE("regular traces have lower short-scale MSE than chaotic traces") {
    const auto regular = sinusoid(336, 1.0, 8.0, 12.0);
    auto chaotic = sinusoid(336, 1.0, 1.0, 12.0);
    Rng rng(3);
    std::normal_distribution<double> n(0.0, 4.0);
    auto noisy_regular = regular;
    for (auto& v : noisy_regular) v += 0.1 * n(rng);
    for (auto& v : chaotic) v += n(rng);
    const auto a = mse_profile(noisy_regular);
    const auto b = mse_profile(chaotic);
    for (std::size_t s = 0; s < 3; ++s) CHECK(a.values[s] < b.values[s]);
}

TEST_CASE("power spectrum identities") {
    const std::vector<double> constant(336, 3.0);
    const auto c = power_spectrum(constant);
    CHECK(c.power[0] == doctest::Approx(9.0));
    for (std::size_t k = 1; k < c.power.size(); ++k) CHECK(std::fabs(c.power[k]) < 1e-12);

    const auto s = power_spectrum(sinusoid(336, 1.0, 2.0));
    CHECK(s.frequencies[14] == doctest::Approx(1.0));
    CHECK(s.power[14] == doctest::Approx(2.0));
    for (std::size_t k = 0; k < s.power.size(); ++k) {
        if (k != 14) CHECK(s.power[k] <= 1e-12);
    }
    CHECK(s.frequencies.back() == doctest::Approx(12.0));
    CHECK_THROWS(power_spectrum(std::vector<double>(100, 1.0)));

    for (int trial = 0; trial < 10; ++trial) {
        const auto x = uniform_sequence(240 + 8 * trial + (trial % 2), 60 + trial);
        const auto grid = power_spectrum(x);
        double ms = 0.0;
        for (const double v : x) ms += v * v;
        ms /= static_cast<double>(x.size());
        CHECK(grid.total_power() == doctest::Approx(ms).epsilon(1e-9));
        const auto direct = oracle::dft_power(x);
        REQUIRE(direct.size() == grid.power.size());
        for (std::size_t k = 0; k < direct.size(); ++k) {
            CHECK(grid.power[k] == doctest::Approx(direct[k]).epsilon(1e-9).scale(1e-6));
        }
    }
}

TEST_CASE("band features and spectral entropy") {
    const BandDefinition bands;
    const auto circadian = band_features(power_spectrum(sinusoid(336, 1.0, 3.0)), bands);
    CHECK(circadian.pct[1] == doctest::Approx(1.0));
    CHECK(circadian.pct[0] == doctest::Approx(0.0));
    CHECK(circadian.pct[2] == doctest::Approx(0.0));
    const auto fast = band_features(power_spectrum(sinusoid(336, 2.0, 3.0)), bands);
    CHECK(fast.pct[2] == doctest::Approx(1.0));
    const auto constant = band_features(power_spectrum(std::vector<double>(336, 2.0)), bands);
    CHECK(constant.sum[0] == doctest::Approx(4.0));
    CHECK(constant.sum[1] < 1e-24);
    CHECK(constant.sum[2] < 1e-24);
    const auto zero = band_features(power_spectrum(std::vector<double>(336, 0.0)), bands);
    CHECK(zero.zero_power);
    CHECK(zero.pct[0] == 0.0);

    const auto single = band_spectral_entropy(power_spectrum(sinusoid(336, 1.0, 3.0)), bands);
    CHECK(single.bins[1] == 7);
    CHECK(single.se[1] == doctest::Approx(0.0));

    // Equal power in two of the seven MF bins (k = 12 and 16).
    std::vector<double> two(336);
    for (std::size_t t = 0; t < two.size(); ++t) {
        two[t] = std::sin(2 * std::numbers::pi * 12 * t / 336.0) + std::sin(2 * std::numbers::pi * 16 * t / 336.0);
    }
    const auto pair = band_spectral_entropy(power_spectrum(two), bands);
    CHECK(pair.se[1] == doctest::Approx(std::log(2.0) / std::log(7.0)).epsilon(1e-9));

    // Equal power in every MF bin.
    std::vector<double> flat(336, 0.0);
    for (int k = 11; k <= 17; ++k) {
        for (std::size_t t = 0; t < flat.size(); ++t) flat[t] += std::cos(2 * std::numbers::pi * k * t / 336.0);
    }
    CHECK(band_spectral_entropy(power_spectrum(flat), bands).se[1] == doctest::Approx(1.0));
}

TEST_CASE("frequency features: exhaustive bands, scaling, circular shift") {
    const FeatureConfig config;
    for (int trial = 0; trial < 10; ++trial) {
        auto x = uniform_sequence(336, 500 + trial);
        const auto grid = power_spectrum(x);
        const auto bf = band_features(grid);
        CHECK(bf.sum[0] + bf.sum[1] + bf.sum[2] == doctest::Approx(grid.total_power()).epsilon(1e-9));

        auto scaled = x;
        for (auto& v : scaled) v *= 4.0;  // exact power-of-two scaling
        const auto a = extract_features(interval_of(x), config);
        const auto b = extract_features(interval_of(scaled), config);
        for (const char* name : {"LF_pct", "MF_pct", "HF_pct", "LF_se", "MF_se", "HF_se"}) CHECK(a.at(name) == b.at(name));
        for (const char* name : {"LF_sum", "MF_sum", "HF_sum"}) CHECK(b.at(name) == 16.0 * a.at(name));

        auto shifted = x;
        std::rotate(shifted.begin(), shifted.begin() + 5 + trial, shifted.end());
        const auto c = extract_features(interval_of(shifted), config);
        for (std::size_t k = 40; k < 49; ++k) CHECK(c.values[k] == doctest::Approx(a.values[k]).epsilon(1e-9));
        for (std::size_t k = 46; k < 49; ++k) {
            CHECK(a.values[k] >= 0.0);
            CHECK(a.values[k] <= 1.0);
        }
    }
}

TEST_CASE("excluding DC from LF changes LF but keeps the total") {
    auto x = uniform_sequence(336, 9);
    const auto grid = power_spectrum(x);
    BandDefinition no_dc;
    no_dc.dc_in_lf = false;
    const auto with = band_features(grid);
    const auto without = band_features(grid, no_dc);
    CHECK(with.sum[0] - without.sum[0] == doctest::Approx(grid.power[0]));
    CHECK(without.pct[0] + without.pct[1] + without.pct[2] < 1.0);
}

TEST_CASE("feature extraction flags and csv round trip") {
    const auto x = uniform_sequence(264, 77);
    auto fv = extract_features(interval_of(x));
    CHECK(fv.all_finite());
    const auto zero = extract_features(interval_of(std::vector<double>(240, 0.0)));
    CHECK(std::find(zero.flags.begin(), zero.flags.end(), "zero_power") != zero.flags.end());
    std::ostringstream out;
    const std::vector<FeatureVector> rows = {fv, zero};
    write_features_csv(out, rows, std::vector<std::string>{"{\"meta\":true}"});
    std::istringstream in(out.str());
    const auto back = read_features_csv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].values == fv.values);
    CHECK(back[1].flags == zero.flags);

    std::ostringstream empty;
    write_features_csv(empty, std::vector<FeatureVector>{});
    const std::string header = empty.str();
    CHECK(std::count(header.begin(), header.end(), '\n') == 1);
    CHECK(std::count(header.begin(), header.end(), ',') == 52);
}

TEST_CASE("documentation trace pair contrasts in the expected directions") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto [mild, severe] = figure2_pair(seed);
        CHECK_NOTHROW(check_interval(mild));
        CHECK_NOTHROW(check_interval(severe));
        const auto a = extract_features(mild);
        const auto b = extract_features(severe);
        CHECK(a.at("MF_pct") > b.at("MF_pct"));
        CHECK(a.at("MSE_1") < b.at("MSE_1"));
    }
}
