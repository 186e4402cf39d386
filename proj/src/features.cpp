#include "proxiphene/features.hpp"

#include "proxiphene/csv.hpp"
#include "proxiphene/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace proxiphene {

namespace {

std::array<std::string, kFeatureCount> build_names() {
    std::array<std::string, kFeatureCount> names;
    std::size_t i = 0;
    const char* stats[] = {"Max", "Min", "Mean", "Std"};
    for (const char* daily : stats) {
        for (const char* second : stats) names[i++] = std::string(second) + "_" + daily;
    }
    for (int s = 1; s <= 24; ++s) names[i++] = "MSE_" + std::to_string(s);
    for (const char* kind : {"sum", "pct", "se"}) {
        for (const char* band : {"LF", "MF", "HF"}) names[i++] = std::string(band) + "_" + kind;
    }
    return names;
}

std::array<double, 4> summarize(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) return {*hi, *lo, *lo, 0.0};
    // Rounding can push a summed mean a hair outside [min, max].
    const double mean = std::clamp(std::accumulate(v.begin(), v.end(), 0.0) / n, *lo, *hi);
    double ss = 0.0;
    for (const double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {*hi, *lo, mean, sd};
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
    static const auto names = build_names();
    return names;
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    return std::nullopt;
}

FeatureFamily feature_family(std::size_t index) {
    if (index < kStatisticalFeatureCount) return FeatureFamily::statistical;
    if (index < kStatisticalFeatureCount + kEntropyFeatureCount) return FeatureFamily::entropy;
    return FeatureFamily::frequency;
}

DailyStats daily_stats(std::span<const double> hours) {
    if (hours.empty()) throw std::invalid_argument("daily_stats: empty day");
    const auto s = summarize(hours);
    return {s[0], s[1], s[2], s[3]};
}

DailyStats daily_stats(const DayGrid& day) {
    if (!day.fully_populated()) throw std::invalid_argument("daily_stats: day has missing hours");
    std::array<double, kHoursPerDay> v{};
    for (int h = 0; h < kHoursPerDay; ++h) v[h] = *day.hours[h];
    return daily_stats(v);
}

std::array<double, kStatisticalFeatureCount> second_order_features(std::span<const DailyStats> days) {
    if (days.empty()) throw std::invalid_argument("second_order_features: no days");
    std::array<double, kStatisticalFeatureCount> out{};
    std::vector<double> column(days.size());
    const auto pick = [&](int which) {
        for (std::size_t d = 0; d < days.size(); ++d) {
            const auto& s = days[d];
            column[d] = which == 0 ? s.max : which == 1 ? s.min : which == 2 ? s.mean : s.std;
        }
    };
    for (int daily = 0; daily < 4; ++daily) {
        pick(daily);
        const auto s = summarize(column);
        for (int second = 0; second < 4; ++second) out[daily * 4 + second] = s[second];
    }
    return out;
}

std::array<double, kStatisticalFeatureCount> second_order_features(const NbdcInterval& interval) {
    std::vector<DailyStats> stats;
    stats.reserve(interval.days.size());
    for (std::size_t d = 0; d < interval.days.size(); ++d) stats.push_back(daily_stats(interval.day_values(d)));
    return second_order_features(stats);
}

double FeatureVector::at(std::string_view name) const {
    const auto idx = feature_index(name);
    if (!idx) throw std::out_of_range("unknown feature '" + std::string(name) + "'");
    return values[*idx];
}

bool FeatureVector::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

FeatureVector extract_features(const NbdcInterval& interval, const FeatureConfig& config) {
    FeatureVector fv;
    fv.participant_id = interval.participant_id;
    fv.date = interval.phq8.completion_date;
    fv.phq8 = interval.phq8.score;

    const auto stats = second_order_features(interval);
    std::copy(stats.begin(), stats.end(), fv.values.begin());

    const auto mse = mse_profile(interval.sequence, config.mse);
    for (std::size_t s = 0; s < kEntropyFeatureCount; ++s) {
        fv.values[kStatisticalFeatureCount + s] = s < mse.values.size() ? mse.values[s] : std::nan("");
        if (s < mse.capped.size() && mse.capped[s]) fv.flags.push_back("MSE_" + std::to_string(s + 1) + ":capped");
    }

    const auto spectrum = power_spectrum(interval.sequence);
    const auto bands = band_features(spectrum, config.bands);
    const auto entropy = band_spectral_entropy(spectrum, config.bands);
    const std::size_t base = kStatisticalFeatureCount + kEntropyFeatureCount;
    for (int b = 0; b < 3; ++b) {
        fv.values[base + b] = bands.sum[b];
        fv.values[base + 3 + b] = bands.pct[b];
        fv.values[base + 6 + b] = entropy.se[b];
        if (entropy.degenerate[b]) fv.flags.push_back(feature_names()[base + 6 + b] + ":degenerate");
    }
    if (bands.zero_power) fv.flags.push_back("zero_power");
    if (!fv.all_finite()) fv.flags.push_back("non_finite");
    return fv;
}

void write_features_csv(std::ostream& out, std::span<const FeatureVector> rows, std::span<const std::string> meta_lines) {
    for (const auto& line : meta_lines) out << "# " << line << '\n';
    std::vector<std::string> header = {"participant_id", "date", "phq8"};
    for (const auto& name : feature_names()) header.push_back(name);
    header.push_back("flags");
    write_csv_row(out, header);
    for (const auto& row : rows) {
        std::vector<std::string> fields = {row.participant_id, format_date(row.date), std::to_string(row.phq8)};
        for (const double v : row.values) fields.push_back(format_double(v));
        std::string flags;
        for (std::size_t i = 0; i < row.flags.size(); ++i) flags += (i ? ";" : "") + row.flags[i];
        fields.push_back(flags);
        write_csv_row(out, fields);
    }
}

std::vector<FeatureVector> read_features_csv(std::istream& in, const std::string& source) {
    const auto table = read_csv(in, source);
    const auto pid = table.column("participant_id");
    const auto date = table.column("date");
    const auto phq8 = table.column("phq8");
    std::array<std::size_t, kFeatureCount> cols{};
    for (std::size_t f = 0; f < kFeatureCount; ++f) cols[f] = table.column(feature_names()[f]);
    const bool has_flags = std::find(table.header.begin(), table.header.end(), "flags") != table.header.end();
    const std::size_t flag_col = has_flags ? table.column("flags") : 0;

    std::vector<FeatureVector> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        FeatureVector fv;
        fv.participant_id = row[pid];
        fv.date = parse_date(row[date]);
        try {
            fv.phq8 = std::stoi(row[phq8]);
        } catch (const std::exception&) {
            throw input_error(source + ":" + std::to_string(table.line_numbers[r]) + ": bad phq8 value");
        }
        for (std::size_t f = 0; f < kFeatureCount; ++f) fv.values[f] = parse_double(row[cols[f]]);
        if (has_flags && !row[flag_col].empty()) {
            std::string_view rest = row[flag_col];
            while (!rest.empty()) {
                const auto cut = rest.find(';');
                fv.flags.emplace_back(rest.substr(0, cut));
                rest = cut == std::string_view::npos ? std::string_view{} : rest.substr(cut + 1);
            }
        }
        out.push_back(std::move(fv));
    }
    return out;
}

}  // namespace proxiphene
