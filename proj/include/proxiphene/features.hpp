#pragma once

#include "proxiphene/civil_time.hpp"
#include "proxiphene/entropy.hpp"
#include "proxiphene/ingest.hpp"
#include "proxiphene/spectrum.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proxiphene {

inline constexpr std::size_t kFeatureCount = 49;
inline constexpr std::size_t kStatisticalFeatureCount = 16;
inline constexpr std::size_t kEntropyFeatureCount = 24;
inline constexpr std::size_t kFrequencyFeatureCount = 9;

enum class FeatureFamily { statistical, entropy, frequency };

/// Column order of features.csv: the 16 `[Second]_[Daily]` statistics grouped by daily
/// feature, MSE_1..MSE_24, then LF/MF/HF sums, percentages and spectral entropies.
const std::array<std::string, kFeatureCount>& feature_names();
std::optional<std::size_t> feature_index(std::string_view name);
FeatureFamily feature_family(std::size_t index);

struct DailyStats {
    double max = 0.0;
    double min = 0.0;
    double mean = 0.0;
    double std = 0.0;  // sample (n - 1) denominator
};

DailyStats daily_stats(std::span<const double> hours);
/// Throws std::invalid_argument unless the day is fully populated.
DailyStats daily_stats(const DayGrid& day);

/// Max/Min/Mean/Std across days of each daily statistic, in feature_names() order.
std::array<double, kStatisticalFeatureCount> second_order_features(std::span<const DailyStats> days);
std::array<double, kStatisticalFeatureCount> second_order_features(const NbdcInterval& interval);

struct FeatureConfig {
    MseParams mse;
    BandDefinition bands;
};

struct FeatureVector {
    std::string participant_id;
    Date date;
    int phq8 = 0;
    std::array<double, kFeatureCount> values{};
    std::vector<std::string> flags;

    [[nodiscard]] double at(std::string_view name) const;
    [[nodiscard]] bool all_finite() const;
};

FeatureVector extract_features(const NbdcInterval& interval, const FeatureConfig& config = {});

/// Header: participant_id,date,phq8,<49 features>,flags. `meta_lines` are written first,
/// each prefixed with "# ".
void write_features_csv(std::ostream& out, std::span<const FeatureVector> rows,
                        std::span<const std::string> meta_lines = {});
std::vector<FeatureVector> read_features_csv(std::istream& in, const std::string& source = "features.csv");

}  // namespace proxiphene
