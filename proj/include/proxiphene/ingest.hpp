#pragma once

#include "proxiphene/civil_time.hpp"
#include "proxiphene/domain.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace proxiphene {

inline constexpr int kHoursPerDay = 24;
inline constexpr int kMinObservedHours = 12;
inline constexpr int kWindowDays = 14;
inline constexpr int kMinValidDays = 10;

/// One participant-day on the hourly grid. Slot h holds the mean count of scans
/// whose local wall-clock start hour is h.
struct DayGrid {
    std::string participant_id;
    Date date;
    std::array<std::optional<double>, kHoursPerDay> hours{};
    bool valid = false;

    [[nodiscard]] int observed_hours() const;
    [[nodiscard]] bool fully_populated() const;
};

/// Days ordered by (participant_id, date). Validity uses the >= 12 observed-hour rule.
std::vector<DayGrid> bin_scans_to_days(std::span<const ScanRecord> scans, const TimeZone& zone);

/// Fills interior gaps linearly and edge gaps by nearest-value extension.
/// Throws std::logic_error when the day is not valid.
DayGrid interpolate_day(const DayGrid& day);

/// The gap-filled hourly sequence preceding one PHQ-8 completion.
struct NbdcInterval {
    std::string participant_id;
    Phq8Record phq8;
    std::vector<DayGrid> days;  // valid, fully populated, ascending dates
    std::vector<double> sequence;

    [[nodiscard]] int n_valid_days() const { return static_cast<int>(days.size()); }
    [[nodiscard]] std::span<const double> day_values(std::size_t d) const {
        return std::span<const double>(sequence).subspan(d * kHoursPerDay, kHoursPerDay);
    }
};

/// Throws std::logic_error describing the first violated interval invariant.
void check_interval(const NbdcInterval& interval);

/// Builds an interval from already-populated hourly day blocks (sequence length must be a
/// multiple of 24). Dates are assigned consecutively ending the day before completion.
NbdcInterval make_interval(std::string participant_id, Phq8Record phq8, std::span<const double> sequence);

struct Rejection {
    std::string participant_id;
    Date date;
    std::string reason;  // after_cutoff | insufficient_valid_days | duplicate_date
};

struct IntervalAssembly {
    std::vector<NbdcInterval> intervals;  // ordered by (participant_id, completion date)
    std::vector<Rejection> rejections;
};

/// Window = the 14 calendar days strictly before completion. Records dated on or after
/// `cutoff` are rejected; a second record on the same day for one participant is dropped.
IntervalAssembly assemble_intervals(std::span<const DayGrid> days, std::span<const Phq8Record> phq8s, Date cutoff);

nlohmann::json interval_to_json(const NbdcInterval& interval);
NbdcInterval interval_from_json(const nlohmann::json& j);

/// One interval object per line. A first line of the form {"meta": {...}} carries provenance
/// and is skipped by the reader.
void write_intervals_jsonl(std::ostream& out, std::span<const NbdcInterval> intervals,
                           const nlohmann::json* meta = nullptr);
std::vector<NbdcInterval> read_intervals_jsonl(std::istream& in);

void write_rejections_csv(std::ostream& out, std::span<const Rejection> rejections);

}  // namespace proxiphene
