#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proxiphene {

using Date = std::chrono::sys_days;
using Instant = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`. Throws proxiphene::Error (input) on malformed text.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Parses an ISO-8601 timestamp carrying an explicit offset (`Z`, `+HH:MM`, `+HHMM`).
/// Fractional seconds are accepted and truncated.
Instant parse_timestamp(std::string_view text);
std::string format_timestamp_utc(Instant instant);

/// Wall-clock position of an instant: calendar day plus start hour 0-23.
struct LocalSlot {
    Date date;
    int hour = 0;
};

/// A named IANA zone resolved through the system zoneinfo database.
class TimeZone {
public:
    static TimeZone utc();

    /// Throws proxiphene::Error (input) when the zone is not installed.
    explicit TimeZone(std::string name);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] LocalSlot to_local(Instant instant) const;
    [[nodiscard]] std::vector<LocalSlot> to_local(std::span<const Instant> instants) const;

private:
    std::string name_;
    bool is_utc_ = false;
};

}  // namespace proxiphene
