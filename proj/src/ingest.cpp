#include "proxiphene/ingest.hpp"

#include "proxiphene/csv.hpp"
#include "proxiphene/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

namespace proxiphene {

int DayGrid::observed_hours() const {
    return static_cast<int>(std::count_if(hours.begin(), hours.end(), [](const auto& h) { return h.has_value(); }));
}

bool DayGrid::fully_populated() const { return observed_hours() == kHoursPerDay; }

std::vector<DayGrid> bin_scans_to_days(std::span<const ScanRecord> scans, const TimeZone& zone) {
    std::vector<Instant> instants;
    instants.reserve(scans.size());
    for (const auto& s : scans) instants.push_back(s.timestamp);
    const auto slots = zone.to_local(instants);

    struct Accumulator {
        std::array<double, kHoursPerDay> sum{};
        std::array<int, kHoursPerDay> count{};
    };
    std::map<std::pair<std::string, Date>, Accumulator> grid;
    for (std::size_t i = 0; i < scans.size(); ++i) {
        auto& acc = grid[{scans[i].participant_id, slots[i].date}];
        acc.sum[slots[i].hour] += static_cast<double>(scans[i].device_count);
        acc.count[slots[i].hour] += 1;
    }

    std::vector<DayGrid> days;
    days.reserve(grid.size());
    for (const auto& [key, acc] : grid) {
        DayGrid day;
        day.participant_id = key.first;
        day.date = key.second;
        for (int h = 0; h < kHoursPerDay; ++h) {
            if (acc.count[h] > 0) day.hours[h] = acc.sum[h] / acc.count[h];
        }
        day.valid = day.observed_hours() >= kMinObservedHours;
        days.push_back(std::move(day));
    }
    return days;
}

DayGrid interpolate_day(const DayGrid& day) {
    if (!day.valid || day.observed_hours() == 0) {
        throw std::logic_error("interpolate_day called on an invalid day (" + day.participant_id + " " +
                               format_date(day.date) + ")");
    }
    DayGrid out = day;
    std::vector<int> anchors;
    for (int h = 0; h < kHoursPerDay; ++h) {
        if (day.hours[h]) anchors.push_back(h);
    }
    for (int h = 0; h < anchors.front(); ++h) out.hours[h] = *day.hours[anchors.front()];
    for (int h = anchors.back() + 1; h < kHoursPerDay; ++h) out.hours[h] = *day.hours[anchors.back()];
    for (std::size_t a = 0; a + 1 < anchors.size(); ++a) {
        const int lo = anchors[a];
        const int hi = anchors[a + 1];
        const double vlo = *day.hours[lo];
        const double vhi = *day.hours[hi];
        for (int h = lo + 1; h < hi; ++h) {
            out.hours[h] = vlo + (vhi - vlo) * static_cast<double>(h - lo) / static_cast<double>(hi - lo);
        }
    }
    return out;
}

void check_interval(const NbdcInterval& interval) {
    const auto fail = [&](const std::string& why) {
        throw std::logic_error("interval " + interval.participant_id + "/" +
                               format_date(interval.phq8.completion_date) + ": " + why);
    };
    const int n = interval.n_valid_days();
    if (n < kMinValidDays || n > kWindowDays) fail("valid day count " + std::to_string(n) + " outside 10-14");
    if (interval.sequence.size() != static_cast<std::size_t>(n) * kHoursPerDay) fail("sequence length mismatch");
    for (const double v : interval.sequence) {
        if (!std::isfinite(v)) fail("non-finite value in sequence");
    }
    const Date end = interval.phq8.completion_date;
    for (std::size_t d = 0; d < interval.days.size(); ++d) {
        const auto& day = interval.days[d];
        if (!day.valid || !day.fully_populated()) fail("day not valid and populated");
        if (day.date >= end || day.date < end - std::chrono::days{kWindowDays}) fail("day outside window");
        if (d > 0 && day.date <= interval.days[d - 1].date) fail("days not strictly ascending");
        for (int h = 0; h < kHoursPerDay; ++h) {
            if (*day.hours[h] != interval.sequence[d * kHoursPerDay + h]) fail("sequence disagrees with days");
        }
    }
}

NbdcInterval make_interval(std::string participant_id, Phq8Record phq8, std::span<const double> sequence) {
    if (sequence.empty() || sequence.size() % kHoursPerDay != 0) {
        throw std::invalid_argument("interval sequence length must be a positive multiple of 24");
    }
    NbdcInterval interval;
    interval.participant_id = std::move(participant_id);
    interval.phq8 = std::move(phq8);
    interval.phq8.participant_id = interval.participant_id;
    interval.sequence.assign(sequence.begin(), sequence.end());
    const auto n_days = sequence.size() / kHoursPerDay;
    const Date first = interval.phq8.completion_date - std::chrono::days{static_cast<int>(n_days)};
    for (std::size_t d = 0; d < n_days; ++d) {
        DayGrid day;
        day.participant_id = interval.participant_id;
        day.date = first + std::chrono::days{static_cast<int>(d)};
        day.valid = true;
        for (int h = 0; h < kHoursPerDay; ++h) day.hours[h] = sequence[d * kHoursPerDay + h];
        interval.days.push_back(std::move(day));
    }
    return interval;
}

IntervalAssembly assemble_intervals(std::span<const DayGrid> days, std::span<const Phq8Record> phq8s, Date cutoff) {
    std::map<std::pair<std::string, Date>, const DayGrid*> lookup;
    for (const auto& day : days) lookup[{day.participant_id, day.date}] = &day;

    IntervalAssembly out;
    std::set<std::pair<std::string, Date>> seen;
    for (const auto& rec : phq8s) {
        if (!seen.insert({rec.participant_id, rec.completion_date}).second) {
            out.rejections.push_back({rec.participant_id, rec.completion_date, "duplicate_date"});
            continue;
        }
        if (rec.completion_date >= cutoff) {
            out.rejections.push_back({rec.participant_id, rec.completion_date, "after_cutoff"});
            continue;
        }
        NbdcInterval interval;
        interval.participant_id = rec.participant_id;
        interval.phq8 = rec;
        for (int offset = kWindowDays; offset >= 1; --offset) {
            const Date date = rec.completion_date - std::chrono::days{offset};
            const auto it = lookup.find({rec.participant_id, date});
            if (it == lookup.end() || !it->second->valid) continue;
            interval.days.push_back(interpolate_day(*it->second));
        }
        if (interval.n_valid_days() < kMinValidDays) {
            out.rejections.push_back({rec.participant_id, rec.completion_date, "insufficient_valid_days"});
            continue;
        }
        interval.sequence.reserve(interval.days.size() * kHoursPerDay);
        for (const auto& day : interval.days) {
            for (const auto& h : day.hours) interval.sequence.push_back(*h);
        }
        out.intervals.push_back(std::move(interval));
    }
    std::sort(out.intervals.begin(), out.intervals.end(), [](const NbdcInterval& a, const NbdcInterval& b) {
        return std::tie(a.participant_id, a.phq8.completion_date) < std::tie(b.participant_id, b.phq8.completion_date);
    });
    std::stable_sort(out.rejections.begin(), out.rejections.end(), [](const Rejection& a, const Rejection& b) {
        return std::tie(a.participant_id, a.date) < std::tie(b.participant_id, b.date);
    });
    return out;
}

nlohmann::json interval_to_json(const NbdcInterval& interval) {
    nlohmann::json day_dates = nlohmann::json::array();
    for (const auto& day : interval.days) day_dates.push_back(format_date(day.date));
    return {
        {"participant_id", interval.participant_id},
        {"phq8_date", format_date(interval.phq8.completion_date)},
        {"score", interval.phq8.score},
        {"n_valid_days", interval.n_valid_days()},
        {"day_dates", std::move(day_dates)},
        {"sequence", interval.sequence},
    };
}

NbdcInterval interval_from_json(const nlohmann::json& j) {
    try {
        Phq8Record phq8;
        phq8.participant_id = j.at("participant_id").get<std::string>();
        phq8.completion_date = parse_date(j.at("phq8_date").get<std::string>());
        phq8.score = j.at("score").get<int>();
        const auto sequence = j.at("sequence").get<std::vector<double>>();
        auto interval = make_interval(phq8.participant_id, phq8, sequence);
        if (j.contains("day_dates")) {
            const auto& dates = j.at("day_dates");
            if (dates.size() != interval.days.size()) throw input_error("day_dates length disagrees with sequence");
            for (std::size_t d = 0; d < dates.size(); ++d) {
                interval.days[d].date = parse_date(dates[d].get<std::string>());
            }
        }
        if (j.at("n_valid_days").get<int>() != interval.n_valid_days()) {
            throw input_error("n_valid_days disagrees with sequence length");
        }
        return interval;
    } catch (const nlohmann::json::exception& e) {
        throw input_error(std::string("malformed interval record: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw input_error(std::string("malformed interval record: ") + e.what());
    }
}

void write_intervals_jsonl(std::ostream& out, std::span<const NbdcInterval> intervals, const nlohmann::json* meta) {
    if (meta) out << nlohmann::json{{"meta", *meta}}.dump() << '\n';
    for (const auto& interval : intervals) out << interval_to_json(interval).dump() << '\n';
}

std::vector<NbdcInterval> read_intervals_jsonl(std::istream& in) {
    std::vector<NbdcInterval> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw input_error("intervals line " + std::to_string(line_no) + ": " + e.what());
        }
        if (j.is_object() && j.size() == 1 && j.contains("meta")) continue;
        out.push_back(interval_from_json(j));
    }
    return out;
}

void write_rejections_csv(std::ostream& out, std::span<const Rejection> rejections) {
    out << "participant_id,date,reason\n";
    for (const auto& r : rejections) write_csv_row(out, {r.participant_id, format_date(r.date), r.reason});
}

}  // namespace proxiphene
