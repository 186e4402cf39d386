#include "proxiphene/civil_time.hpp"

#include "proxiphene/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <mutex>
#include <optional>

namespace proxiphene {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

std::optional<Date> make_date(int y, int m, int d) {
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

// POSIX TZ switching is process-global.
std::mutex& tz_mutex() {
    static std::mutex m;
    return m;
}

class ScopedTz {
public:
    explicit ScopedTz(const std::string& name) {
        if (const char* prev = std::getenv("TZ")) previous_ = std::string(prev);
        ::setenv("TZ", name.c_str(), 1);
        ::tzset();
    }
    ~ScopedTz() {
        if (previous_) {
            ::setenv("TZ", previous_->c_str(), 1);
        } else {
            ::unsetenv("TZ");
        }
        ::tzset();
    }
    ScopedTz(const ScopedTz&) = delete;
    ScopedTz& operator=(const ScopedTz&) = delete;

private:
    std::optional<std::string> previous_;
};

LocalSlot from_tm(const std::tm& tm) {
    return {sys_days{year_month_day{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                                    day{static_cast<unsigned>(tm.tm_mday)}}},
            tm.tm_hour};
}

LocalSlot utc_slot(Instant instant) {
    const auto d = floor<days>(instant);
    const auto h = duration_cast<hours>(instant - d).count();
    return {d, static_cast<int>(h)};
}

}  // namespace

Date parse_date(std::string_view text) {
    int y = 0, m = 0, d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !read_int(text, 0, 4, y) ||
        !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) {
        throw input_error("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    const auto date = make_date(y, m, d);
    if (!date) throw input_error("invalid calendar date '" + std::string(text) + "'");
    return *date;
}

std::string format_date(Date date) {
    const year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Instant parse_timestamp(std::string_view text) {
    const auto fail = [&](const char* why) {
        return input_error("unparseable timestamp '" + std::string(text) + "': " + why);
    };
    if (text.size() < 16) throw fail("too short");
    const Date date = [&] {
        try {
            return parse_date(text.substr(0, 10));
        } catch (const Error&) {
            throw fail("bad date part");
        }
    }();
    if (text[10] != 'T' && text[10] != ' ') throw fail("expected 'T' separator");
    int hh = 0, mm = 0, ss = 0;
    if (!read_int(text, 11, 2, hh) || text[13] != ':' || !read_int(text, 14, 2, mm)) throw fail("bad time");
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        if (!read_int(text, pos + 1, 2, ss)) throw fail("bad seconds");
        pos += 3;
        if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) throw fail("time out of range");
    if (pos >= text.size()) throw fail("missing UTC offset");
    int offset_minutes = 0;
    const char sign = text[pos];
    if (sign == 'Z' || sign == 'z') {
        if (pos + 1 != text.size()) throw fail("trailing characters");
    } else if (sign == '+' || sign == '-') {
        int oh = 0, om = 0;
        const auto rest = text.size() - pos - 1;
        if (rest == 5 && text[pos + 3] == ':') {
            if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 4, 2, om)) throw fail("bad offset");
        } else if (rest == 4) {
            if (!read_int(text, pos + 1, 2, oh) || !read_int(text, pos + 3, 2, om)) throw fail("bad offset");
        } else if (rest == 2) {
            if (!read_int(text, pos + 1, 2, oh)) throw fail("bad offset");
        } else {
            throw fail("bad offset");
        }
        if (oh > 23 || om > 59) throw fail("offset out of range");
        offset_minutes = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
        throw fail("missing UTC offset");
    }
    return Instant{date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp_utc(Instant instant) {
    const auto slot = utc_slot(instant);
    const auto within = instant - Instant{slot.date} - hours{slot.hour};
    const auto mins = duration_cast<minutes>(within).count();
    const auto secs = (within - minutes{mins}).count();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02lld:%02lldZ", format_date(slot.date).c_str(), slot.hour,
                  static_cast<long long>(mins), static_cast<long long>(secs));
    return buf;
}

TimeZone TimeZone::utc() { return TimeZone("UTC"); }

TimeZone::TimeZone(std::string name) : name_(std::move(name)) {
    if (name_ == "UTC" || name_ == "Etc/UTC" || name_ == "Z") {
        is_utc_ = true;
        return;
    }
    std::filesystem::path root = "/usr/share/zoneinfo";
    if (const char* dir = std::getenv("TZDIR")) root = dir;
    if (name_.empty() || name_.find("..") != std::string::npos || !std::filesystem::is_regular_file(root / name_)) {
        throw input_error("unknown time zone '" + name_ + "'");
    }
}

LocalSlot TimeZone::to_local(Instant instant) const {
    const Instant one[] = {instant};
    return to_local(std::span<const Instant>(one)).front();
}

std::vector<LocalSlot> TimeZone::to_local(std::span<const Instant> instants) const {
    std::vector<LocalSlot> out;
    out.reserve(instants.size());
    if (is_utc_) {
        for (const auto t : instants) out.push_back(utc_slot(t));
        return out;
    }
    std::lock_guard lock(tz_mutex());
    ScopedTz scoped(":" + name_);
    for (const auto t : instants) {
        const std::time_t raw = static_cast<std::time_t>(t.time_since_epoch().count());
        std::tm tm{};
        if (!::localtime_r(&raw, &tm)) throw input_error("timestamp outside representable range");
        out.push_back(from_tm(tm));
    }
    return out;
}

}  // namespace proxiphene
