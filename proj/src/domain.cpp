#include "proxiphene/domain.hpp"

#include "proxiphene/error.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

namespace proxiphene {

namespace {

template <class Int>
bool parse_integer(std::string_view text, Int& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size() && !text.empty();
}

bool parse_real(std::string_view text, double& out) {
    try {
        out = parse_double(text);
        return std::isfinite(out);
    } catch (const Error&) {
        return false;
    }
}

std::string name_of(const CsvTable& table, std::string_view fallback) {
    return table.source.empty() ? std::string(fallback) : table.source;
}

}  // namespace

SeverityBand severity_band(int score) {
    if (score < kPhq8Min || score > kPhq8Max) {
        throw std::out_of_range("PHQ-8 score " + std::to_string(score) + " outside 0-24");
    }
    if (score < 5) return SeverityBand::asymptomatic;
    if (score < 10) return SeverityBand::mild;
    if (score < 15) return SeverityBand::moderate;
    if (score < 20) return SeverityBand::moderately_severe;
    return SeverityBand::severe;
}

std::string_view to_string(SeverityBand band) {
    switch (band) {
        case SeverityBand::asymptomatic: return "asymptomatic";
        case SeverityBand::mild: return "mild";
        case SeverityBand::moderate: return "moderate";
        case SeverityBand::moderately_severe: return "moderately_severe";
        case SeverityBand::severe: return "severe";
    }
    return "unknown";
}

Gender parse_gender(std::string_view text) {
    if (text == "female" || text == "Female" || text == "F" || text == "f") return Gender::female;
    if (text == "male" || text == "Male" || text == "M" || text == "m") return Gender::male;
    return Gender::other;
}

std::string_view to_string(Gender gender) {
    switch (gender) {
        case Gender::female: return "female";
        case Gender::male: return "male";
        case Gender::other: return "other";
    }
    return "other";
}

void ValidationReport::merge(const ValidationReport& other) {
    fatal.insert(fatal.end(), other.fatal.begin(), other.fatal.end());
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& issue : fatal) {
        out += "error: " + issue.table + ":" + std::to_string(issue.line) + ": " + issue.message + "\n";
    }
    for (const auto& issue : warnings) {
        out += "warning: " + issue.table + ":" + std::to_string(issue.line) + ": " + issue.message + "\n";
    }
    return out;
}

std::vector<ScanRecord> parse_scans(const CsvTable& table, ValidationReport& report) {
    require_header(table, {"participant_id", "timestamp", "device_count"});
    const auto source = name_of(table, "scans.csv");
    std::vector<ScanRecord> out;
    out.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto line = table.line_numbers[i];
        ScanRecord rec;
        rec.participant_id = row[0];
        rec.line = line;
        try {
            rec.timestamp = parse_timestamp(row[1]);
        } catch (const Error& e) {
            report.fatal.push_back({source, line, e.what()});
            continue;
        }
        if (!parse_integer(row[2], rec.device_count)) {
            report.fatal.push_back({source, line, "device_count '" + row[2] + "' is not an integer"});
            continue;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Phq8Record> parse_phq8(const CsvTable& table, ValidationReport& report) {
    require_header(table, {"participant_id", "date", "score"});
    const auto source = name_of(table, "phq8.csv");
    std::vector<Phq8Record> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto line = table.line_numbers[i];
        Phq8Record rec;
        rec.participant_id = row[0];
        rec.line = line;
        try {
            rec.completion_date = parse_date(row[1]);
        } catch (const Error& e) {
            report.fatal.push_back({source, line, e.what()});
            continue;
        }
        if (!parse_integer(row[2], rec.score)) {
            report.fatal.push_back({source, line, "score '" + row[2] + "' is not an integer"});
            continue;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Demographics> parse_demographics(const CsvTable& table, ValidationReport& report) {
    require_header(table, {"participant_id", "age", "gender", "education_years"});
    const auto source = name_of(table, "demographics.csv");
    std::vector<Demographics> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto line = table.line_numbers[i];
        Demographics rec;
        rec.participant_id = row[0];
        rec.line = line;
        rec.gender = parse_gender(row[2]);
        if (!parse_real(row[1], rec.age_years) || rec.age_years < 0) {
            report.fatal.push_back({source, line, "age '" + row[1] + "' is not a non-negative number"});
            continue;
        }
        if (!parse_real(row[3], rec.education_years) || rec.education_years < 0) {
            report.fatal.push_back({source, line, "education_years '" + row[3] + "' is not a non-negative number"});
            continue;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

ValidationReport validate_dataset(std::span<const ScanRecord> scans, std::span<const Phq8Record> phq8s,
                                  std::span<const Demographics> demographics, bool check_orphans) {
    ValidationReport report;
    std::set<std::string, std::less<>> known;
    for (const auto& d : demographics) {
        if (!known.insert(d.participant_id).second) {
            report.fatal.push_back({"demographics.csv", d.line, "duplicate demographics for participant '" +
                                                                    d.participant_id + "'"});
        }
    }
    std::set<std::string, std::less<>> orphan_warned;
    const auto check_orphan = [&](const std::string& id, const char* table, std::size_t line) {
        if (check_orphans && !known.contains(id) && orphan_warned.insert(std::string(table) + "/" + id).second) {
            report.warnings.push_back({table, line, "participant '" + id + "' has no demographics; rows retained"});
        }
    };
    for (const auto& s : scans) {
        if (s.device_count < 0) {
            report.fatal.push_back({"scans.csv", s.line, "negative device_count " + std::to_string(s.device_count)});
        }
        check_orphan(s.participant_id, "scans.csv", s.line);
    }
    for (const auto& p : phq8s) {
        if (p.score < kPhq8Min || p.score > kPhq8Max) {
            report.fatal.push_back({"phq8.csv", p.line, "score " + std::to_string(p.score) + " outside 0-24"});
        }
        check_orphan(p.participant_id, "phq8.csv", p.line);
    }
    return report;
}

DemographicsIndex index_demographics(std::span<const Demographics> demographics) {
    DemographicsIndex index;
    for (const auto& d : demographics) {
        if (!index.emplace(d.participant_id, d).second) {
            throw input_error("duplicate demographics for participant '" + d.participant_id + "'");
        }
    }
    return index;
}

void write_scans_csv(std::ostream& out, std::span<const ScanRecord> scans) {
    out << "participant_id,timestamp,device_count\n";
    for (const auto& s : scans) {
        write_csv_row(out, {s.participant_id, format_timestamp_utc(s.timestamp), std::to_string(s.device_count)});
    }
}

void write_phq8_csv(std::ostream& out, std::span<const Phq8Record> phq8s) {
    out << "participant_id,date,score\n";
    for (const auto& p : phq8s) {
        write_csv_row(out, {p.participant_id, format_date(p.completion_date), std::to_string(p.score)});
    }
}

void write_demographics_csv(std::ostream& out, std::span<const Demographics> demographics) {
    out << "participant_id,age,gender,education_years\n";
    for (const auto& d : demographics) {
        write_csv_row(out, {d.participant_id, format_double(d.age_years), std::string(to_string(d.gender)),
                            format_double(d.education_years)});
    }
}

}  // namespace proxiphene
