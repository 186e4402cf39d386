#include "proxiphene/synthetic.hpp"

#include "proxiphene/error.hpp"
#include "proxiphene/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace proxiphene {

namespace {

using nlohmann::json;

template <class T>
void read_field(const json& j, const char* key, T& field, std::set<std::string>& known) {
    known.insert(key);
    if (!j.contains(key)) return;
    try {
        field = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw input_error(std::string("generator spec: bad value for '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw input_error("generator spec: unknown key '" + where + key + "'");
    }
}

template <class F>
void read_section(const json& j, const char* key, F&& body) {
    if (!j.contains(key)) return;
    const auto& section = j.at(key);
    if (!section.is_object()) throw input_error(std::string("generator spec: '") + key + "' must be an object");
    std::set<std::string> known;
    body(section, known);
    reject_unknown(section, known, std::string(key) + ".");
}

double scale_factor(double coefficient, double severity) { return std::max(0.05, 1.0 + coefficient * severity); }

double normal(Rng& rng, double sd) {
    if (sd <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sd)(rng);
}

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

int clip_phq(double value) {
    return static_cast<int>(std::clamp(std::round(value), double(kPhq8Min), double(kPhq8Max)));
}

std::string participant_label(int index, int total) {
    const int width = std::max<int>(3, static_cast<int>(std::to_string(total).size()));
    std::string digits = std::to_string(index + 1);
    return "P" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

}  // namespace

GeneratorSpec generator_spec_from_json(const json& j) {
    if (!j.is_object()) throw input_error("generator spec must be a JSON object");
    GeneratorSpec s;
    std::set<std::string> known;
    read_field(j, "n_participants", s.n_participants, known);
    read_field(j, "min_intervals", s.min_intervals, known);
    read_field(j, "max_intervals", s.max_intervals, known);
    read_field(j, "interval_days", s.interval_days, known);
    read_field(j, "start_date", s.start_date, known);
    read_field(j, "start_jitter_days", s.start_jitter_days, known);
    read_field(j, "female_rate", s.female_rate, known);
    read_field(j, "seed", s.seed, known);
    for (const char* section : {"severity", "trace", "linkage", "phq8"}) known.insert(section);
    read_section(j, "severity", [&](const json& x, std::set<std::string>& k) {
        read_field(x, "mean", s.severity.mean, k);
        read_field(x, "between_sd", s.severity.between_sd, k);
        read_field(x, "persistence", s.severity.persistence, k);
        read_field(x, "noise_sd", s.severity.noise_sd, k);
    });
    read_section(j, "trace", [&](const json& x, std::set<std::string>& k) {
        read_field(x, "base_level", s.trace.base_level, k);
        read_field(x, "base_level_sd", s.trace.base_level_sd, k);
        read_field(x, "amplitude", s.trace.amplitude, k);
        read_field(x, "weekly_amplitude", s.trace.weekly_amplitude, k);
        read_field(x, "noise_sd", s.trace.noise_sd, k);
        read_field(x, "day_sd", s.trace.day_sd, k);
        read_field(x, "missing_rate", s.trace.missing_rate, k);
        read_field(x, "day_missing_rate", s.trace.day_missing_rate, k);
    });
    read_section(j, "linkage", [&](const json& x, std::set<std::string>& k) {
        read_field(x, "level", s.linkage.level, k);
        read_field(x, "amplitude", s.linkage.amplitude, k);
        read_field(x, "irregularity", s.linkage.irregularity, k);
        read_field(x, "variance", s.linkage.variance, k);
    });
    read_section(j, "phq8", [&](const json& x, std::set<std::string>& k) {
        read_field(x, "intercept", s.phq.intercept, k);
        read_field(x, "slope", s.phq.slope, k);
        read_field(x, "noise_sd", s.phq.noise_sd, k);
    });
    reject_unknown(j, known, "");
    validate_generator_spec(s);
    return s;
}

json to_json(const GeneratorSpec& s) {
    return {{"n_participants", s.n_participants},
            {"min_intervals", s.min_intervals},
            {"max_intervals", s.max_intervals},
            {"interval_days", s.interval_days},
            {"start_date", s.start_date},
            {"start_jitter_days", s.start_jitter_days},
            {"female_rate", s.female_rate},
            {"seed", s.seed},
            {"severity",
             {{"mean", s.severity.mean},
              {"between_sd", s.severity.between_sd},
              {"persistence", s.severity.persistence},
              {"noise_sd", s.severity.noise_sd}}},
            {"trace",
             {{"base_level", s.trace.base_level},
              {"base_level_sd", s.trace.base_level_sd},
              {"amplitude", s.trace.amplitude},
              {"weekly_amplitude", s.trace.weekly_amplitude},
              {"noise_sd", s.trace.noise_sd},
              {"day_sd", s.trace.day_sd},
              {"missing_rate", s.trace.missing_rate},
              {"day_missing_rate", s.trace.day_missing_rate}}},
            {"linkage",
             {{"level", s.linkage.level},
              {"amplitude", s.linkage.amplitude},
              {"irregularity", s.linkage.irregularity},
              {"variance", s.linkage.variance}}},
            {"phq8", {{"intercept", s.phq.intercept}, {"slope", s.phq.slope}, {"noise_sd", s.phq.noise_sd}}}};
}

void validate_generator_spec(const GeneratorSpec& s) {
    const auto require = [](bool ok, const std::string& what) {
        if (!ok) throw input_error("generator spec: " + what);
    };
    const auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
    require(s.n_participants >= 1, "n_participants must be >= 1");
    require(s.min_intervals >= 1 && s.min_intervals <= s.max_intervals, "need 1 <= min_intervals <= max_intervals");
    require(s.interval_days >= kWindowDays, "interval_days must be >= 14");
    require(s.start_jitter_days >= 0, "start_jitter_days must be >= 0");
    require(rate(s.female_rate), "female_rate must lie in [0, 1]");
    require(rate(s.trace.missing_rate), "trace.missing_rate must lie in [0, 1]");
    require(rate(s.trace.day_missing_rate), "trace.day_missing_rate must lie in [0, 1]");
    require(s.severity.persistence > -1.0 && s.severity.persistence < 1.0, "severity.persistence must lie in (-1, 1)");
    require(s.severity.between_sd >= 0 && s.severity.noise_sd >= 0, "severity SDs must be >= 0");
    require(s.trace.base_level_sd >= 0 && s.trace.noise_sd >= 0 && s.trace.day_sd >= 0 && s.trace.amplitude >= 0,
            "trace SDs and amplitude must be >= 0");
    require(s.phq.slope >= 0.0, "phq8.slope must be >= 0");
    require(s.phq.noise_sd >= 0.0, "phq8.noise_sd must be >= 0");
    parse_date(s.start_date);
}

TraceParams trace_params(const GeneratorSpec& spec, double base_level, double phase, double severity) {
    TraceParams p;
    p.level = base_level + spec.linkage.level * severity;
    p.amplitude = spec.trace.amplitude * scale_factor(spec.linkage.amplitude, severity);
    p.noise_sd = spec.trace.noise_sd * scale_factor(spec.linkage.irregularity, severity);
    p.day_sd = spec.trace.day_sd * scale_factor(spec.linkage.variance, severity);
    p.phase = phase;
    p.weekly_amplitude = spec.trace.weekly_amplitude;
    return p;
}

double expected_phq8(const PhqSpec& phq, double severity) { return phq.intercept + phq.slope * severity; }

std::array<double, 24> simulate_day(const TraceParams& p, long day_number, Rng& rng) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double day_offset = normal(rng, p.day_sd) + p.weekly_amplitude * std::sin(two_pi * double(day_number) / 7.0);
    std::array<double, 24> hours{};
    for (int h = 0; h < 24; ++h) {
        const double x = p.level + day_offset + p.amplitude * std::sin(two_pi * h / 24.0 + p.phase) + normal(rng, p.noise_sd);
        hours[static_cast<std::size_t>(h)] = std::max(0.0, std::round(x));
    }
    return hours;
}

SyntheticCohort generate_cohort(const GeneratorSpec& spec) {
    validate_generator_spec(spec);
    const Date start = parse_date(spec.start_date);
    SyntheticCohort out;
    json participants = json::array();

    for (int p = 0; p < spec.n_participants; ++p) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(p)));
        const std::string id = participant_label(p, spec.n_participants);

        Demographics demo;
        demo.participant_id = id;
        demo.age_years = std::uniform_int_distribution<int>(20, 70)(rng);
        demo.gender = uniform(rng) < spec.female_rate ? Gender::female : Gender::male;
        demo.education_years = std::uniform_int_distribution<int>(10, 22)(rng);
        out.demographics.push_back(demo);

        const int n_intervals = std::uniform_int_distribution<int>(spec.min_intervals, spec.max_intervals)(rng);
        const int jitter = std::uniform_int_distribution<int>(0, spec.start_jitter_days)(rng);
        const double base_level = spec.trace.base_level + normal(rng, spec.trace.base_level_sd);
        const double phase = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        const double person_mean = spec.severity.mean + normal(rng, spec.severity.between_sd);
        const double phi = spec.severity.persistence;
        const double stationary_sd = spec.severity.noise_sd / std::sqrt(1.0 - phi * phi);

        const Date first_day = start + std::chrono::days(jitter);
        json intervals = json::array();
        double severity = person_mean + normal(rng, stationary_sd);
        for (int k = 0; k < n_intervals; ++k) {
            if (k > 0) severity = person_mean + phi * (severity - person_mean) + normal(rng, spec.severity.noise_sd);
            const Date completion = first_day + std::chrono::days(static_cast<long>(k + 1) * spec.interval_days);
            const Date window_start = completion - std::chrono::days(spec.interval_days);
            const auto params = trace_params(spec, base_level, phase, severity);
            int observed_days = 0;
            for (Date day = window_start; day < completion; day += std::chrono::days(1)) {
                const long day_number = (day - first_day).count();
                const auto hours = simulate_day(params, day_number, rng);
                const bool day_missing = uniform(rng) < spec.trace.day_missing_rate;
                bool any = false;
                for (int h = 0; h < 24; ++h) {
                    const bool hour_missing = uniform(rng) < spec.trace.missing_rate;
                    if (day_missing || hour_missing) continue;
                    ScanRecord scan;
                    scan.participant_id = id;
                    scan.timestamp = std::chrono::sys_seconds(day) + std::chrono::hours(h);
                    scan.device_count = static_cast<std::int64_t>(hours[static_cast<std::size_t>(h)]);
                    out.scans.push_back(std::move(scan));
                    any = true;
                }
                observed_days += any ? 1 : 0;
            }
            const double expected = expected_phq8(spec.phq, severity);
            Phq8Record phq;
            phq.participant_id = id;
            phq.completion_date = completion;
            phq.score = clip_phq(expected + normal(rng, spec.phq.noise_sd));
            out.phq8.push_back(phq);
            intervals.push_back({{"phq8_date", format_date(completion)},
                                 {"severity", severity},
                                 {"expected_phq8", expected},
                                 {"phq8", phq.score},
                                 {"days_with_scans", observed_days},
                                 {"level", params.level},
                                 {"amplitude", params.amplitude},
                                 {"noise_sd", params.noise_sd},
                                 {"day_sd", params.day_sd}});
        }
        participants.push_back({{"participant_id", id},
                                {"severity_mean", person_mean},
                                {"base_level", base_level},
                                {"phase", phase},
                                {"first_day", format_date(first_day)},
                                {"intervals", std::move(intervals)}});
    }
    out.ground_truth = {{"generator", to_json(spec)}, {"participants", std::move(participants)}};
    return out;
}

void write_cohort(const SyntheticCohort& cohort, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create " + dir.string() + ": " + ec.message());
    const auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw io_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("scans.csv");
        write_scans_csv(f, cohort.scans);
    }
    {
        auto f = open("phq8.csv");
        write_phq8_csv(f, cohort.phq8);
    }
    {
        auto f = open("demographics.csv");
        write_demographics_csv(f, cohort.demographics);
    }
    {
        auto f = open("ground_truth.json");
        f << cohort.ground_truth.dump(2) << '\n';
    }
}

std::pair<NbdcInterval, NbdcInterval> figure2_pair(std::uint64_t seed) {
    GeneratorSpec spec;
    const Date completion = parse_date("2019-03-15");
    const auto make = [&](double severity, int score, std::uint64_t stream, const char* id) {
        Rng rng(derive_seed(seed, stream));
        const auto params = trace_params(spec, spec.trace.base_level, 0.0, severity);
        std::vector<double> sequence;
        for (long d = 0; d < kWindowDays; ++d) {
            const auto hours = simulate_day(params, d, rng);
            sequence.insert(sequence.end(), hours.begin(), hours.end());
        }
        Phq8Record phq{id, completion, score, 0};
        return make_interval(id, phq, sequence);
    };
    return {make(-1.5, 7, 1, "mild"), make(2.5, 18, 2, "severe")};
}

}  // namespace proxiphene
