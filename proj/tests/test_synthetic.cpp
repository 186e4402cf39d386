#include "proxiphene/error.hpp"
#include "proxiphene/pipeline.hpp"
#include "proxiphene/stats.hpp"
#include "proxiphene/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace proxiphene;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("proxiphene-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

IntervalAssembly ingest(const SyntheticCohort& c) {
    return ingest_records(c.scans, c.phq8, parse_date("2020-02-01"), TimeZone::utc());
}

}  // namespace

TEST_CASE("same seed writes byte-identical files") {
    GeneratorSpec spec;
    spec.n_participants = 5;
    spec.seed = 99;
    const auto a = scratch("synth-a");
    const auto b = scratch("synth-b");
    write_cohort(generate_cohort(spec), a);
    write_cohort(generate_cohort(spec), b);
    for (const char* f : {"scans.csv", "phq8.csv", "demographics.csv", "ground_truth.json"}) {
        INFO(f);
        CHECK(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    spec.seed = 100;
    const auto c = scratch("synth-c");
    write_cohort(generate_cohort(spec), c);
    CHECK(slurp(a / "scans.csv") != slurp(c / "scans.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
}

TEST_CASE("generated data ingests cleanly") {
    GeneratorSpec spec;
    spec.n_participants = 12;
    spec.seed = 3;
    const auto cohort = generate_cohort(spec);
    const auto report = validate_dataset(cohort.scans, cohort.phq8, cohort.demographics);
    CHECK(report.fatal.empty());
    const auto assembly = ingest(cohort);
    CHECK(assembly.rejections.empty());
    CHECK(assembly.intervals.size() == cohort.phq8.size());
    for (const auto& i : assembly.intervals) CHECK_NOTHROW(check_interval(i));
    for (const auto& s : cohort.scans) CHECK(s.device_count >= 0);
    for (const auto& p : cohort.phq8) {
        CHECK(p.score >= 0);
        CHECK(p.score <= 24);
    }
}

TEST_CASE("no missingness gives fourteen valid days per interval") {
    GeneratorSpec spec;
    spec.n_participants = 6;
    spec.trace.missing_rate = 0.0;
    spec.trace.day_missing_rate = 0.0;
    const auto cohort = generate_cohort(spec);
    const auto assembly = ingest(cohort);
    REQUIRE(assembly.intervals.size() == cohort.phq8.size());
    for (const auto& i : assembly.intervals) {
        CHECK(i.n_valid_days() == 14);
        CHECK(i.sequence.size() == 14 * 24);
    }
    CHECK(cohort.scans.size() == cohort.phq8.size() * 14 * 24);
}

TEST_CASE("severity to PHQ-8 mapping is monotone") {
    const PhqSpec phq;
    double previous = expected_phq8(phq, -5.0);
    for (double s = -5.0; s <= 5.0; s += 0.01) {
        const double e = expected_phq8(phq, s);
        CHECK(e >= previous);
        previous = e;
    }
    GeneratorSpec bad;
    bad.phq.slope = -1.0;
    CHECK_THROWS_AS(validate_generator_spec(bad), Error);
}

TEST_CASE("constant severity without irregularity linkage gives stable FD percentages") {
    GeneratorSpec spec;
    spec.n_participants = 1;
    spec.min_intervals = 6;
    spec.max_intervals = 6;
    spec.severity.between_sd = 0.0;
    spec.severity.noise_sd = 0.0;
    spec.linkage.irregularity = 0.0;
    spec.trace.missing_rate = 0.0;
    const auto lf = *feature_index("LF_pct");
    const auto mf = *feature_index("MF_pct");
    const auto hf = *feature_index("HF_pct");
    std::vector<std::array<double, 3>> sums(6, {0.0, 0.0, 0.0});
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
        spec.seed = static_cast<std::uint64_t>(1000 + s);
        const auto features = extract_all(ingest(generate_cohort(spec)).intervals);
        REQUIRE(features.size() == 6);
        for (std::size_t k = 0; k < 6; ++k) {
            sums[k][0] += features[k].values[lf] / seeds;
            sums[k][1] += features[k].values[mf] / seeds;
            sums[k][2] += features[k].values[hf] / seeds;
        }
    }
    for (std::size_t k = 1; k < 6; ++k) {
        for (std::size_t b = 0; b < 3; ++b) CHECK(std::fabs(sums[k][b] - sums[0][b]) < 0.02);
    }
}

TEST_CASE("severity is negatively correlated with Mean_Mean") {
    const auto mean_mean = *feature_index("Mean_Mean");
    int negative = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        GeneratorSpec spec;
        spec.n_participants = 15;
        spec.seed = 500 + s;
        const auto cohort = generate_cohort(spec);
        std::map<std::pair<std::string, std::string>, double> truth;
        for (const auto& p : cohort.ground_truth["participants"]) {
            for (const auto& i : p["intervals"]) {
                truth[{p["participant_id"].get<std::string>(), i["phq8_date"].get<std::string>()}] =
                    i["severity"].get<double>();
            }
        }
        const auto features = extract_all(ingest(cohort).intervals);
        std::vector<double> sev;
        std::vector<double> mm;
        for (const auto& f : features) {
            sev.push_back(truth.at({f.participant_id, format_date(f.date)}));
            mm.push_back(f.values[mean_mean]);
        }
        if (pearson(sev, mm) < 0.0) ++negative;
    }
    CHECK(negative >= 19);
}

TEST_CASE("generator spec JSON") {
    GeneratorSpec spec;
    spec.n_participants = 7;
    spec.trace.amplitude = 3.5;
    spec.linkage.level = -2.0;
    const auto j = to_json(spec);
    const auto back = generator_spec_from_json(j);
    CHECK(to_json(back).dump() == j.dump());

    const auto partial = generator_spec_from_json(nlohmann::json{{"n_participants", 3}, {"phq8", {{"slope", 2.0}}}});
    CHECK(partial.n_participants == 3);
    CHECK(partial.phq.slope == 2.0);
    CHECK(partial.phq.intercept == PhqSpec{}.intercept);

    CHECK_THROWS_AS(generator_spec_from_json(nlohmann::json{{"n_participant", 3}}), Error);
    CHECK_THROWS_AS(generator_spec_from_json(nlohmann::json{{"trace", {{"missing_rate", 1.5}}}}), Error);
    CHECK_THROWS_AS(generator_spec_from_json(nlohmann::json{{"trace", {{"colour", 1}}}}), Error);
}
