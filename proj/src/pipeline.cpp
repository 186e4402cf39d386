#include "proxiphene/pipeline.hpp"

#include "proxiphene/association.hpp"
#include "proxiphene/csv.hpp"
#include "proxiphene/error.hpp"
#include "proxiphene/parallel.hpp"
#include "proxiphene/provenance.hpp"
#include "proxiphene/synthetic.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace proxiphene {

namespace fs = std::filesystem;

namespace {

void info(const RunConfig& c, std::ostream& log, const std::string& message) {
    if (c.verbosity > 0) log << message << '\n';
}

void require_path(const fs::path& path, const char* flag, const char* what) {
    if (path.empty()) throw Error(ErrorKind::usage, std::string("missing ") + flag + " (" + what + ")");
}

void require_artifact(const fs::path& path, const char* flag, const char* step) {
    require_path(path, flag, step);
    if (!fs::exists(path)) {
        throw io_error(path.string() + " not found; run `proxiphene " + step + "` first or pass " + flag);
    }
}

CsvTable read_table(const fs::path& path) {
    if (!fs::exists(path)) throw io_error("input file not found: " + path.string());
    return read_csv_file(path);
}

Provenance provenance(const RunConfig& c, const std::string& step) {
    Provenance p;
    p.step = step;
    p.config = c.to_json();
    p.seed = c.seed;
    return p;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw input_error(path.string() + ": " + e.what());
    }
}

std::vector<CvScheme> schemes_of(const std::string& scheme) {
    if (scheme == "both") return {CvScheme::lao, CvScheme::loo};
    return {parse_scheme(scheme)};
}

Cohort load_cohort(const RunConfig& c) {
    require_path(c.features, "--features", "features.csv");
    require_path(c.demographics, "--demo", "demographics.csv");
    const auto features = load_features(c.features);
    const auto demographics = load_demographics(c.demographics);
    return build_prediction_cohort(features, demographics);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    const auto p = [](const fs::path& path) { return path.empty() ? nlohmann::json(nullptr) : nlohmann::json(path.generic_string()); };
    return {{"subcommand", subcommand},
            {"scans", p(scans)},
            {"phq8", p(phq8)},
            {"demographics", p(demographics)},
            {"intervals", p(intervals)},
            {"features", p(features)},
            {"associations", p(associations)},
            {"lrt", p(lrt)},
            {"metrics", p(metrics)},
            {"spec", p(spec)},
            {"out", p(out)},
            {"out_dir", p(out_dir)},
            {"cutoff", cutoff},
            {"timezone", timezone},
            {"mse", {{"m", mse.m}, {"r_factor", mse.r_factor}, {"max_scale", mse.max_scale}}},
            {"bands", {{"lf_mf_edge", bands.lf_mf_edge}, {"mf_hf_edge", bands.mf_hf_edge}, {"dc_in_lf", bands.dc_in_lf}}},
            {"model", model},
            {"scheme", scheme},
            {"seed", seed},
            {"clip_predictions", clip_predictions},
            {"mcmc", {{"chains", mcmc.chains}, {"iterations", mcmc.iterations}, {"burn_in", mcmc.burn_in}}}};
}

CvOptions RunConfig::cv_options() const {
    CvOptions o;
    o.seed = seed;
    o.mcmc = mcmc;
    o.clip_predictions = clip_predictions;
    return o;
}

LoadedDataset load_dataset(const fs::path& scans, const fs::path& phq8, const fs::path& demographics) {
    LoadedDataset d;
    d.scans = parse_scans(read_table(scans), d.validation);
    d.phq8 = parse_phq8(read_table(phq8), d.validation);
    if (!demographics.empty()) d.demographics = parse_demographics(read_table(demographics), d.validation);
    d.validation.merge(validate_dataset(d.scans, d.phq8, d.demographics, !demographics.empty()));
    if (!d.validation.accepted()) throw input_error("input validation failed:\n" + d.validation.summary());
    return d;
}

DemographicsIndex load_demographics(const fs::path& path) {
    ValidationReport report;
    const auto rows = parse_demographics(read_table(path), report);
    report.merge(validate_dataset({}, {}, rows));
    if (!report.accepted()) throw input_error("input validation failed:\n" + report.summary());
    return index_demographics(rows);
}

std::vector<FeatureVector> load_features(const fs::path& path) {
    if (!fs::exists(path)) throw io_error("input file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    return read_features_csv(in, path.string());
}

std::vector<NbdcInterval> load_intervals(const fs::path& path) {
    if (!fs::exists(path)) throw io_error("input file not found: " + path.string());
    std::ifstream in(path, std::ios::binary);
    return read_intervals_jsonl(in);
}

IntervalAssembly ingest_records(std::span<const ScanRecord> scans, std::span<const Phq8Record> phq8s, Date cutoff,
                                const TimeZone& zone) {
    const auto days = bin_scans_to_days(scans, zone);
    return assemble_intervals(days, phq8s, cutoff);
}

std::vector<FeatureVector> extract_all(std::span<const NbdcInterval> intervals, const FeatureConfig& config) {
    std::vector<FeatureVector> out(intervals.size());
    parallel_for(intervals.size(), [&](std::size_t i) { out[i] = extract_features(intervals[i], config); });
    return out;
}

PredictionTable run_prediction(const Cohort& cohort, std::span<const std::string> models,
                               std::span<const CvScheme> schemes, const CvOptions& options) {
    auto table = empty_prediction_table();
    for (const auto& name : models) {
        const auto spec = model_spec(name);
        for (const auto scheme : schemes) {
            const auto splits = make_splits(cohort, scheme);
            const auto result = run_cv(cohort, splits, spec, options);
            table.set(spec.name, spec.label, result.metrics, result.diagnostics);
        }
    }
    return table;
}

void run_ingest(const RunConfig& c, std::ostream& log) {
    require_path(c.scans, "--scans", "scans.csv");
    require_path(c.phq8, "--phq8", "phq8.csv");
    require_path(c.out, "--out", "intervals.jsonl");
    const Date cutoff = parse_date(c.cutoff);
    const TimeZone zone = c.timezone == "UTC" ? TimeZone::utc() : TimeZone(c.timezone);
    const auto data = load_dataset(c.scans, c.phq8, c.demographics);
    for (const auto& w : data.validation.warnings) info(c, log, "warning: " + w.table + ":" + std::to_string(w.line) + ": " + w.message);

    const auto assembly = ingest_records(data.scans, data.phq8, cutoff, zone);
    auto meta = provenance(c, "ingest");
    meta.add_input("scans", c.scans);
    meta.add_input("phq8", c.phq8);
    if (!c.demographics.empty()) meta.add_input("demographics", c.demographics);
    const auto meta_json = meta.to_json();
    {
        auto out = open_output(c.out);
        write_intervals_jsonl(out, assembly.intervals, &meta_json);
    }
    const fs::path rejections = c.out.parent_path() / "rejections.csv";
    {
        auto out = open_output(rejections);
        for (const auto& line : meta.comment_lines()) out << "# " << line << '\n';
        write_rejections_csv(out, assembly.rejections);
    }
    info(c, log, "ingest: " + std::to_string(assembly.intervals.size()) + " intervals, " +
                     std::to_string(assembly.rejections.size()) + " rejected -> " + c.out.string());
}

void run_extract(const RunConfig& c, std::ostream& log) {
    require_path(c.intervals, "--intervals", "intervals.jsonl");
    require_path(c.out, "--out", "features.csv");
    if (c.mse.m < 1 || c.mse.r_factor <= 0.0 || c.mse.max_scale < 1) {
        throw Error(ErrorKind::usage, "invalid MSE parameters");
    }
    if (!(c.bands.lf_mf_edge > 0.0 && c.bands.lf_mf_edge < c.bands.mf_hf_edge && c.bands.mf_hf_edge < 12.0)) {
        throw Error(ErrorKind::usage, "band edges must satisfy 0 < LF/MF < MF/HF < 12 cycles/day");
    }
    const auto intervals = load_intervals(c.intervals);
    const auto features = extract_all(intervals, c.feature_config());
    auto meta = provenance(c, "extract");
    meta.add_input("intervals", c.intervals);
    auto out = open_output(c.out);
    write_features_csv(out, features, meta.comment_lines());
    std::size_t flagged = 0;
    for (const auto& f : features) flagged += f.all_finite() ? 0 : 1;
    info(c, log, "extract: " + std::to_string(features.size()) + " feature rows (" + std::to_string(flagged) +
                     " with non-finite values) -> " + c.out.string());
}

void run_associate(const RunConfig& c, std::ostream& log) {
    require_path(c.features, "--features", "features.csv");
    require_path(c.demographics, "--demo", "demographics.csv");
    require_path(c.out, "--out", "associations.csv");
    const auto features = load_features(c.features);
    const auto demographics = load_demographics(c.demographics);
    const auto results = pairwise_associations(features, demographics);
    auto meta = provenance(c, "associate");
    meta.add_input("features", c.features);
    meta.add_input("demographics", c.demographics);
    auto out = open_output(c.out);
    write_associations_csv(out, results, meta.comment_lines());
    std::size_t significant = 0;
    for (const auto& r : results) significant += !r.skipped && r.adjusted_p < kSignificanceLevel ? 1 : 0;
    info(c, log, "associate: " + std::to_string(significant) + " significant features -> " + c.out.string());
}

void run_lrt(const RunConfig& c, std::ostream& log) {
    require_path(c.features, "--features", "features.csv");
    require_path(c.demographics, "--demo", "demographics.csv");
    require_path(c.out, "--out", "lrt.json");
    const auto features = load_features(c.features);
    const auto demographics = load_demographics(c.demographics);
    const auto comparison = nested_model_lrts(features, demographics);
    auto meta = provenance(c, "lrt");
    meta.add_input("features", c.features);
    meta.add_input("demographics", c.demographics);
    auto j = lrt_to_json(comparison);
    j["meta"] = meta.to_json();
    write_json(c.out, j);
    info(c, log, "lrt: -> " + c.out.string());
}

void run_predict(const RunConfig& c, std::ostream& log) {
    require_path(c.out, "--out", "report.json");
    const auto cohort = load_cohort(c);
    if (cohort.participants.size() < 2) {
        throw model_error("prediction cohort has " + std::to_string(cohort.participants.size()) +
                          " participants; at least 2 are required");
    }
    std::vector<std::string> models;
    if (c.model == "all") {
        models = model_names();
    } else {
        models = {model_spec(c.model).name};
    }
    const auto schemes = schemes_of(c.scheme);
    const auto table = run_prediction(cohort, models, schemes, c.cv_options());
    auto meta = provenance(c, "predict");
    meta.add_input("features", c.features);
    meta.add_input("demographics", c.demographics);
    auto j = to_json(table);
    j["cohort"] = {{"participants", cohort.participants.size()}, {"intervals", cohort.rows.size()},
                   {"max_intervals", cohort.max_intervals()}};
    j["meta"] = meta.to_json();
    write_json(c.out, j);
    for (const auto& row : table.rows) {
        for (const auto* m : {&row.lao, &row.loo}) {
            if (*m) info(c, log, "predict: " + row.label + ", " + (*m)->scheme + ": " + format_metrics(**m));
        }
        for (const auto& d : row.diagnostics) info(c, log, "warning: " + row.model + ": " + d);
    }
}

void run_cv_audit(const RunConfig& c, std::ostream& log) {
    require_path(c.out, "--out", "splits.json");
    const auto cohort = load_cohort(c);
    nlohmann::json splits = nlohmann::json::array();
    bool clean = true;
    for (const auto scheme : schemes_of(c.scheme)) {
        const auto s = make_splits(cohort, scheme);
        for (auto& entry : splits_to_json(cohort, s)) {
            clean = clean && entry.at("leakage_free").get<bool>();
            splits.push_back(std::move(entry));
        }
    }
    auto meta = provenance(c, "cv-audit");
    meta.add_input("features", c.features);
    meta.add_input("demographics", c.demographics);
    write_json(c.out, {{"meta", meta.to_json()}, {"leakage_free", clean}, {"splits", splits}});
    info(c, log, "cv-audit: " + std::to_string(splits.size()) + " splits -> " + c.out.string());
    if (!clean) throw model_error("cv-audit found leaking splits; see " + c.out.string());
}

void run_simulate(const RunConfig& c, std::ostream& log) {
    require_path(c.out_dir, "--out-dir", "output directory");
    GeneratorSpec spec;
    if (!c.spec.empty()) spec = generator_spec_from_json(read_json(c.spec));
    spec.seed = c.seed;
    const auto cohort = generate_cohort(spec);
    write_cohort(cohort, c.out_dir);
    info(c, log, "simulate: " + std::to_string(cohort.demographics.size()) + " participants, " +
                     std::to_string(cohort.phq8.size()) + " PHQ-8 records -> " + c.out_dir.string());
}

void run_report(const RunConfig& c, std::ostream& log) {
    require_path(c.out_dir, "--out-dir", "report directory");
    require_artifact(c.features, "--features", "extract");
    require_artifact(c.associations, "--associations", "associate");
    require_artifact(c.lrt, "--lrt", "lrt");
    require_artifact(c.metrics, "--metrics", "predict");

    auto meta = provenance(c, "report");
    meta.add_input("features", c.features);
    meta.add_input("associations", c.associations);
    meta.add_input("lrt", c.lrt);
    meta.add_input("metrics", c.metrics);
    if (!c.intervals.empty()) meta.add_input("intervals", c.intervals);

    const auto features = load_features(c.features);
    ReportInputs in;
    {
        std::ifstream a(c.associations, std::ios::binary);
        in.associations = read_associations_csv(a, c.associations.string());
    }
    in.lrt = read_json(c.lrt);
    try {
        in.prediction = prediction_table_from_json(read_json(c.metrics));
    } catch (const nlohmann::json::exception& e) {
        throw input_error(c.metrics.string() + ": not a prediction report: " + e.what());
    }
    in.n_intervals = features.size();
    std::set<std::string> participants;
    for (const auto& f : features) participants.insert(f.participant_id);
    in.n_participants = participants.size();
    in.meta = meta.to_json();

    const auto lines = meta.comment_lines();
    {
        auto out = open_output(c.out_dir / "mse_profiles.csv");
        write_mse_profiles_csv(out, features, lines);
        in.plot_files.push_back("mse_profiles.csv");
    }
    if (!c.intervals.empty()) {
        require_artifact(c.intervals, "--intervals", "ingest");
        const auto intervals = load_intervals(c.intervals);
        auto out = open_output(c.out_dir / "spectra.csv");
        write_spectra_csv(out, intervals, lines);
        in.plot_files.push_back("spectra.csv");
    }
    if (features.size() >= 3) {
        auto out = open_output(c.out_dir / "spearman.csv");
        for (const auto& line : lines) out << "# " << line << '\n';
        write_spearman_csv(out, spearman_matrix(features));
        in.plot_files.push_back("spearman.csv");
    }
    write_text_file(c.out_dir / "report.md", render_report(in));
    info(c, log, "report: -> " + (c.out_dir / "report.md").string());
}

void run_all(const RunConfig& c, std::ostream& log) {
    require_path(c.out_dir, "--out-dir", "output directory");
    RunConfig base = c;
    if (base.scans.empty()) {
        RunConfig sim = c;
        sim.subcommand = "simulate";
        sim.out_dir = c.out_dir / "synthetic";
        run_simulate(sim, log);
        base.scans = sim.out_dir / "scans.csv";
        base.phq8 = sim.out_dir / "phq8.csv";
        base.demographics = sim.out_dir / "demographics.csv";
    }
    require_path(base.phq8, "--phq8", "phq8.csv");
    require_path(base.demographics, "--demo", "demographics.csv");
    base.intervals = c.out_dir / "intervals.jsonl";
    base.features = c.out_dir / "features.csv";
    base.associations = c.out_dir / "associations.csv";
    base.lrt = c.out_dir / "lrt.json";
    base.metrics = c.out_dir / "prediction.json";

    const auto step = [&](const char* name, fs::path out) {
        RunConfig s = base;
        s.subcommand = name;
        s.out = std::move(out);
        return s;
    };
    run_ingest(step("ingest", base.intervals), log);
    run_extract(step("extract", base.features), log);
    run_associate(step("associate", base.associations), log);
    run_lrt(step("lrt", base.lrt), log);
    {
        auto s = step("predict", base.metrics);
        s.model = "all";
        s.scheme = "both";
        run_predict(s, log);
    }
    {
        auto s = step("cv-audit", c.out_dir / "splits.json");
        s.scheme = "both";
        run_cv_audit(s, log);
    }
    {
        auto s = step("report", {});
        s.out_dir = c.out_dir;
        run_report(s, log);
    }
}

}  // namespace proxiphene
