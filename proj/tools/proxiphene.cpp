// proxiphene: Bluetooth proximity features, association tests and PHQ-8 prediction.
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 file I/O, 4 model failure, 5 internal error.

#include "proxiphene/error.hpp"
#include "proxiphene/pipeline.hpp"
#include "proxiphene/provenance.hpp"

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

namespace {

using proxiphene::RunConfig;

constexpr int kExitInternal = 5;

void parse_bands(const std::string& text, RunConfig& cfg) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw proxiphene::Error(proxiphene::ErrorKind::usage, "--fd-bands expects LF_MF,MF_HF such as 0.75,1.25");
    try {
        cfg.bands.lf_mf_edge = std::stod(text.substr(0, comma));
        cfg.bands.mf_hf_edge = std::stod(text.substr(comma + 1));
    } catch (const std::exception&) {
        throw proxiphene::Error(proxiphene::ErrorKind::usage, "--fd-bands edges must be numbers");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bluetooth proximity phenotyping: ingest, features, association tests, PHQ-8 prediction"};
    app.set_version_flag("--version", std::string(proxiphene::kToolVersion));
    app.require_subcommand(1);

    RunConfig cfg;
    int quiet = 0;
    std::string fd_bands;
    bool no_dc_in_lf = false;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
        sub->add_flag("-q,--quiet", quiet, "Suppress progress messages");
    };
    const auto feature_opts = [&](CLI::App* sub) {
        sub->add_option("--mse-m", cfg.mse.m, "Sample entropy template length")->capture_default_str();
        sub->add_option("--mse-r-factor", cfg.mse.r_factor, "Tolerance as a fraction of the scale-1 SD")
            ->capture_default_str();
        sub->add_option("--mse-max-scale", cfg.mse.max_scale, "Largest coarse-graining scale")->capture_default_str();
        sub->add_option("--fd-bands", fd_bands, "LF/MF and MF/HF edges in cycles/day (default 0.75,1.25)");
        sub->add_flag("--no-dc-in-lf", no_dc_in_lf, "Exclude the DC bin from the LF band");
    };
    const auto model_opts = [&](CLI::App* sub) {
        sub->add_option("--features", cfg.features, "features.csv")->required();
        sub->add_option("--demo", cfg.demographics, "demographics.csv")->required();
    };
    const auto mcmc_opts = [&](CLI::App* sub) {
        sub->add_option("--chains", cfg.mcmc.chains, "MCMC chains")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--iterations", cfg.mcmc.iterations, "MCMC iterations per chain including burn-in")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--burn-in", cfg.mcmc.burn_in, "Discarded iterations per chain")->capture_default_str();
        sub->add_flag("--clip", cfg.clip_predictions, "Clip predictions to 0-24");
    };

    auto* ingest = app.add_subcommand("ingest", "Assemble 14-day intervals from scans and PHQ-8 records");
    ingest->add_option("--scans", cfg.scans, "scans.csv")->required();
    ingest->add_option("--phq8", cfg.phq8, "phq8.csv")->required();
    ingest->add_option("--demo", cfg.demographics, "demographics.csv (optional, validation only)");
    ingest->add_option("--cutoff", cfg.cutoff, "Exclude PHQ-8 records on or after this date")->capture_default_str();
    ingest->add_option("--tz", cfg.timezone, "IANA time zone for local days")->capture_default_str();
    ingest->add_option("--out", cfg.out, "intervals.jsonl (rejections.csv is written alongside)")->required();
    common(ingest);

    auto* extract = app.add_subcommand("extract", "Compute the 49 interval features");
    extract->add_option("--intervals", cfg.intervals, "intervals.jsonl")->required();
    extract->add_option("--out", cfg.out, "features.csv")->required();
    feature_opts(extract);
    common(extract);

    auto* associate = app.add_subcommand("associate", "Per-feature random-intercept models with BH adjustment");
    model_opts(associate);
    associate->add_option("--out", cfg.out, "associations.csv")->required();
    common(associate);

    auto* lrt = app.add_subcommand("lrt", "Nested model likelihood ratio tests");
    model_opts(lrt);
    lrt->add_option("--out", cfg.out, "lrt.json")->required();
    common(lrt);

    auto* predict = app.add_subcommand("predict", "Time-series cross-validated PHQ-8 prediction");
    model_opts(predict);
    predict->add_option("--scheme", cfg.scheme, "lao, loo or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"lao", "loo", "both"}));
    predict->add_option("--model", cfg.model, "hblr, hblr-stat, lasso, baseline or all")
        ->capture_default_str()
        ->check(CLI::IsMember({"hblr", "hblr-stat", "lasso", "baseline", "all"}));
    predict->add_option("--out", cfg.out, "report.json")->required();
    mcmc_opts(predict);
    common(predict);

    auto* audit = app.add_subcommand("cv-audit", "Dump every cross-validation split");
    model_opts(audit);
    audit->add_option("--scheme", cfg.scheme, "lao, loo or both")
        ->capture_default_str()
        ->check(CLI::IsMember({"lao", "loo", "both"}));
    audit->add_option("--out", cfg.out, "splits.json")->required();
    common(audit);

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort with known ground truth");
    simulate->add_option("--spec", cfg.spec, "Generator spec JSON (defaults when omitted)");
    simulate->add_option("--out-dir", cfg.out_dir, "Output directory")->required();
    common(simulate);

    auto* report = app.add_subcommand("report", "Render report.md and plot data");
    report->add_option("--features", cfg.features, "features.csv")->required();
    report->add_option("--associations", cfg.associations, "associations.csv")->required();
    report->add_option("--lrt", cfg.lrt, "lrt.json")->required();
    report->add_option("--metrics", cfg.metrics, "Prediction report JSON")->required();
    report->add_option("--intervals", cfg.intervals, "intervals.jsonl (for spectra)");
    report->add_option("--out-dir", cfg.out_dir, "Output directory")->required();
    common(report);

    auto* all = app.add_subcommand("run-all", "Run every step; simulates a cohort when --scans is omitted");
    all->add_option("--scans", cfg.scans, "scans.csv");
    all->add_option("--phq8", cfg.phq8, "phq8.csv");
    all->add_option("--demo", cfg.demographics, "demographics.csv");
    all->add_option("--spec", cfg.spec, "Generator spec JSON used when simulating");
    all->add_option("--cutoff", cfg.cutoff, "Exclude PHQ-8 records on or after this date")->capture_default_str();
    all->add_option("--tz", cfg.timezone, "IANA time zone for local days")->capture_default_str();
    all->add_option("--out-dir", cfg.out_dir, "Output directory")->required();
    feature_opts(all);
    mcmc_opts(all);
    common(all);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(proxiphene::ErrorKind::usage);
    }

    cfg.bands.dc_in_lf = !no_dc_in_lf;
    cfg.verbosity = quiet > 0 ? 0 : 1;

    const std::map<CLI::App*, void (*)(const RunConfig&, std::ostream&)> steps = {
        {ingest, proxiphene::run_ingest},     {extract, proxiphene::run_extract},   {associate, proxiphene::run_associate},
        {lrt, proxiphene::run_lrt},           {predict, proxiphene::run_predict},   {audit, proxiphene::run_cv_audit},
        {simulate, proxiphene::run_simulate}, {report, proxiphene::run_report},     {all, proxiphene::run_all},
    };
    try {
        if (!fd_bands.empty()) parse_bands(fd_bands, cfg);
        for (const auto& [sub, run] : steps) {
            if (sub->parsed()) {
                cfg.subcommand = sub->get_name();
                if (cfg.mcmc.burn_in < 0 || cfg.mcmc.burn_in >= cfg.mcmc.iterations) {
                    std::cerr << "error: --burn-in must be in [0, iterations)\n";
                    return static_cast<int>(proxiphene::ErrorKind::usage);
                }
                run(cfg, std::cerr);
            }
        }
    } catch (const proxiphene::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(proxiphene::ErrorKind::input);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return 0;
}
