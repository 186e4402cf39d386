#include "proxiphene/cv.hpp"

#include "proxiphene/error.hpp"
#include "proxiphene/parallel.hpp"
#include "proxiphene/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

namespace proxiphene {

namespace {

std::size_t feature_count(FeatureSet features) {
    switch (features) {
        case FeatureSet::none: return 0;
        case FeatureSet::statistical: return kStatisticalFeatureCount;
        case FeatureSet::all: return kFeatureCount;
    }
    return 0;
}

Cohort assemble(std::vector<CohortRow> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const CohortRow& a, const CohortRow& b) {
        return std::tie(a.participant_id, a.date) < std::tie(b.participant_id, b.date);
    });
    Cohort cohort;
    for (auto& row : rows) {
        if (!cohort.rows.empty() && cohort.rows.back().participant_id == row.participant_id &&
            cohort.rows.back().date == row.date) {
            continue;
        }
        if (cohort.participants.empty() || cohort.participants.back() != row.participant_id) {
            cohort.participants.push_back(row.participant_id);
            cohort.by_participant.emplace_back();
        }
        row.id = cohort.rows.size();
        row.position = cohort.by_participant.back().size();
        cohort.by_participant.back().push_back(row.id);
        cohort.rows.push_back(std::move(row));
    }
    return cohort;
}

}  // namespace

std::size_t Cohort::max_intervals() const {
    std::size_t t = 0;
    for (const auto& ids : by_participant) t = std::max(t, ids.size());
    return t;
}

Cohort build_cohort(std::span<const FeatureVector> features, const DemographicsIndex& demographics) {
    std::vector<CohortRow> rows;
    for (const auto& fv : features) {
        const auto demo = demographics.find(fv.participant_id);
        if (demo == demographics.end()) continue;
        CohortRow row;
        row.participant_id = fv.participant_id;
        row.date = fv.date;
        row.target = fv.phq8;
        row.features = fv.values;
        row.covariates = {demo->second.age_years, demo->second.female_indicator(), demo->second.education_years};
        rows.push_back(std::move(row));
    }
    return assemble(std::move(rows));
}

std::vector<std::string> select_prediction_cohort(std::span<const FeatureVector> intervals) {
    std::map<std::string, std::set<Date>> dates;
    std::map<std::string, std::pair<int, int>> range;
    for (const auto& fv : intervals) {
        if (!dates[fv.participant_id].insert(fv.date).second) continue;
        auto [it, fresh] = range.try_emplace(fv.participant_id, fv.phq8, fv.phq8);
        if (!fresh) {
            it->second.first = std::min(it->second.first, fv.phq8);
            it->second.second = std::max(it->second.second, fv.phq8);
        }
    }
    std::vector<std::string> out;
    for (const auto& [id, r] : range) {
        if (dates[id].size() >= kMinCohortIntervals && r.second - r.first >= kMinCohortScoreRange) out.push_back(id);
    }
    return out;
}

Cohort build_prediction_cohort(std::span<const FeatureVector> features, const DemographicsIndex& demographics) {
    std::vector<FeatureVector> joined;
    for (const auto& fv : features) {
        if (demographics.contains(fv.participant_id)) joined.push_back(fv);
    }
    const auto keep = select_prediction_cohort(joined);
    const std::set<std::string> keep_set(keep.begin(), keep.end());
    std::vector<FeatureVector> selected;
    for (auto& fv : joined) {
        if (keep_set.contains(fv.participant_id)) selected.push_back(std::move(fv));
    }
    return build_cohort(selected, demographics);
}

std::string_view to_string(CvScheme scheme) { return scheme == CvScheme::lao ? "lao" : "loo"; }

CvScheme parse_scheme(std::string_view text) {
    if (text == "lao" || text == "LAO") return CvScheme::lao;
    if (text == "loo" || text == "LOO") return CvScheme::loo;
    throw std::invalid_argument("unknown CV scheme '" + std::string(text) + "' (expected lao or loo)");
}

std::vector<CvSplit> lao_splits(const Cohort& cohort) {
    std::vector<CvSplit> splits;
    const std::size_t t_max = cohort.max_intervals();
    for (std::size_t k = 2; k <= t_max; ++k) {
        CvSplit split;
        split.scheme = CvScheme::lao;
        split.iteration = k;
        for (const auto& ids : cohort.by_participant) {
            for (std::size_t pos = 0; pos < ids.size() && pos < k; ++pos) {
                (pos + 1 < k ? split.train : split.test).push_back(ids[pos]);
            }
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
        splits.push_back(std::move(split));
    }
    return splits;
}

std::vector<CvSplit> loo_splits(const Cohort& cohort) {
    std::vector<CvSplit> splits;
    for (std::size_t j = 0; j < cohort.by_participant.size(); ++j) {
        CvSplit split;
        split.scheme = CvScheme::loo;
        split.iteration = j + 1;
        for (std::size_t other = 0; other < cohort.by_participant.size(); ++other) {
            const auto& ids = cohort.by_participant[other];
            for (std::size_t pos = 0; pos < ids.size(); ++pos) {
                (other != j || pos < 2 ? split.train : split.test).push_back(ids[pos]);
            }
        }
        std::sort(split.train.begin(), split.train.end());
        splits.push_back(std::move(split));
    }
    return splits;
}

std::vector<CvSplit> make_splits(const Cohort& cohort, CvScheme scheme) {
    return scheme == CvScheme::lao ? lao_splits(cohort) : loo_splits(cohort);
}

std::string split_violation(const Cohort& cohort, const CvSplit& split) {
    std::set<std::size_t> train(split.train.begin(), split.train.end());
    std::map<std::string, std::size_t> latest_train;
    for (const auto id : split.train) {
        if (id >= cohort.rows.size()) return "unknown training row " + std::to_string(id);
        const auto& row = cohort.rows[id];
        auto& latest = latest_train[row.participant_id];
        latest = std::max(latest, row.position + 1);
    }
    for (const auto id : split.test) {
        if (id >= cohort.rows.size()) return "unknown test row " + std::to_string(id);
        if (train.contains(id)) return "row " + std::to_string(id) + " is in both training and test sets";
        const auto& row = cohort.rows[id];
        const auto it = latest_train.find(row.participant_id);
        if (it != latest_train.end() && it->second > row.position) {
            return "participant " + row.participant_id + ": training interval " + std::to_string(it->second) +
                   " is not earlier than test interval " + std::to_string(row.position + 1);
        }
    }
    return {};
}

nlohmann::json splits_to_json(const Cohort& cohort, std::span<const CvSplit> splits) {
    const auto rows_json = [&](const std::vector<std::size_t>& ids) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto id : ids) {
            const auto& r = cohort.rows[id];
            arr.push_back({{"row", id},
                           {"participant_id", r.participant_id},
                           {"date", format_date(r.date)},
                           {"interval", r.position + 1}});
        }
        return arr;
    };
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : splits) {
        const auto violation = split_violation(cohort, s);
        out.push_back({{"scheme", to_string(s.scheme)},
                       {"iteration", s.iteration},
                       {"n_train", s.train.size()},
                       {"n_test", s.test.size()},
                       {"leakage_free", violation.empty()},
                       {"violation", violation},
                       {"train", rows_json(s.train)},
                       {"test", rows_json(s.test)}});
    }
    return out;
}

const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names = {"baseline", "lasso", "hblr-stat", "hblr"};
    return names;
}

ModelSpec model_spec(std::string_view name) {
    if (name == "baseline") return {"baseline", "Baseline model", Estimator::hblr, FeatureSet::none};
    if (name == "hblr-stat") {
        return {"hblr-stat", "Hierarchical Bayesian linear (second-order statistical features)", Estimator::hblr,
                FeatureSet::statistical};
    }
    if (name == "hblr") {
        return {"hblr", "Hierarchical Bayesian linear (all Bluetooth features)", Estimator::hblr, FeatureSet::all};
    }
    if (name == "lasso") return {"lasso", "LASSO regression", Estimator::lasso, FeatureSet::all};
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

std::vector<std::string> design_columns(FeatureSet features) {
    std::vector<std::string> cols = {"last_phq8", "age", "female", "education_years"};
    for (std::size_t f = 0; f < feature_count(features); ++f) cols.push_back(feature_names()[f]);
    return cols;
}

SplitDesign make_split_design(const Cohort& cohort, const CvSplit& split, FeatureSet features) {
    SplitDesign d;
    d.columns = design_columns(features);
    const auto p = static_cast<Eigen::Index>(d.columns.size());
    const std::set<std::size_t> train_set(split.train.begin(), split.train.end());

    double target_mean = 0.0;
    for (const auto id : split.train) target_mean += cohort.rows[id].target;
    if (!split.train.empty()) target_mean /= static_cast<double>(split.train.size());

    // participant -> latest training interval row id
    std::map<std::string, std::size_t> latest;
    for (const auto id : split.train) {
        const auto& row = cohort.rows[id];
        auto [it, fresh] = latest.try_emplace(row.participant_id, id);
        if (!fresh && cohort.rows[it->second].position < row.position) it->second = id;
    }

    const auto fill = [&](const std::vector<std::size_t>& ids, bool training, Eigen::MatrixXd& z, Eigen::VectorXd& y,
                          std::vector<std::string>& groups) {
        z.resize(static_cast<Eigen::Index>(ids.size()), p);
        y.resize(static_cast<Eigen::Index>(ids.size()));
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const auto& row = cohort.rows[ids[r]];
            double last = target_mean;
            if (training) {
                if (row.position > 0) {
                    const auto& seq = cohort.by_participant[static_cast<std::size_t>(
                        std::lower_bound(cohort.participants.begin(), cohort.participants.end(), row.participant_id) -
                        cohort.participants.begin())];
                    const auto prev = seq[row.position - 1];
                    if (train_set.contains(prev)) last = cohort.rows[prev].target;
                }
            } else if (const auto it = latest.find(row.participant_id); it != latest.end()) {
                last = cohort.rows[it->second].target;
            }
            const auto i = static_cast<Eigen::Index>(r);
            z(i, 0) = last;
            z(i, 1) = row.covariates[0];
            z(i, 2) = row.covariates[1];
            z(i, 3) = row.covariates[2];
            for (Eigen::Index f = 4; f < p; ++f) z(i, f) = row.features[static_cast<std::size_t>(f - 4)];
            y(i) = row.target;
            groups.push_back(row.participant_id);
        }
    };
    fill(split.train, true, d.train_z, d.train_y, d.train_groups);
    fill(split.test, false, d.test_z, d.test_y, d.test_groups);
    d.train_ids = split.train;
    d.test_ids = split.test;

    // A column without spread in the training block carries no information; it is zeroed in
    // both blocks (scale 0) instead of being divided by a rounding-level SD.
    d.center = Eigen::VectorXd::Zero(p);
    d.scale = Eigen::VectorXd::Zero(p);
    const auto n = d.train_z.rows();
    for (Eigen::Index c = 0; c < p && n > 1; ++c) {
        const auto col = d.train_z.col(c).array();
        if (col.maxCoeff() == col.minCoeff()) continue;
        d.center(c) = col.mean();
        const double sd = std::sqrt((col - d.center(c)).square().sum() / static_cast<double>(n - 1));
        if (std::isfinite(sd) && sd > 0.0) d.scale(c) = sd;
    }
    const auto standardize = [&](Eigen::MatrixXd& z) {
        for (Eigen::Index c = 0; c < p; ++c) {
            if (d.scale(c) > 0.0) {
                z.col(c) = (z.col(c).array() - d.center(c)) / d.scale(c);
            } else {
                z.col(c).setZero();
            }
        }
    };
    standardize(d.train_z);
    standardize(d.test_z);
    return d;
}

FitPredict make_fit_predict(const ModelSpec& spec, const CvOptions& options) {
    if (spec.estimator == Estimator::lasso) {
        return [options](const SplitDesign& d, std::uint64_t, std::vector<std::string>&) {
            const auto sel = select_lasso_lambda(d.train_z, d.train_y, d.train_groups, 5, 50, 1e-3, options.lasso);
            const auto fit = fit_lasso(d.train_z, d.train_y, sel.lambda, options.lasso);
            const Eigen::VectorXd pred = (d.test_z * fit.beta).array() + fit.intercept;
            return std::vector<double>(pred.begin(), pred.end());
        };
    }
    return [options](const SplitDesign& d, std::uint64_t seed, std::vector<std::string>& diagnostics) {
        const auto data = HblrData::make(d.train_y, d.train_z, d.train_groups);
        McmcConfig mcmc = options.mcmc;
        mcmc.seed = seed;
        const auto posterior = fit_hblr(data, options.priors, mcmc);
        if (!posterior.converged) diagnostics.push_back("max R-hat " + std::to_string(posterior.max_rhat));
        const auto summary = predict_hblr(posterior, d.test_z, d.test_groups, derive_seed(seed, 0xfeed));
        std::vector<double> out;
        out.reserve(summary.size());
        for (const auto& s : summary) out.push_back(s.mean);
        return out;
    };
}

CvResult run_cv(const Cohort& cohort, std::span<const CvSplit> splits, FeatureSet features, const FitPredict& model,
                const CvOptions& options, const std::string& model_name) {
    struct SplitOutput {
        std::vector<PooledPrediction> predictions;
        std::vector<std::string> diagnostics;
    };
    std::vector<SplitOutput> outputs(splits.size());
    parallel_for(splits.size(), [&](std::size_t s) {
        const auto& split = splits[s];
        if (split.test.empty()) return;
        const auto violation = split_violation(cohort, split);
        if (!violation.empty()) throw model_error("split " + std::to_string(split.iteration) + ": " + violation);
        const auto design = make_split_design(cohort, split, features);
        std::vector<std::string> diagnostics;
        std::vector<double> predicted;
        try {
            predicted = model(design, derive_seed(options.seed, split.iteration), diagnostics);
        } catch (const std::exception& e) {
            throw model_error(std::string(to_string(split.scheme)) + " split " + std::to_string(split.iteration) +
                              " (" + std::to_string(design.train_ids.size()) + " training rows): " + e.what());
        }
        if (predicted.size() != design.test_ids.size()) {
            throw model_error("model returned " + std::to_string(predicted.size()) + " predictions for " +
                              std::to_string(design.test_ids.size()) + " test rows");
        }
        auto& out = outputs[s];
        for (std::size_t r = 0; r < predicted.size(); ++r) {
            const auto& row = cohort.rows[design.test_ids[r]];
            double value = predicted[r];
            if (options.clip_predictions) value = std::clamp(value, double(kPhq8Min), double(kPhq8Max));
            out.predictions.push_back({row.id, row.participant_id, split.iteration, value, row.target});
        }
        for (auto& msg : diagnostics) {
            out.diagnostics.push_back(std::string(to_string(split.scheme)) + " split " + std::to_string(split.iteration) +
                                      ": " + msg);
        }
    });

    CvResult result;
    result.scheme = splits.empty() ? CvScheme::lao : splits.front().scheme;
    result.model = model_name;
    for (auto& out : outputs) {
        result.predictions.insert(result.predictions.end(), out.predictions.begin(), out.predictions.end());
        result.diagnostics.insert(result.diagnostics.end(), out.diagnostics.begin(), out.diagnostics.end());
    }
    std::sort(result.predictions.begin(), result.predictions.end(), [](const auto& a, const auto& b) {
        return std::tie(a.row_id, a.iteration) < std::tie(b.row_id, b.iteration);
    });
    if (result.predictions.empty()) throw model_error("cross-validation produced no test predictions");
    std::vector<double> yhat, y;
    for (const auto& p : result.predictions) {
        yhat.push_back(p.predicted);
        y.push_back(p.target);
    }
    result.metrics = evaluate(yhat, y);
    result.metrics.scheme = std::string(to_string(result.scheme));
    result.metrics.model = model_name;
    return result;
}

CvResult run_cv(const Cohort& cohort, std::span<const CvSplit> splits, const ModelSpec& spec, const CvOptions& options) {
    return run_cv(cohort, splits, spec.features, make_fit_predict(spec, options), options, spec.name);
}

}  // namespace proxiphene
