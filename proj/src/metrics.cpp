#include "proxiphene/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace proxiphene {

MetricsReport evaluate(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size() || targets.empty()) {
        throw std::invalid_argument("evaluate: predictions and targets must be non-empty and equally long");
    }
    const double n = static_cast<double>(targets.size());
    double target_mean = 0.0;
    for (const double t : targets) target_mean += t;
    target_mean /= n;
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        sse += (targets[i] - predictions[i]) * (targets[i] - predictions[i]);
        sst += (targets[i] - target_mean) * (targets[i] - target_mean);
    }
    MetricsReport report;
    report.n_test = targets.size();
    report.rmse = std::sqrt(sse / n);
    if (sst > 0.0) report.r2 = 1.0 - sse / sst;
    return report;
}

}  // namespace proxiphene
