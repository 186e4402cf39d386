#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace proxiphene {

/// Pooled out-of-sample scores. R^2 is centred on the pooled test-target mean and is
/// absent when the test targets have zero variance.
struct MetricsReport {
    std::optional<double> r2;
    double rmse = 0.0;
    std::size_t n_test = 0;
    std::string scheme;
    std::string model;
};

/// Throws std::invalid_argument on length mismatch or empty input.
MetricsReport evaluate(std::span<const double> predictions, std::span<const double> targets);

}  // namespace proxiphene
