#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace mamnet {

/// Binary confusion counts with positive = anomalous.
struct Confusion {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    Confusion& operator+=(const Confusion& other);
};

Confusion confusion(std::span<const int> labels, std::span<const int> predictions);

// Metrics return nullopt when their denominator is zero; reports render
// that as "n/a" rather than 0 or NaN.
std::optional<double> accuracy(const Confusion& c);
std::optional<double> recall(const Confusion& c);
std::optional<double> precision(const Confusion& c);
std::optional<double> f1(const Confusion& c);

double mae(std::span<const double> predictions, std::span<const double> actuals);
double mse(std::span<const double> predictions, std::span<const double> actuals);

/// Regularized incomplete beta I_x(a, b), evaluated with a Lentz continued
/// fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

/// Inverse CDF by bisection over the incomplete-beta CDF, tolerance 1e-9.
double student_t_quantile(double p, double df);

struct Interval {
    double mean = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// mean +- t_{(1+level)/2, n-1} * s / sqrt(n) with sample standard deviation
/// s. Requires n >= 2; a zero-variance sample degenerates to [mean, mean].
Interval confidence_interval(std::span<const double> values, double level = 0.95);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
};

/// Welch's two-sample t-test with Welch-Satterthwaite degrees of freedom and
/// a two-sided p-value. When both variances are zero: p = 1 if the means are
/// equal, p = 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace mamnet
