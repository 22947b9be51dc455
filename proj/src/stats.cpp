#include "mamnet/stats.hpp"

#include <cmath>
#include <limits>

#include "mamnet/error.hpp"

namespace mamnet {

Confusion& Confusion::operator+=(const Confusion& other) {
    tp += other.tp;
    tn += other.tn;
    fp += other.fp;
    fn += other.fn;
    return *this;
}

Confusion confusion(std::span<const int> labels, std::span<const int> predictions) {
    if (labels.size() != predictions.size()) {
        throw DataError("confusion: label and prediction counts differ");
    }
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool actual = labels[i] != 0;
        const bool predicted = predictions[i] != 0;
        if (actual && predicted) ++c.tp;
        else if (actual && !predicted) ++c.fn;
        else if (!actual && predicted) ++c.fp;
        else ++c.tn;
    }
    return c;
}

std::optional<double> accuracy(const Confusion& c) {
    const std::size_t n = c.total();
    if (n == 0) return std::nullopt;
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
}

std::optional<double> recall(const Confusion& c) {
    if (c.tp + c.fn == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> precision(const Confusion& c) {
    if (c.tp + c.fp == 0) return std::nullopt;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

std::optional<double> f1(const Confusion& c) {
    const auto p = precision(c);
    const auto r = recall(c);
    if (!p || !r || *p + *r == 0.0) return std::nullopt;
    return 2.0 * *p * *r / (*p + *r);
}

double mae(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.empty() || predictions.size() != actuals.size()) {
        throw DataError("mae: empty input or length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        acc += std::abs(predictions[i] - actuals[i]);
    }
    return acc / static_cast<double>(predictions.size());
}

double mse(std::span<const double> predictions, std::span<const double> actuals) {
    if (predictions.empty() || predictions.size() != actuals.size()) {
        throw DataError("mse: empty input or length mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - actuals[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (df <= 0.0) throw ConfigError("student_t_cdf: df must be positive");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (p <= 0.0 || p >= 1.0) throw ConfigError("student_t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    // Bracket, then bisect the CDF to 1e-9.
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, df) > p) lo *= 2.0;
    while (student_t_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Interval confidence_interval(std::span<const double> values, double level) {
    if (values.size() < 2) throw DataError("confidence_interval: need at least 2 values");
    if (level <= 0.0 || level >= 1.0) {
        throw ConfigError("confidence_interval: level must be in (0, 1)");
    }
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n - 1.0;
    if (var == 0.0) return {mean, mean, mean};
    const double t = student_t_quantile(0.5 * (1.0 + level), n - 1.0);
    const double half = t * std::sqrt(var / n);
    return {mean, mean - half, mean + half};
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw DataError("welch_t_test: each sample needs at least 2 values");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double ma = 0.0, mb = 0.0;
    for (double v : a) ma += v;
    for (double v : b) mb += v;
    ma /= na;
    mb /= nb;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;

    if (va == 0.0 && vb == 0.0) {
        // Degenerate convention: identical constants agree, different
        // constants differ with certainty.
        if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
        const double inf = std::numeric_limits<double>::infinity();
        return {ma > mb ? inf : -inf, na + nb - 2.0, 0.0};
    }

    const double sa = va / na;
    const double sb = vb / nb;
    const double t = (ma - mb) / std::sqrt(sa + sb);
    const double df =
        (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    const double x = df / (df + t * t);
    const double p = regularized_incomplete_beta(df / 2.0, 0.5, x);
    return {t, df, p};
}

}  // namespace mamnet
