#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fallbench/rng.hpp"

namespace fallbench {

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Regularized incomplete beta I_x(a,b) by Lentz's continued fraction.
// Good to ~1e-14 for the df ranges we see in t tests.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
    const double log_front =
        a * std::log(x) + b * std::log1p(-x) - std::log(a) -
        (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    const double tiny = 1e-300;
    double f = 1.0, c = 1.0, d = 0.0;
    for (int m = 0; m <= 300; ++m) {
        double numerator;
        if (m == 0) {
            numerator = 1.0;
        } else if (m % 2 == 0) {
            const double k = m / 2.0;
            numerator = k * (b - k) * x / ((a + 2.0 * k - 1.0) * (a + 2.0 * k));
        } else {
            const double k = (m - 1.0) / 2.0;
            numerator = -((a + k) * (a + b + k) * x) / ((a + 2.0 * k) * (a + 2.0 * k + 1.0));
        }
        d = 1.0 + numerator * d;
        if (std::fabs(d) < tiny) d = tiny;
        d = 1.0 / d;
        c = 1.0 + numerator / c;
        if (std::fabs(c) < tiny) c = tiny;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-15) break;
    }
    return std::exp(log_front) * (f - 1.0);
}

// Two-sided tail of Student's t with df degrees of freedom.
inline double student_t_two_sided(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return incomplete_beta(df / 2.0, 0.5, x);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_two_sided(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

// Upper tail of chi-squared with one degree of freedom.
inline double chi_squared_upper_df1(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

}  // namespace detail

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double variance(std::span<const double> x, std::size_t ddof = 1) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - ddof);
}

// Quantile with linear interpolation between order statistics (the common
// spreadsheet/R default).  Input must already be sorted ascending.
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct SixNumberSummary {
    double min = detail::kNaN;
    double q1 = detail::kNaN;
    double median = detail::kNaN;
    double mean = detail::kNaN;
    double q3 = detail::kNaN;
    double max = detail::kNaN;
};

inline SixNumberSummary six_number_summary(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("six_number_summary of empty sample");
    std::vector<double> v(x.begin(), x.end());
    for (double d : v)
        if (!std::isfinite(d)) throw std::invalid_argument("six_number_summary: non-finite value");
    std::sort(v.begin(), v.end());
    SixNumberSummary s;
    s.min = v.front();
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.mean = mean(v);
    s.q3 = quantile_sorted(v, 0.75);
    s.max = v.back();
    return s;
}

struct TestResult {
    double statistic = detail::kNaN;
    double p_value = detail::kNaN;
    std::size_t n_effective = 0;
    bool degenerate = false;  // test could not discriminate (empty margin, all-zero diffs, ...)
};

// Welch's unequal-variance t test, two-sided.
inline TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test: need at least 2 per sample");
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = mean(a), mb = mean(b);
    const double va = variance(a), vb = variance(b);
    const double sa = va / na, sb = vb / nb;
    TestResult r;
    r.n_effective = a.size() + b.size();
    if (sa + sb <= 0.0) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = (ma == mb) ? 1.0 : 0.0;
        return r;
    }
    r.statistic = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    r.p_value = detail::student_t_two_sided(r.statistic, df);
    return r;
}

// 2x2 chi-squared test of association with the continuity correction.
// Arguments are the cell counts (yes/no for each of two groups).
inline TestResult chi_squared_2x2(long long a_yes, long long a_no, long long b_yes, long long b_no) {
    if (a_yes < 0 || a_no < 0 || b_yes < 0 || b_no < 0)
        throw std::invalid_argument("chi_squared_2x2: negative count");
    const double obs[2][2] = {{double(a_yes), double(a_no)}, {double(b_yes), double(b_no)}};
    const double row[2] = {obs[0][0] + obs[0][1], obs[1][0] + obs[1][1]};
    const double col[2] = {obs[0][0] + obs[1][0], obs[0][1] + obs[1][1]};
    const double total = row[0] + row[1];
    TestResult r;
    r.n_effective = static_cast<std::size_t>(total);
    if (row[0] == 0 || row[1] == 0 || col[0] == 0 || col[1] == 0) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    double stat = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double e = row[i] * col[j] / total;
            const double d = std::max(0.0, std::fabs(obs[i][j] - e) - 0.5);
            stat += d * d / e;
        }
    r.statistic = stat;
    r.p_value = detail::chi_squared_upper_df1(stat);
    return r;
}

enum class WilcoxonMethod { automatic, exact, normal_approx };

namespace detail {

// Exact null distribution of the positive-rank sum for n untied ranks,
// by the usual subset-sum recursion.  Counts fit in doubles exactly for
// the n <= 20 range where this is used.
inline double wilcoxon_exact_two_sided(double w_plus, std::size_t n) {
    const std::size_t max_sum = n * (n + 1) / 2;
    std::vector<double> ways(max_sum + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t rank = 1; rank <= n; ++rank)
        for (std::size_t s = max_sum; s >= rank; --s) ways[s] += ways[s - rank];
    const double denom = std::pow(2.0, static_cast<double>(n));
    const auto cdf = [&](double w) {
        if (w < 0.0) return 0.0;
        double c = 0.0;
        const std::size_t top = std::min(max_sum, static_cast<std::size_t>(w));
        for (std::size_t s = 0; s <= top; ++s) c += ways[s];
        return c / denom;
    };
    const double lower = cdf(w_plus);
    const double upper = 1.0 - cdf(w_plus - 1.0);
    return std::min(1.0, 2.0 * std::min(lower, upper));
}

}  // namespace detail

// Wilcoxon signed-rank test on paired data.  Zero differences are dropped,
// ties get midranks.  Exact enumeration when feasible (and no ties),
// otherwise the normal approximation with tie and continuity corrections.
inline TestResult wilcoxon_signed_rank_diffs(std::span<const double> diffs,
                                             WilcoxonMethod method = WilcoxonMethod::automatic) {
    std::vector<double> d;
    d.reserve(diffs.size());
    for (double v : diffs) {
        if (!std::isfinite(v)) throw std::invalid_argument("wilcoxon: non-finite difference");
        if (v != 0.0) d.push_back(v);
    }
    TestResult r;
    r.n_effective = d.size();
    if (d.empty()) {
        r.degenerate = true;
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    const std::size_t n = d.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return std::fabs(d[i]) < std::fabs(d[j]); });
    std::vector<double> rank(n, 0.0);
    bool ties = false;
    double tie_term = 0.0;  // sum of t^3 - t over tie groups
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && std::fabs(d[order[j]]) == std::fabs(d[order[i]])) ++j;
        const double r_mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank[order[k]] = r_mid;
        const double t = static_cast<double>(j - i);
        if (j - i > 1) {
            ties = true;
            tie_term += t * t * t - t;
        }
        i = j;
    }
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0) w_plus += rank[i];
    r.statistic = w_plus;

    bool use_exact = false;
    switch (method) {
        case WilcoxonMethod::exact:
            if (ties) throw std::invalid_argument("wilcoxon: exact method requires untied ranks");
            use_exact = true;
            break;
        case WilcoxonMethod::normal_approx:
            use_exact = false;
            break;
        case WilcoxonMethod::automatic:
            use_exact = (n <= 20 && !ties);
            break;
    }
    if (use_exact) {
        r.p_value = detail::wilcoxon_exact_two_sided(w_plus, n);
        return r;
    }
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        r.degenerate = true;
        r.p_value = 1.0;
        return r;
    }
    const double centred = w_plus - mu;
    double z = 0.0;
    if (centred != 0.0) z = (centred - 0.5 * (centred > 0 ? 1.0 : -1.0)) / std::sqrt(var);
    r.p_value = std::min(1.0, detail::normal_two_sided(z));
    return r;
}

inline TestResult wilcoxon_signed_rank(std::span<const std::pair<double, double>> pairs,
                                       WilcoxonMethod method = WilcoxonMethod::automatic) {
    std::vector<double> d(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) d[i] = pairs[i].first - pairs[i].second;
    return wilcoxon_signed_rank_diffs(d, method);
}

struct JackknifeEstimate {
    double se = detail::kNaN;
    std::size_t n_used = 0;
    std::size_t n_total = 0;
    bool partial = false;  // some leave-one-out replicates were undefined and skipped
};

// Standard error from a vector of leave-one-out statistic values.
// NaN entries (undefined replicates) are skipped and flagged.
inline JackknifeEstimate jackknife_from_loo(std::span<const double> loo) {
    JackknifeEstimate e;
    e.n_total = loo.size();
    std::vector<double> kept;
    kept.reserve(loo.size());
    for (double v : loo)
        if (std::isfinite(v)) kept.push_back(v);
    e.n_used = kept.size();
    e.partial = e.n_used < e.n_total;
    if (e.n_used < 2) return e;
    const double m = mean(kept);
    double ss = 0.0;
    for (double v : kept) ss += (v - m) * (v - m);
    const double n = static_cast<double>(e.n_used);
    e.se = std::sqrt((n - 1.0) / n * ss);
    return e;
}

template <class Fn>
std::vector<double> jackknife_loo_values(std::span<const double> x, Fn&& stat) {
    if (x.size() < 2) throw std::invalid_argument("jackknife: need at least 2 observations");
    std::vector<double> loo(x.size());
    std::vector<double> buf;
    buf.reserve(x.size() - 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        buf.clear();
        for (std::size_t j = 0; j < x.size(); ++j)
            if (j != i) buf.push_back(x[j]);
        loo[i] = stat(std::span<const double>(buf));
    }
    return loo;
}

template <class Fn>
JackknifeEstimate jackknife_se(std::span<const double> x, Fn&& stat) {
    const auto loo = jackknife_loo_values(x, stat);
    return jackknife_from_loo(loo);
}

// Percentile bootstrap confidence interval for stat(x).
template <class Fn>
std::pair<double, double> bootstrap_percentile(std::span<const double> x, Fn&& stat,
                                               std::size_t n_resamples, double alpha,
                                               std::uint64_t seed) {
    if (x.empty()) throw std::invalid_argument("bootstrap: empty sample");
    if (n_resamples == 0) throw std::invalid_argument("bootstrap: need at least one resample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bootstrap: alpha outside (0,1)");
    Rng rng(derive_seed(seed, 0xb007ULL));
    std::vector<double> draws(x.size());
    std::vector<double> stats(n_resamples);
    for (std::size_t b = 0; b < n_resamples; ++b) {
        for (std::size_t i = 0; i < x.size(); ++i) draws[i] = x[rng.below(x.size())];
        stats[b] = stat(std::span<const double>(draws));
    }
    std::sort(stats.begin(), stats.end());
    return {quantile_sorted(stats, alpha / 2.0), quantile_sorted(stats, 1.0 - alpha / 2.0)};
}

}  // namespace fallbench
