#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fallbench/format.hpp"
#include "fallbench/pipeline.hpp"
#include "fallbench/stats.hpp"

namespace fallbench {

struct ConfusionMatrix {
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    long long total() const { return tp + fp + fn + tn; }
};

inline ConfusionMatrix confusion(std::span<const Prediction> rows) {
    ConfusionMatrix cm;
    for (const auto& r : rows) {
        if (r.faller)
            (r.predicted_faller ? cm.tp : cm.fn)++;
        else
            (r.predicted_faller ? cm.fp : cm.tn)++;
    }
    return cm;
}

inline ConfusionMatrix confusion(const PredictionSet& set) { return confusion(set.rows); }

enum class Metric { mmce, sensitivity, specificity, precision, f1 };

inline std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::mmce: return "mmce";
        case Metric::sensitivity: return "sensitivity";
        case Metric::specificity: return "specificity";
        case Metric::precision: return "precision";
        case Metric::f1: return "f1";
    }
    return "?";
}

inline Metric metric_from_name(std::string_view name) {
    for (Metric m : {Metric::mmce, Metric::sensitivity, Metric::specificity, Metric::precision, Metric::f1})
        if (metric_name(m) == name) return m;
    throw std::invalid_argument("unknown metric: " + std::string(name));
}

// NaN when the denominator is empty (metric undefined on this sample)
inline double metric_from_counts(Metric m, const ConfusionMatrix& cm) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    switch (m) {
        case Metric::mmce:
            return cm.total() ? static_cast<double>(cm.fp + cm.fn) / static_cast<double>(cm.total()) : nan;
        case Metric::sensitivity:
            return cm.tp + cm.fn ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) : nan;
        case Metric::specificity:
            return cm.tn + cm.fp ? static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp) : nan;
        case Metric::precision:
            return cm.tp + cm.fp ? static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp) : nan;
        case Metric::f1: {
            const ConfusionMatrix& c = cm;
            if (c.tp + c.fp == 0 || c.tp + c.fn == 0) return nan;
            const double prec = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
            const double sens = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
            if (prec + sens == 0.0) return nan;
            return 2.0 * prec * sens / (prec + sens);
        }
    }
    return nan;
}

struct MetricValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
    bool partial = false;  // some leave-one-out replicates (or folds) were skipped
};

struct MetricReport {
    MetricValue mmce, sensitivity, specificity, precision, f1;

    MetricValue& operator[](Metric m) {
        switch (m) {
            case Metric::mmce: return mmce;
            case Metric::sensitivity: return sensitivity;
            case Metric::specificity: return specificity;
            case Metric::precision: return precision;
            case Metric::f1: return f1;
        }
        return mmce;
    }
    const MetricValue& operator[](Metric m) const {
        return const_cast<MetricReport&>(*this)[m];
    }
};

enum class Aggregation { fold_mean, pooled };

namespace detail {

inline ConfusionMatrix remove_row(ConfusionMatrix cm, const Prediction& r) {
    if (r.faller)
        (r.predicted_faller ? cm.tp : cm.fn)--;
    else
        (r.predicted_faller ? cm.fp : cm.tn)--;
    return cm;
}

struct FoldSlice {
    int fold;
    std::vector<const Prediction*> rows;
};

inline std::vector<FoldSlice> fold_slices(const PredictionSet& set) {
    std::map<int, FoldSlice> by_fold;
    for (const auto& r : set.rows) {
        auto& slice = by_fold[r.fold];
        slice.fold = r.fold;
        slice.rows.push_back(&r);
    }
    std::vector<FoldSlice> out;
    out.reserve(by_fold.size());
    for (auto& [fold, slice] : by_fold) out.push_back(std::move(slice));
    return out;
}

}  // namespace detail

// Leave-one-patient-out replicate values of the metric within each fold,
// concatenated fold by fold in row order.  These are the paired units the
// strategy comparison tests run on.  Undefined replicates are NaN.
inline std::vector<double> metric_loo_values(const PredictionSet& set, Metric metric) {
    std::vector<double> out;
    out.reserve(set.rows.size());
    for (const auto& slice : detail::fold_slices(set)) {
        ConfusionMatrix cm;
        for (const Prediction* r : slice.rows) {
            if (r->faller)
                (r->predicted_faller ? cm.tp : cm.fn)++;
            else
                (r->predicted_faller ? cm.fp : cm.tn)++;
        }
        for (const Prediction* r : slice.rows)
            out.push_back(metric_from_counts(metric, detail::remove_row(cm, *r)));
    }
    return out;
}

// Point value plus jackknife standard error.  The point value averages the
// per-fold metrics (or uses pooled counts); the SE treats the fold metrics
// as independent and sums their leave-one-out jackknife variances:
//   Var(mean) = (1/k^2) * sum_j Var_j.
inline MetricValue metric_with_se(const PredictionSet& set, Metric metric,
                                  Aggregation agg = Aggregation::fold_mean) {
    MetricValue mv;
    const auto slices = detail::fold_slices(set);
    std::vector<double> fold_values;
    std::vector<JackknifeEstimate> fold_jack;
    for (const auto& slice : slices) {
        ConfusionMatrix cm;
        for (const Prediction* r : slice.rows) {
            if (r->faller)
                (r->predicted_faller ? cm.tp : cm.fn)++;
            else
                (r->predicted_faller ? cm.fp : cm.tn)++;
        }
        const double v = metric_from_counts(metric, cm);
        if (!std::isfinite(v)) {
            mv.partial = true;
            continue;
        }
        fold_values.push_back(v);
        std::vector<double> loo;
        loo.reserve(slice.rows.size());
        for (const Prediction* r : slice.rows)
            loo.push_back(metric_from_counts(metric, detail::remove_row(cm, *r)));
        fold_jack.push_back(jackknife_from_loo(loo));
    }
    if (fold_values.empty()) return mv;
    mv.defined = true;
    if (agg == Aggregation::fold_mean) {
        mv.value = mean(fold_values);
    } else {
        mv.value = metric_from_counts(metric, confusion(set));
        if (!std::isfinite(mv.value)) {
            mv.defined = false;
            mv.value = std::numeric_limits<double>::quiet_NaN();
            return mv;
        }
    }
    double var_sum = 0.0;
    bool se_ok = true;
    for (const auto& jk : fold_jack) {
        if (jk.partial) mv.partial = true;
        if (!std::isfinite(jk.se)) {
            se_ok = false;
            continue;
        }
        var_sum += jk.se * jk.se;
    }
    if (!se_ok) mv.partial = true;
    const double k = static_cast<double>(fold_jack.size());
    mv.se = std::sqrt(var_sum) / k;
    return mv;
}

inline MetricReport metrics_with_se(const PredictionSet& set, Aggregation agg = Aggregation::fold_mean) {
    MetricReport rep;
    for (Metric m : {Metric::mmce, Metric::sensitivity, Metric::specificity, Metric::precision, Metric::f1})
        rep[m] = metric_with_se(set, m, agg);
    return rep;
}

// Paired Wilcoxon signed-rank test between two strategies evaluated under
// the same fold plan, pairing the fold-wise leave-one-out replicates.
inline TestResult compare_strategies(const PredictionSet& a, const PredictionSet& b, Metric metric,
                                     WilcoxonMethod method = WilcoxonMethod::automatic) {
    if (a.plan_fingerprint != b.plan_fingerprint)
        throw std::invalid_argument("compare_strategies: prediction sets use different fold plans");
    if (a.rows.size() != b.rows.size())
        throw std::invalid_argument("compare_strategies: prediction sets have different sizes");
    const auto sa = detail::fold_slices(a);
    const auto sb = detail::fold_slices(b);
    for (std::size_t s = 0; s < sa.size(); ++s)
        for (std::size_t i = 0; i < sa[s].rows.size(); ++i)
            if (sa[s].rows[i]->id != sb[s].rows[i]->id)
                throw std::invalid_argument("compare_strategies: row order mismatch at fold " +
                                            std::to_string(sa[s].fold));
    const auto va = metric_loo_values(a, metric);
    const auto vb = metric_loo_values(b, metric);
    std::vector<double> diffs;
    diffs.reserve(va.size());
    for (std::size_t i = 0; i < va.size(); ++i)
        if (std::isfinite(va[i]) && std::isfinite(vb[i])) diffs.push_back(va[i] - vb[i]);
    return wilcoxon_signed_rank_diffs(diffs, method);
}

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0, fpr = 0.0;
    bool has_band = false;
    double fpr_lo = 0.0, fpr_hi = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auroc = 0.0;
};

// Curve of (fpr, tpr) as the decision threshold sweeps from above the top
// score down to below the bottom score; a predicted positive is score > t.
inline RocCurve roc(const PredictionSet& set) {
    long long pos = 0, neg = 0;
    for (const auto& r : set.rows) (r.faller ? pos : neg)++;
    if (pos == 0 || neg == 0) throw std::invalid_argument("roc: need both outcomes present");
    std::vector<std::pair<double, bool>> scored(set.rows.size());
    for (std::size_t i = 0; i < set.rows.size(); ++i) scored[i] = {set.rows[i].score, set.rows[i].faller};
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve curve;
    curve.points.push_back({1.0, 0.0, 0.0});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        const double s = scored[i].first;
        // the point at threshold s admits rows scoring strictly above s
        RocPoint p;
        p.threshold = s;
        p.tpr = static_cast<double>(tp) / static_cast<double>(pos);
        p.fpr = static_cast<double>(fp) / static_cast<double>(neg);
        curve.points.push_back(p);
        while (i < scored.size() && scored[i].first == s) {
            (scored[i].second ? tp : fp)++;
            ++i;
        }
    }
    curve.points.push_back({-1.0, 1.0, 1.0});
    double area = 0.0;
    for (std::size_t j = 1; j < curve.points.size(); ++j)
        area += (curve.points[j].fpr - curve.points[j - 1].fpr) *
                (curve.points[j].tpr + curve.points[j - 1].tpr) / 2.0;
    curve.auroc = area;
    return curve;
}

namespace detail {

// false positive rate where the curve first reaches the requested tpr
inline double fpr_at_tpr(const RocCurve& curve, double tpr) {
    for (const auto& p : curve.points)
        if (p.tpr >= tpr - 1e-12) return p.fpr;
    return 1.0;
}

}  // namespace detail

// Patient-level bootstrap band for the FPR at a grid of TPR levels.
// Each band is attached to the first curve point reaching its grid level
// and widened, if needed, to contain that point's own FPR.
inline RocCurve roc_bands(const PredictionSet& set, std::size_t n_resamples, double alpha,
                          std::uint64_t seed) {
    if (n_resamples == 0) throw std::invalid_argument("roc_bands: need at least one resample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("roc_bands: alpha outside (0,1)");
    RocCurve curve = roc(set);
    const std::size_t n = set.rows.size();
    std::vector<double> grid;
    for (int g = 0; g <= 20; ++g) grid.push_back(static_cast<double>(g) / 20.0);
    std::vector<std::vector<double>> fprs(grid.size());
    for (auto& v : fprs) v.reserve(n_resamples);
    for (std::size_t b = 0; b < n_resamples; ++b) {
        Rng rng(derive_seed(seed, b));
        PredictionSet rep;
        rep.n_folds = set.n_folds;
        rep.rows.reserve(n);
        bool has_pos = false, has_neg = false;
        while (!(has_pos && has_neg)) {
            rep.rows.clear();
            has_pos = has_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& r = set.rows[rng.below(n)];
                rep.rows.push_back(r);
                (r.faller ? has_pos : has_neg) = true;
            }
        }
        const RocCurve rc = roc(rep);
        for (std::size_t g = 0; g < grid.size(); ++g)
            fprs[g].push_back(detail::fpr_at_tpr(rc, grid[g]));
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::sort(fprs[g].begin(), fprs[g].end());
        const double lo = quantile_sorted(fprs[g], alpha / 2.0);
        const double hi = quantile_sorted(fprs[g], 1.0 - alpha / 2.0);
        for (auto& p : curve.points) {
            if (p.tpr >= grid[g] - 1e-12) {
                p.has_band = true;
                p.fpr_lo = std::min(lo, p.fpr);
                p.fpr_hi = std::max(hi, p.fpr);
                break;
            }
        }
    }
    return curve;
}

inline PredictionSet apply_threshold(const PredictionSet& set, double threshold) {
    PredictionSet out = set;
    out.threshold = threshold;
    for (auto& r : out.rows)
        r.predicted_faller = r.fallback_used ? false : r.score > threshold;
    return out;
}

struct ThresholdChoice {
    double threshold = 0.5;
    MetricReport report;
    bool degenerate = false;  // objective unmet except at zero sensitivity
};

// Pick an operating threshold from the pooled out-of-fold scores.  For the
// specificity-floor objective: among thresholds meeting the floor, maximize
// sensitivity (ties: higher specificity, then lower threshold).  For the
// accuracy objective: minimize error (same tie-breaking).
inline ThresholdChoice tune_threshold(const PredictionSet& set, const ThresholdObjective& objective) {
    std::vector<double> cands;
    cands.reserve(set.rows.size() + 1);
    for (const auto& r : set.rows) cands.push_back(r.score);
    cands.push_back(-1.0);
    std::sort(cands.begin(), cands.end(), std::greater<>());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

    double best_sens = -1.0, best_spec = -1.0, best_acc = -1.0;
    bool found = false;
    double chosen = cands.front();
    for (double t : cands) {
        const ConfusionMatrix cm = confusion(apply_threshold(set, t));
        const double sens = metric_from_counts(Metric::sensitivity, cm);
        const double spcf = metric_from_counts(Metric::specificity, cm);
        const double acc = 1.0 - metric_from_counts(Metric::mmce, cm);
        if (!std::isfinite(sens) || !std::isfinite(spcf)) continue;
        if (objective.kind == ThresholdObjective::Kind::min_specificity) {
            if (spcf < objective.target) continue;
            if (!found || sens > best_sens || (sens == best_sens && spcf > best_spec) ||
                (sens == best_sens && spcf == best_spec && t < chosen)) {
                found = true;
                best_sens = sens;
                best_spec = spcf;
                chosen = t;
            }
        } else {
            if (!found || acc > best_acc || (acc == best_acc && spcf > best_spec) ||
                (acc == best_acc && spcf == best_spec && t < chosen)) {
                found = true;
                best_acc = acc;
                best_spec = spcf;
                chosen = t;
            }
        }
    }
    ThresholdChoice choice;
    if (!found) {
        // specificity floor unreachable: fall back to predicting nobody
        choice.threshold = cands.front();
        choice.degenerate = true;
    } else {
        choice.threshold = chosen;
        choice.degenerate =
            objective.kind == ThresholdObjective::Kind::min_specificity && best_sens == 0.0;
    }
    choice.report = metrics_with_se(apply_threshold(set, choice.threshold));
    return choice;
}

// --- text output ------------------------------------------------------

inline std::string format_metric(const MetricValue& mv) {
    if (!mv.defined) return "-";
    std::string out = format_fixed(mv.value, 3);
    out += " (± ";
    out += std::isfinite(mv.se) ? format_fixed(mv.se, 3) : std::string("-");
    out += ")";
    if (mv.partial) out += "*";
    return out;
}

struct ReportRow {
    std::string strategy;
    std::string population;
    MetricReport report;
};

inline std::string emit_report(std::span<const ReportRow> rows) {
    std::string out = "strategy\tpopulation\tmmce\tsensitivity\tspecificity\tprecision\tf1\n";
    for (const auto& row : rows) {
        out += row.strategy;
        out += '\t';
        out += row.population;
        for (Metric m : {Metric::mmce, Metric::sensitivity, Metric::specificity, Metric::precision,
                         Metric::f1}) {
            out += '\t';
            out += format_metric(row.report[m]);
        }
        out += '\n';
    }
    return out;
}

inline std::string roc_to_csv(const RocCurve& curve) {
    std::string out = "threshold,tpr,fpr,fpr_lo,fpr_hi\n";
    for (const auto& p : curve.points) {
        out += format_double(p.threshold);
        out += ',';
        out += format_double(p.tpr);
        out += ',';
        out += format_double(p.fpr);
        out += ',';
        if (p.has_band) out += format_double(p.fpr_lo);
        out += ',';
        if (p.has_band) out += format_double(p.fpr_hi);
        out += '\n';
    }
    return out;
}

inline std::string predictions_to_csv(const PredictionSet& set) {
    std::string out = "id,fold,truth,score,predicted,fallback_used\n";
    for (const auto& r : set.rows) {
        out += r.id;
        out += ',';
        out += std::to_string(r.fold);
        out += ',';
        out += r.faller ? "faller" : "non_faller";
        out += ',';
        out += format_double(r.score);
        out += ',';
        out += r.predicted_faller ? "faller" : "non_faller";
        out += ',';
        out += r.fallback_used ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace fallbench
