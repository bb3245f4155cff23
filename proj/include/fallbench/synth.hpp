#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fallbench/cohort.hpp"
#include "fallbench/rng.hpp"
#include "fallbench/stats.hpp"

namespace fallbench {

// Piecewise-linear inverse CDF through the five summary knots
// (0,min) (0.25,q1) (0.5,median) (0.75,q3) (1,max).
class QuantileSampler {
  public:
    explicit QuantileSampler(const SixNumberSummary& s) {
        knots_[0] = s.min;
        knots_[1] = s.q1;
        knots_[2] = s.median;
        knots_[3] = s.q3;
        knots_[4] = s.max;
        for (int i = 0; i < 5; ++i)
            if (!std::isfinite(knots_[i])) throw std::invalid_argument("quantile_sampler: non-finite knot");
        for (int i = 1; i < 5; ++i)
            if (knots_[i] < knots_[i - 1])
                throw std::invalid_argument("quantile_sampler: summary knots must be non-decreasing");
    }

    double operator()(double u) const {
        if (u <= 0.0) return knots_[0];
        if (u >= 1.0) return knots_[4];
        const int seg = std::min(3, static_cast<int>(u * 4.0));
        const double t = (u - 0.25 * seg) / 0.25;
        return knots_[seg] + t * (knots_[seg + 1] - knots_[seg]);
    }

    double knot(int i) const { return knots_[i]; }

    // mean implied by the piecewise-linear CDF
    double mean() const {
        return (knots_[0] + 2.0 * knots_[1] + 2.0 * knots_[2] + 2.0 * knots_[3] + knots_[4]) / 8.0;
    }

  private:
    double knots_[5];
};

inline QuantileSampler quantile_sampler(const SixNumberSummary& summary) {
    return QuantileSampler(summary);
}

struct VariableModel {
    std::string name;
    std::string group;
    bool binary = false;
    bool integer_valued = false;  // round and clamp after sampling (small count ranges)
    SixNumberSummary faller, non_faller;  // continuous variables
    double p_faller = 0.0, p_non_faller = 0.0;  // binary variables

    const SixNumberSummary& summary(bool is_faller) const { return is_faller ? faller : non_faller; }
    double p(bool is_faller) const { return is_faller ? p_faller : p_non_faller; }
};

struct GroupSpec {
    double faller_availability = 1.0;
    double non_faller_availability = 1.0;
    double rho = 0.0;  // within-group Gaussian copula correlation

    double availability(bool is_faller) const {
        return is_faller ? faller_availability : non_faller_availability;
    }
};

struct CohortSpec {
    std::size_t n_total = 0;
    std::size_t n_fallers = 0;
    std::uint64_t seed = 0;
    std::vector<VariableModel> variables;
    std::map<std::string, GroupSpec> groups;  // groups not listed use the defaults

    GroupSpec group_spec(const std::string& name) const {
        auto it = groups.find(name);
        return it == groups.end() ? GroupSpec{} : it->second;
    }
};

inline void validate_cohort_spec(const CohortSpec& spec) {
    if (spec.n_total == 0) throw std::invalid_argument("cohort spec: n_total must be positive");
    if (spec.n_fallers == 0 || spec.n_fallers >= spec.n_total)
        throw std::invalid_argument("cohort spec: need fallers and non-fallers both");
    if (spec.variables.empty()) throw std::invalid_argument("cohort spec: no variables");
    std::vector<std::string> names;
    for (const auto& v : spec.variables) {
        if (v.name.empty()) throw std::invalid_argument("cohort spec: empty variable name");
        for (const auto& n : names)
            if (n == v.name) throw std::invalid_argument("cohort spec: duplicate variable " + v.name);
        names.push_back(v.name);
        if (v.binary) {
            for (double p : {v.p_faller, v.p_non_faller})
                if (!(p >= 0.0 && p <= 1.0))
                    throw std::invalid_argument("cohort spec: probability outside [0,1] for " + v.name);
        } else {
            QuantileSampler check_f(v.faller), check_nf(v.non_faller);  // validates ordering
            (void)check_f;
            (void)check_nf;
        }
    }
    for (const auto& [g, gs] : spec.groups) {
        for (double a : {gs.faller_availability, gs.non_faller_availability})
            if (!(a >= 0.0 && a <= 1.0))
                throw std::invalid_argument("cohort spec: availability outside [0,1] for group " + g);
        if (!(gs.rho >= 0.0 && gs.rho < 1.0))
            throw std::invalid_argument("cohort spec: rho outside [0,1) for group " + g);
    }
}

namespace detail {

// stratified uniforms: one jittered draw per stratum, assigned in a random
// permutation, so empirical quantiles converge at ~1/m instead of 1/sqrt(m)
inline std::vector<double> stratified_uniforms(std::size_t m, Rng& rng) {
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> u(m);
    for (std::size_t i = 0; i < m; ++i)
        u[i] = (static_cast<double>(perm[i]) + rng.uniform01()) / static_cast<double>(m);
    return u;
}

}  // namespace detail

// Deterministic synthetic cohort: per-class quantile-matched continuous
// variables, class-probability binaries, and all-or-none missingness per
// assessment group.  Same spec and seed give the same cohort byte for byte.
inline Cohort generate_cohort(const CohortSpec& spec) {
    validate_cohort_spec(spec);
    Cohort cohort;
    for (const auto& v : spec.variables) {
        cohort.schema.push_back(v.name);
        cohort.groups.push_back(v.group.empty() ? infer_group(v.name) : v.group);
    }
    const std::size_t n = spec.n_total;
    std::size_t width = 1;
    for (std::size_t x = n; x >= 10; x /= 10) ++width;
    width = std::max<std::size_t>(width, 4);
    cohort.records.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::string digits = std::to_string(r + 1);
        if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
        cohort.records[r].id = "p" + digits;
        cohort.records[r].outcome = r < spec.n_fallers ? Outcome::faller : Outcome::non_faller;
        cohort.records[r].features.resize(spec.variables.size());
    }
    std::vector<std::size_t> members[2];
    for (std::size_t r = 0; r < n; ++r)
        members[cohort.records[r].outcome == Outcome::faller ? 1 : 0].push_back(r);

    // group presence, stratified per class so observed availability tracks
    // the requested rate within one record
    const auto group_names = cohort.group_order();
    std::map<std::string, std::vector<char>> present;
    for (std::size_t gi = 0; gi < group_names.size(); ++gi) {
        const GroupSpec gs = spec.group_spec(group_names[gi]);
        std::vector<char> flags(n, 1);
        for (int cls : {0, 1}) {
            const double avail = gs.availability(cls == 1);
            Rng rng(derive_seed(spec.seed, 0x61766cULL, gi * 2 + cls));
            const auto u = detail::stratified_uniforms(members[cls].size(), rng);
            for (std::size_t j = 0; j < members[cls].size(); ++j)
                flags[members[cls][j]] = u[j] < avail ? 1 : 0;
        }
        present[group_names[gi]] = std::move(flags);
    }

    // shared per-record factor for groups with copula correlation
    std::map<std::string, std::vector<double>> shared;
    for (std::size_t gi = 0; gi < group_names.size(); ++gi) {
        const GroupSpec gs = spec.group_spec(group_names[gi]);
        if (gs.rho <= 0.0) continue;
        Rng rng(derive_seed(spec.seed, 0x636f70ULL, gi));
        std::vector<double> g(n);
        for (std::size_t r = 0; r < n; ++r) g[r] = rng.normal();
        shared[group_names[gi]] = std::move(g);
    }

    for (std::size_t vi = 0; vi < spec.variables.size(); ++vi) {
        const VariableModel& var = spec.variables[vi];
        const std::string& group = cohort.groups[vi];
        const GroupSpec gs = spec.group_spec(group);
        const auto& flags = present[group];
        std::optional<QuantileSampler> sampler_f, sampler_nf;
        if (!var.binary) {
            sampler_f.emplace(var.faller);
            sampler_nf.emplace(var.non_faller);
        }
        for (int cls : {0, 1}) {
            Rng rng(derive_seed(spec.seed, 0x76616cULL, vi * 2 + cls));
            std::vector<double> u;
            if (gs.rho <= 0.0) {
                u = detail::stratified_uniforms(members[cls].size(), rng);
            } else {
                const auto& g = shared[group];
                u.resize(members[cls].size());
                for (std::size_t j = 0; j < u.size(); ++j) {
                    const double z = std::sqrt(gs.rho) * g[members[cls][j]] +
                                     std::sqrt(1.0 - gs.rho) * rng.normal();
                    u[j] = detail::normal_cdf(z);
                }
            }
            for (std::size_t j = 0; j < members[cls].size(); ++j) {
                const std::size_t r = members[cls][j];
                if (!flags[r]) continue;
                double value;
                if (var.binary) {
                    value = u[j] < var.p(cls == 1) ? 1.0 : 0.0;
                } else {
                    const QuantileSampler& sampler = cls == 1 ? *sampler_f : *sampler_nf;
                    value = sampler(u[j]);
                    if (var.integer_valued) {
                        value = std::nearbyint(value);
                        value = std::min(std::max(value, sampler.knot(0)), sampler.knot(4));
                    }
                }
                cohort.records[r].features[vi] = value;
            }
        }
    }
    return cohort;
}

struct MeanResidual {
    std::string variable;
    bool faller_class = false;
    double sampler_mean = 0.0;
    double recorded_mean = 0.0;

    double residual() const { return sampler_mean - recorded_mean; }
};

// The interpolated CDF matches the quartiles, not the recorded mean; this
// lists the discrepancy per continuous variable and class.
inline std::vector<MeanResidual> mean_residuals(const CohortSpec& spec) {
    std::vector<MeanResidual> out;
    for (const auto& v : spec.variables) {
        if (v.binary) continue;
        for (bool cls : {true, false}) {
            const SixNumberSummary& s = v.summary(cls);
            out.push_back({v.name, cls, QuantileSampler(s).mean(), s.mean});
        }
    }
    return out;
}

namespace detail {

inline SixNumberSummary summary_of(double mn, double q1, double med, double mean_, double q3,
                                   double mx) {
    SixNumberSummary s;
    s.min = mn;
    s.q1 = q1;
    s.median = med;
    s.mean = mean_;
    s.q3 = q3;
    s.max = mx;
    return s;
}

}  // namespace detail

// Built-in cohort specification: 338 patients (54 fallers), six assessment
// groups with class-conditional summaries and per-group availability.
inline CohortSpec default_paper_spec() {
    using detail::summary_of;
    CohortSpec spec;
    spec.n_total = 338;
    spec.n_fallers = 54;
    spec.seed = 20339;

    auto cont = [&](std::string name, std::string group, SixNumberSummary faller,
                    SixNumberSummary non_faller, bool integer_valued = false) {
        VariableModel v;
        v.name = std::move(name);
        v.group = std::move(group);
        v.faller = faller;
        v.non_faller = non_faller;
        v.integer_valued = integer_valued;
        spec.variables.push_back(std::move(v));
    };
    auto bin = [&](std::string name, std::string group, double p_faller, double p_non_faller) {
        VariableModel v;
        v.name = std::move(name);
        v.group = std::move(group);
        v.binary = true;
        v.p_faller = p_faller;
        v.p_non_faller = p_non_faller;
        spec.variables.push_back(std::move(v));
    };

    // Demographics: sex and mean age/education are reported; the age spread
    // comes from the published age-band percentages, education spread is a
    // plausible fill-in around the reported means.
    bin("demo_sex_male", "Demographics", 0.463, 0.597);
    cont("demo_age_years", "Demographics", summary_of(19, 43.5, 54.7, 55.4, 66.5, 89),
         summary_of(16, 39.5, 54.3, 54.7, 68.0, 92));
    cont("demo_education_years", "Demographics", summary_of(5, 11, 13, 13.1, 15, 20),
         summary_of(5, 11, 13, 13.4, 16, 20));

    bin("history_theatre", "History", 31.0 / 54.0, 144.0 / 283.0);
    bin("history_recent_fall", "History", 29.0 / 54.0, 80.0 / 283.0);
    bin("history_function_change", "History", 43.0 / 54.0, 158.0 / 283.0);

    cont("trail_a_time", "Trail", summary_of(15, 49, 76, 80.43, 90.5, 300),
         summary_of(14, 26, 34, 42.51, 48, 131));
    cont("trail_a_errors", "Trail", summary_of(0, 0, 0, 1.10, 1, 3), summary_of(0, 0, 0, 0.93, 0, 2),
         true);
    cont("trail_b_time", "Trail", summary_of(42, 176, 253, 200.71, 294.5, 300),
         summary_of(32, 84, 131, 121.57, 191, 300));
    cont("trail_b_errors", "Trail", summary_of(0, 0.3, 2, 1.27, 3, 8), summary_of(0, 0, 0, 0.80, 1, 7),
         true);
    cont("trail_b_a_ratio", "Trail", summary_of(1.0, 2.4, 2.8, 2.79, 4.2, 10.5),
         summary_of(1.6, 2.5, 3.6, 2.97, 4.6, 7.9));

    cont("stroop_words_1min", "Stroop", summary_of(20, 49, 66, 78.15, 104, 112),
         summary_of(21, 93, 112, 98.23, 112, 112));
    cont("stroop_words_2min", "Stroop", summary_of(38, 100, 112, 103.42, 112, 112),
         summary_of(46, 112, 112, 111.27, 112, 112));
    cont("stroop_errors_a", "Stroop", summary_of(0, 0, 0, 0.85, 1, 7), summary_of(0, 0, 0, 0.99, 1, 6),
         true);
    cont("stroop_corrected_a", "Stroop", summary_of(0, 0, 0, 0.42, 1, 2),
         summary_of(0, 0, 0, 0.35, 0, 4), true);
    cont("stroop_colours_1min", "Stroop", summary_of(4, 26, 36, 38.00, 51, 70),
         summary_of(20, 42, 50, 47.27, 59.8, 112));
    cont("stroop_colours_2min", "Stroop", summary_of(9, 54, 72, 73.78, 100, 112),
         summary_of(35, 82.3, 100, 88.84, 112, 112));
    cont("stroop_errors_b", "Stroop", summary_of(0, 2, 3, 3.91, 5, 12), summary_of(0, 0, 1, 2.45, 3, 10),
         true);
    cont("stroop_corrected_b", "Stroop", summary_of(0, 1, 2, 2.31, 3, 7),
         summary_of(0, 0, 1, 1.70, 2, 8), true);

    cont("semantic_animals", "Semantic", summary_of(5, 10, 14, 15.70, 18, 29),
         summary_of(3, 15, 19, 19.77, 25, 38));
    cont("semantic_repetitions", "Semantic", summary_of(0, 0, 1, 0.91, 2, 4),
         summary_of(0, 0, 0, 0.64, 1, 3), true);

    const double walk_f[12][6] = {
        {0, 2.3, 4, 3.88, 5, 5}, {0, 2, 5, 4.28, 5, 5},   {0, 2, 4, 3.81, 5, 5},
        {0, 2, 4, 3.53, 5, 5},   {0, 2, 3.5, 3.53, 5, 5}, {0, 3, 4.5, 4.19, 5, 5},
        {0, 2.3, 4.5, 4.13, 5, 5}, {0, 1, 4, 3.72, 5, 5}, {0, 1, 4, 3.91, 5, 5},
        {0, 3, 5, 4.13, 5, 5},   {0, 3, 4, 4.09, 5, 5},   {0, 4, 5, 4.44, 5, 5}};
    const double walk_nf[12][6] = {
        {0, 1, 3, 2.91, 4, 5},   {0, 1, 4, 3.34, 5, 5},   {0, 1, 3, 2.89, 4, 5},
        {0, 1, 3, 2.95, 4, 5},   {0, 1.8, 3, 2.87, 4, 5}, {0, 2, 3, 3.29, 5, 5},
        {0, 2, 3, 3.17, 4, 5},   {0, 1, 3, 2.83, 5, 5},   {0, 1, 2, 2.68, 5, 5},
        {0, 2, 3, 3.27, 5, 5},   {0, 1, 3, 3.14, 5, 5},   {0, 1, 4, 3.25, 5, 5}};
    for (int q = 0; q < 12; ++q) {
        const double* f = walk_f[q];
        const double* n = walk_nf[q];
        cont("walk12_q" + std::to_string(q + 1), "Walk12",
             summary_of(f[0], f[1], f[2], f[3], f[4], f[5]),
             summary_of(n[0], n[1], n[2], n[3], n[4], n[5]));
    }

    spec.groups["Demographics"] = {1.0, 1.0, 0.0};
    spec.groups["History"] = {1.0, 283.0 / 284.0, 0.0};
    spec.groups["Trail"] = {39.0 / 54.0, 172.0 / 284.0, 0.0};
    spec.groups["Stroop"] = {37.0 / 54.0, 178.0 / 284.0, 0.0};
    spec.groups["Semantic"] = {44.0 / 54.0, 209.0 / 284.0, 0.0};
    spec.groups["Walk12"] = {50.0 / 54.0, 204.0 / 284.0, 0.0};
    return spec;
}

}  // namespace fallbench
