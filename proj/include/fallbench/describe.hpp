#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fallbench/cohort.hpp"
#include "fallbench/format.hpp"
#include "fallbench/stats.hpp"

namespace fallbench {

// Per-variable class-conditional summary tables: six-number rows with a
// Welch t p-value for continuous variables, yes/no counts with a
// chi-squared p-value for binary ones.
inline std::string describe_cohort(const Cohort& cohort) {
    std::string cont = "variable\tgroup\tclass\tn\tmin\tq1\tmedian\tmean\tq3\tmax\tp_welch\n";
    std::string bin = "variable\tgroup\tclass\tn\tyes\tno\tp_chi2\n";
    bool any_cont = false, any_bin = false;
    for (std::size_t col = 0; col < cohort.schema.size(); ++col) {
        std::vector<double> values[2];
        for (const auto& rec : cohort.records) {
            const auto& f = rec.features[col];
            if (f) values[rec.outcome == Outcome::faller ? 1 : 0].push_back(*f);
        }
        bool binary = true;
        for (int c : {0, 1})
            for (double v : values[c]) binary = binary && (v == 0.0 || v == 1.0);
        binary = binary && (values[0].size() + values[1].size()) > 0;

        if (binary) {
            any_bin = true;
            long long yes[2] = {0, 0}, no[2] = {0, 0};
            for (int c : {0, 1})
                for (double v : values[c]) (v == 1.0 ? yes[c] : no[c])++;
            std::string p = "-";
            if (!values[0].empty() && !values[1].empty()) {
                const TestResult r = chi_squared_2x2(yes[1], no[1], yes[0], no[0]);
                if (!r.degenerate) p = format_double(r.p_value);
            }
            for (int c : {1, 0}) {
                bin += cohort.schema[col] + '\t' + cohort.groups[col] + '\t' +
                       (c ? "faller" : "non_faller") + '\t' + std::to_string(values[c].size()) +
                       '\t' + std::to_string(yes[c]) + '\t' + std::to_string(no[c]) + '\t' +
                       (c ? p : std::string("-")) + '\n';
            }
        } else {
            any_cont = true;
            std::string p = "-";
            if (values[0].size() >= 2 && values[1].size() >= 2) {
                const TestResult r = welch_t_test(values[1], values[0]);
                p = format_double(r.p_value);
            }
            for (int c : {1, 0}) {
                cont += cohort.schema[col] + '\t' + cohort.groups[col] + '\t' +
                        (c ? "faller" : "non_faller") + '\t' + std::to_string(values[c].size());
                if (values[c].empty()) {
                    cont += "\t-\t-\t-\t-\t-\t-";
                } else {
                    const SixNumberSummary s = six_number_summary(values[c]);
                    for (double v : {s.min, s.q1, s.median, s.mean, s.q3, s.max})
                        cont += '\t' + format_double(v);
                }
                cont += '\t' + (c ? p : std::string("-")) + '\n';
            }
        }
    }
    std::string out;
    if (any_cont) out += cont;
    if (any_bin) {
        if (any_cont) out += '\n';
        out += bin;
    }
    return out;
}

}  // namespace fallbench
