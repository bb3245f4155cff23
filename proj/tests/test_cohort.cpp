#include <catch_amalgamated.hpp>

#include <sstream>

#include "fallbench/cohort.hpp"
#include "fallbench/error.hpp"

using namespace fallbench;

namespace {

const char* kSmallCsv =
    "patient_id,outcome,trail_a_time,trail_b_time,demo_age_years\n"
    "p1,faller,30.5,80,61\n"
    "p2,non_faller,22,,58\n"
    "p3,non_faller,NA,75.25,70\n"
    "p4,faller,41,120.5,66\n";

}  // namespace

TEST_CASE("parse_cohort reads schema, groups, outcomes, and missing cells") {
    const Cohort c = parse_cohort(kSmallCsv);
    REQUIRE(c.schema == std::vector<std::string>{"trail_a_time", "trail_b_time", "demo_age_years"});
    CHECK(c.groups == std::vector<std::string>{"Trail", "Trail", "Demographics"});
    REQUIRE(c.records.size() == 4);
    CHECK(c.records[0].outcome == Outcome::faller);
    CHECK(c.records[1].outcome == Outcome::non_faller);
    CHECK(c.records[0].features[0] == 30.5);
    CHECK_FALSE(c.records[1].features[1].has_value());  // empty cell
    CHECK_FALSE(c.records[2].features[0].has_value());  // NA
    CHECK(c.records[2].features[1] == 75.25);
    CHECK(c.faller_count() == 2);
    CHECK(c.prevalence() == 0.5);
}

TEST_CASE("parse_cohort accepts stream input and windows line endings") {
    std::istringstream in("patient_id,outcome,trail_a_time\r\np1,faller,1\r\np2,non_faller,2\r\n");
    const Cohort c = parse_cohort(in);
    CHECK(c.records.size() == 2);
    CHECK(c.records[0].features[0] == 1.0);
}

TEST_CASE("parse_cohort rejects malformed input") {
    CHECK_THROWS_AS(parse_cohort(""), ConfigError);
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome\n"), ConfigError);  // no feature columns
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome,x\np1,faller,1\np1,non_faller,2\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome,x,x\np1,faller,1,2\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome,x\np1,maybe,1\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome,x\np1,faller,abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_cohort("patient_id,outcome,x\np1,faller\n"), ConfigError);  // short row
    CHECK_THROWS_AS(parse_cohort("outcome,patient_id,x\np1,faller,1\n"), ConfigError);  // wrong header
}

TEST_CASE("parse error messages carry line numbers") {
    try {
        parse_cohort("patient_id,outcome,x\np1,faller,1\np2,faller,oops\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
}

TEST_CASE("serialize_cohort round trips byte for byte") {
    const Cohort c = parse_cohort(kSmallCsv);
    const std::string text = serialize_cohort(c);
    const Cohort c2 = parse_cohort(text);
    CHECK(serialize_cohort(c2) == text);
    // missing values serialize as empty cells, not NA
    CHECK(text.find("NA") == std::string::npos);
}

TEST_CASE("infer_group maps known prefixes") {
    CHECK(infer_group("demo_age_years") == "Demographics");
    CHECK(infer_group("history_recent_fall") == "History");
    CHECK(infer_group("trail_b_time") == "Trail");
    CHECK(infer_group("stroop_words_1min") == "Stroop");
    CHECK(infer_group("semantic_animals") == "Semantic");
    CHECK(infer_group("walk12_q7") == "Walk12");
    CHECK(infer_group("grip_strength") == "grip");
}

TEST_CASE("record completeness and complete-case selection") {
    const Cohort c = parse_cohort(kSmallCsv);
    const VariableSet trail{"Trail", {"trail_a_time", "trail_b_time"}};
    CHECK(record_complete(c, c.records[0], trail));
    CHECK_FALSE(record_complete(c, c.records[1], trail));
    CHECK_FALSE(record_complete(c, c.records[2], trail));

    const Cohort sub = select_complete(c, trail);
    REQUIRE(sub.records.size() == 2);
    CHECK(sub.records[0].id == "p1");
    CHECK(sub.records[1].id == "p4");
    CHECK(sub.schema == c.schema);

    // narrowing the variable set can only grow the complete-case population
    const VariableSet a_only{"A", {"trail_a_time"}};
    const Cohort sub_a = select_complete(c, a_only);
    CHECK(sub_a.records.size() >= sub.records.size());
}

TEST_CASE("validate_variable_set rejects unknown or duplicate variables") {
    const Cohort c = parse_cohort(kSmallCsv);
    CHECK_THROWS_AS(validate_variable_set(c, VariableSet{"X", {"nope"}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_variable_set(c, VariableSet{"X", {"trail_a_time", "trail_a_time"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_variable_set(c, VariableSet{"X", {}}), std::invalid_argument);
    CHECK_NOTHROW(validate_variable_set(c, VariableSet{"X", {"trail_a_time"}}));
}

TEST_CASE("builtin variable sets cover groups, unions, and everything") {
    const Cohort c = parse_cohort(
        "patient_id,outcome,demo_age_years,history_theatre,trail_a_time,stroop_words_1min,semantic_animals,walk12_q1\n"
        "p1,faller,1,1,1,1,1,1\n"
        "p2,non_faller,2,0,2,2,2,2\n");
    const auto sets = builtin_variable_sets(c);
    auto find = [&](std::string_view name) { return find_variable_set(sets, name); };
    for (const char* name : {"Demographics", "History", "Trail", "Stroop", "Semantic", "Walk12",
                             "Trail+Demographics", "Trail+Stroop", "Trail+Semantic", "Trail+Walk12",
                             "AllVariables"})
        CHECK(find(name) != nullptr);
    CHECK(find("AllVariables")->variables.size() == 6);
    const auto* td = find("Trail+Demographics");
    REQUIRE(td != nullptr);
    REQUIRE(td->variables.size() == 2);
    CHECK(td->variables[0] == "trail_a_time");  // trail variables lead the unions
    CHECK(find("nope") == nullptr);
}

TEST_CASE("cohort column lookup") {
    const Cohort c = parse_cohort(kSmallCsv);
    CHECK(c.column("trail_b_time") == 1);
    CHECK(c.has_variable("demo_age_years"));
    CHECK_FALSE(c.has_variable("x"));
    CHECK_THROWS_AS(c.column("x"), std::invalid_argument);
    CHECK(c.group_order() == std::vector<std::string>{"Trail", "Demographics"});
    CHECK(c.variables_in_group("Trail") ==
          std::vector<std::string>{"trail_a_time", "trail_b_time"});
}
