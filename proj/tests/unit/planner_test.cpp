#include "../support/gen.hpp"

#include <dfk/algebra/reference.hpp>
#include <dfk/planner/planner.hpp>

#include <gtest/gtest.h>

#include <functional>
#include <set>

using namespace dfk;
using namespace dfk::algebra;
namespace p = dfk::algebra::plan;
using dfk::testing::Gen;
using dfk::testing::outcome;

namespace {

auto sales() -> Dataframe {
    return Dataframe::from_text({{"2001", "Jan", "100"},
                                 {"2001", "Feb", "110"},
                                 {"2001", "Mar", "120"},
                                 {"2002", "Jan", "150"},
                                 {"2002", "Feb", "200"},
                                 {"2002", "Mar", "250"},
                                 {"2003", "Jan", "300"},
                                 {"2003", "Feb", "310"}},
                                {"Year", "Month", "Sales"});
}

auto fired(const planner::RewriteResult& r, const std::string& prefix) -> bool {
    return std::any_of(r.fired.begin(), r.fired.end(), [&](const auto& f) { return f.rfind(prefix, 0) == 0; });
}

auto count_kind(const PlanRef& plan, OpKind kind) -> std::size_t {
    std::set<const PlanNode*> seen;
    std::size_t n = 0;
    std::function<void(const PlanRef&)> walk = [&](const PlanRef& node) {
        if (!seen.insert(node.get()).second) {
            return;
        }
        n += node->kind == kind ? 1 : 0;
        for (const auto& in : node->inputs) {
            walk(in);
        }
    };
    walk(plan);
    return n;
}

auto distinct_nodes(const PlanRef& plan) -> std::size_t {
    std::set<const PlanNode*> seen;
    std::function<void(const PlanRef&)> walk = [&](const PlanRef& node) {
        if (seen.insert(node.get()).second) {
            for (const auto& in : node->inputs) {
                walk(in);
            }
        }
    };
    walk(plan);
    return seen.size();
}

auto only(int rule) -> planner::RewriteOptions {
    planner::RewriteOptions o;
    o.r1 = rule == 1;
    o.r2 = rule == 2;
    o.r3 = rule == 3;
    o.r4 = rule == 4;
    o.r5 = rule == 5;
    o.r6 = rule == 6;
    o.r7 = rule == 7;
    o.expand_pivots = rule == 7;
    return o;
}

}  // namespace

TEST(Planner, R1DoubleTransposeCancels) {
    auto scan = p::scan(sales(), "sales");
    auto r = planner::rewrite(p::transpose(p::transpose(scan)));
    EXPECT_TRUE(fired(r, "R1"));
    EXPECT_TRUE(structurally_equal(r.plan, scan));
}

TEST(Planner, R2PullsTransposeAboveSelection) {
    auto plan = p::select_positions(p::transpose(p::scan(sales(), "sales")), {2, 0});
    auto r = planner::rewrite(plan, {}, only(2));
    EXPECT_TRUE(fired(r, "R2"));
    EXPECT_EQ(r.plan->kind, OpKind::Transpose);
    EXPECT_EQ(r.plan->inputs[0]->kind, OpKind::Projection);
    EXPECT_TRUE(same_data(evaluate(r.plan), evaluate(plan)));

    auto renamed = p::rename(p::transpose(p::scan(sales(), "sales")), {{"Year", "Y"}}, Axis::Rows);
    auto rr = planner::rewrite(renamed, {}, only(2));
    EXPECT_TRUE(fired(rr, "R2"));
    EXPECT_TRUE(same_data(evaluate(rr.plan), evaluate(renamed)));
}

TEST(Planner, R3ColumnReorderThroughSort) {
    auto t = p::transpose(p::scan(sales(), "sales"));
    // Columns of the transposed frame are the original row labels.
    auto plan = p::transpose(p::sort(t, {{ColumnRef::named("3"), false}}));
    auto r = planner::rewrite(plan, {}, only(3));
    EXPECT_TRUE(fired(r, "R3"));
    EXPECT_EQ(count_kind(r.plan, OpKind::Transpose), 0u);
    EXPECT_TRUE(same_data(evaluate(r.plan), evaluate(plan)));
}

TEST(Planner, R4SortElisionAndMerge) {
    auto scan = p::scan(sales(), "sales");
    auto other = p::scan(Dataframe::from_text({{"2001", "Jan", "100"}}, {"Year", "Month", "Sales"}), "one");
    // Only the right operand's order is irrelevant.
    auto diff = p::difference(scan, p::sort(other, {{ColumnRef::named("Sales"), false}}));
    auto r = planner::rewrite(diff, {}, only(4));
    EXPECT_TRUE(fired(r, "R4 sort-elision"));
    EXPECT_EQ(count_kind(r.plan, OpKind::Sort), 0u);

    auto twice = p::sort(p::sort(scan, {{ColumnRef::named("Sales"), true}}), {{ColumnRef::named("Year"), false}});
    auto m = planner::rewrite(twice, {}, only(4));
    EXPECT_TRUE(fired(m, "R4 sort-merge"));
    EXPECT_EQ(count_kind(m.plan, OpKind::Sort), 1u);
    EXPECT_TRUE(evaluate(m.plan) == evaluate(twice));
}

TEST(Planner, R5RemovesInductionBetweenStaticOperators) {
    auto chain = p::rename(p::project(p::select_positions(p::scan(sales(), "sales"), {0, 1, 2}),
                                      std::vector<std::string>{"Year", "Sales"}),
                           {{"Sales", "Total"}});
    auto eager = planner::insert_eager_induction(chain);
    const auto before = count_kind(eager, OpKind::Induce);
    auto r = planner::rewrite(eager, {}, only(5));
    EXPECT_TRUE(fired(r, "R5"));
    EXPECT_LT(count_kind(r.plan, OpKind::Induce), before);
    EXPECT_TRUE(same_data(evaluate(r.plan), evaluate(eager)));

    // Explicit requests stay.
    auto asked = p::induce(p::scan(sales(), "sales"));
    EXPECT_EQ(count_kind(planner::rewrite(asked).plan, OpKind::Induce), 1u);
}

TEST(Planner, R6MergesEqualSubplans) {
    GroupBySpec spec{{"Year"}, {Aggregate{AggFn::Count, "Sales"}}};
    auto scan = p::scan(sales(), "s");
    auto a = p::groupby(scan, spec);
    auto b = p::groupby(scan, spec);
    auto plan = p::union_of(a, b);
    EXPECT_NE(a.get(), b.get());
    EXPECT_EQ(a->hash, b->hash);
    auto r = planner::rewrite(plan, {}, only(6));
    EXPECT_TRUE(fired(r, "R6"));
    EXPECT_EQ(r.plan->inputs[0].get(), r.plan->inputs[1].get());
    EXPECT_EQ(distinct_nodes(r.plan), 3u);
    // Scans are keyed by source identity, not by content.
    EXPECT_NE(p::scan(sales(), "s")->hash, p::scan(sales(), "s")->hash);
}

TEST(Planner, InvalidPivotIsLeftForEvaluation) {
    auto plan = p::pivot(p::scan(sales(), "sales"), "Year", "Year", "Sales");
    planner::RewriteResult r;
    ASSERT_NO_THROW(r = planner::rewrite(plan));
    EXPECT_EQ(count_kind(r.plan, OpKind::Pivot), 1u);
    EXPECT_EQ(outcome([&] { return evaluate(r.plan); }).error, ErrorKind::InvalidArgument);
}

TEST(Planner, R7PivotOnTheSortedColumn) {
    auto scan = p::scan(sales(), "sales");
    auto plan = p::pivot(scan, "Month", "Year", "Sales");
    planner::PlanStats stats;
    stats.mark(scan, "Year", planner::ColumnFlags{true, true});
    auto r = planner::rewrite(plan, stats);
    EXPECT_TRUE(fired(r, "R7"));
    EXPECT_TRUE(same_data(evaluate(r.plan), evaluate(plan)));
    auto years = evaluate(plan);
    EXPECT_EQ(years.row_labels(), (std::vector<std::string>{"2001", "2002", "2003"}));
    EXPECT_EQ(years.col_labels(), (std::vector<std::string>{"Jan", "Feb", "Mar"}));

    // Without stats there is nothing to justify the switch.
    EXPECT_FALSE(fired(planner::rewrite(plan), "R7"));
}

TEST(Planner, ObserveFlags) {
    auto stats = planner::observe(sales());
    EXPECT_TRUE(stats["Year"].sorted);
    EXPECT_TRUE(stats["Year"].clustered);
    EXPECT_FALSE(stats["Month"].clustered);
    EXPECT_FALSE(stats["Month"].sorted);
    EXPECT_TRUE(stats["Sales"].sorted);
}

TEST(Planner, ExplainFormat) {
    auto scan = p::scan(sales(), "sales");
    auto quiet = planner::explain(p::head(scan, 2));
    EXPECT_NE(quiet.find("(no rules fired)"), std::string::npos);
    EXPECT_EQ(quiet.rfind("plan:\n", 0), 0u);
    auto loud = planner::explain(p::transpose(p::transpose(scan)));
    EXPECT_NE(loud.find("rewritten:\n"), std::string::npos);
    EXPECT_NE(loud.find("  R1 transpose-elimination\n"), std::string::npos);
    EXPECT_EQ(loud, planner::explain(p::transpose(p::transpose(scan))));
}

TEST(Planner, HashIgnoresBindingNames) {
    auto body = p::head(p::scan(sales(), "sales"), 3);
    auto x = fenced(body, "x");
    auto y = fenced(body, "y");
    EXPECT_EQ(x->hash, y->hash);
    EXPECT_TRUE(structurally_equal(x, y));
    EXPECT_NE(p::head(p::scan(sales(), "sales"), 4)->hash, body->hash);
}

TEST(Planner, CanonicalizeIsIdempotentAndOrdersOperands) {
    auto scan = p::scan(sales(), "sales");
    auto a = Predicate::compare(ColumnRef::named("Year"), CompareOp::Gt, CellValue::raw("2001"));
    auto b = Predicate::not_null(ColumnRef::named("Month"));
    auto ab = planner::canonicalize(p::select(scan, Predicate::both(a, b)));
    auto ba = planner::canonicalize(p::select(scan, Predicate::both(b, a)));
    EXPECT_EQ(ab->hash, ba->hash);
    EXPECT_TRUE(structurally_equal(planner::canonicalize(ab), ab));
}

TEST(Planner, RandomPlansRewriteToAFixpoint) {
    Gen gen(404);
    for (int i = 0; i < 400; ++i) {
        auto plan = gen.plan(1 + static_cast<int>(gen.below(5)));
        auto once = planner::rewrite(plan);
        auto twice = planner::rewrite(once.plan);
        ASSERT_TRUE(structurally_equal(once.plan, twice.plan)) << to_string(plan);
        ASSERT_TRUE(structurally_equal(planner::canonicalize(planner::canonicalize(plan)), planner::canonicalize(plan)));
    }
}

TEST(Planner, EachRulePreservesSemantics) {
    for (int rule = 1; rule <= 7; ++rule) {
        Gen gen(900 + static_cast<std::uint64_t>(rule));
        for (int i = 0; i < 300; ++i) {
            auto plan = gen.plan(1 + static_cast<int>(gen.below(5)));
            auto before = outcome([&] { return evaluate(plan); });
            if (before.error) {
                continue;
            }
            const auto rewritten = planner::rewrite(plan, {}, only(rule)).plan;
            auto after = outcome([&] { return evaluate(rewritten); });
            ASSERT_FALSE(after.error.has_value()) << "R" << rule << " introduced " << to_string(*after.error)
                                                  << "\n" << to_string(plan);
            ASSERT_TRUE(same_data(*after.frame, *before.frame)) << "R" << rule << "\n" << to_string(plan) << "->\n"
                                                                << to_string(rewritten);
        }
    }
}
