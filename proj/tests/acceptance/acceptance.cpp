// Runs every primary acceptance criterion and prints one verdict line per
// criterion. Exit status is nonzero when a gating criterion fails.

#include "../support/oracle.hpp"

#include <dfk/algebra/ops.hpp>
#include <dfk/algebra/reference.hpp>
#include <dfk/cli/session.hpp>
#include <dfk/core/counters.hpp>
#include <dfk/core/schema.hpp>
#include <dfk/engine/engine.hpp>
#include <dfk/engine/partition.hpp>
#include <dfk/io/csv.hpp>
#include <dfk/planner/planner.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace dfk;
using namespace dfk::algebra;
using dfk::testing::Gen;
namespace fs = std::filesystem;

namespace {

const std::string kRoot = DFK_SOURCE_DIR;

struct Verdict {
    enum class Kind { Pass, Fail, Skip } kind = Kind::Pass;
    std::string detail;
};

auto pass(std::string d) -> Verdict { return {Verdict::Kind::Pass, std::move(d)}; }
auto failed(std::string d) -> Verdict { return {Verdict::Kind::Fail, std::move(d)}; }

using Clock = std::chrono::steady_clock;

auto seconds_since(Clock::time_point t) -> double {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

auto sales_path() -> std::string { return kRoot + "/data/sales.csv"; }

auto sales_scan() -> PlanRef {
    CsvSource src;
    src.path = sales_path();
    return plan::scan_csv(src);
}

/// Expected frame from text rows; "NULL" marks a null cell.
auto expected_frame(const std::vector<std::vector<std::string>>& rows, std::vector<std::string> cols,
                    std::vector<std::string> labels) -> Dataframe {
    std::vector<std::vector<CellValue>> cells;
    for (const auto& r : rows) {
        std::vector<CellValue> row;
        for (const auto& t : r) {
            row.push_back(t == "NULL" ? CellValue::null() : CellValue::raw(t));
        }
        cells.push_back(std::move(row));
    }
    return Dataframe::from_rows(cells, std::move(cols), std::move(labels));
}

/// Cell-for-cell comparison on labels, order and values. Nulls must be
/// true nulls on both sides.
auto cell_diff(const Dataframe& got, const Dataframe& want) -> std::string {
    if (got.rows() != want.rows() || got.cols() != want.cols()) {
        return "shape " + std::to_string(got.rows()) + "x" + std::to_string(got.cols()) + " vs " +
               std::to_string(want.rows()) + "x" + std::to_string(want.cols());
    }
    if (got.row_labels() != want.row_labels()) {
        return "row labels differ";
    }
    if (got.col_labels() != want.col_labels()) {
        return "column labels differ";
    }
    for (std::size_t i = 0; i < got.rows(); ++i) {
        for (std::size_t j = 0; j < got.cols(); ++j) {
            const auto& a = got.at(i, j);
            const auto& b = want.at(i, j);
            if (a.is_null() != b.is_null() || (!a.is_null() && a.to_text() != b.to_text())) {
                return "cell (" + got.row_label(i) + ", " + got.col_label(j) + ") = '" +
                       (a.is_null() ? "NULL" : a.to_text()) + "'";
            }
        }
    }
    return {};
}

auto wide_months() -> Dataframe {
    return expected_frame({{"100", "150", "300"}, {"110", "200", "310"}, {"120", "250", "NULL"}},
                          {"2001", "2002", "2003"}, {"Jan", "Feb", "Mar"});
}

auto wide_years() -> Dataframe {
    return expected_frame({{"100", "110", "120"}, {"150", "200", "250"}, {"300", "310", "NULL"}},
                          {"Jan", "Feb", "Mar"}, {"2001", "2002", "2003"});
}

auto eager_engine(std::size_t threads = 1) -> engine::EngineConfig {
    engine::EngineConfig c;
    c.mode = engine::Mode::Eager;
    c.threads = threads;
    return c;
}

// 1 ---------------------------------------------------------------------
auto pivot_golden() -> Verdict {
    const auto t0 = Clock::now();
    engine::Engine eng(eager_engine());
    const auto months = eng.execute(plan::pivot(sales_scan(), "Year", "Month", "Sales"));
    const auto years = eng.execute(plan::pivot(sales_scan(), "Month", "Year", "Sales"));
    const double secs = seconds_since(t0);
    if (auto d = cell_diff(months, wide_months()); !d.empty()) {
        return failed("wide table of months: " + d);
    }
    if (auto d = cell_diff(years, wide_years()); !d.empty()) {
        return failed("wide table of years: " + d);
    }
    if (!months.at(2, 2).is_null()) {
        return failed("(Mar, 2003) is not null");
    }
    if (secs >= 1.0) {
        return failed("took " + std::to_string(secs) + " s");
    }
    return pass("both wide tables match, (Mar, 2003) is NULL, " + std::to_string(secs) + " s");
}

// 2 ---------------------------------------------------------------------
auto pivot_duality() -> Verdict {
    const auto by_year = plan::pivot(sales_scan(), "Year", "Month", "Sales");
    const auto by_month = plan::pivot(sales_scan(), "Month", "Year", "Sales");
    const auto transposed = evaluate(plan::transpose(by_year));
    const auto direct = evaluate(by_month);
    if (!(transposed == direct)) {
        return failed("transpose(pivot by Year) != pivot by Month");
    }
    planner::PlanStats stats;
    stats.mark(by_month->inputs[0], "Year", planner::ColumnFlags{true, false});
    const auto res = planner::rewrite(by_month, stats);
    const bool r7 = std::any_of(res.fired.begin(), res.fired.end(), [](const std::string& r) { return r.rfind("R7", 0) == 0; });
    if (!r7) {
        return failed("R7 did not fire");
    }
    std::vector<std::vector<std::string>> group_keys;
    std::function<void(const PlanRef&)> walk = [&](const PlanRef& n) {
        if (n->kind == OpKind::GroupBy) {
            group_keys.push_back(n->as<GroupBySpec>().keys);
        }
        for (const auto& c : n->inputs) {
            walk(c);
        }
    };
    walk(res.plan);
    if (group_keys.size() != 1 || group_keys[0] != std::vector<std::string>{"Year"}) {
        return failed("rewritten plan does not group on Year");
    }
    counters().reset();
    engine::EngineConfig cfg = eager_engine();
    cfg.rewrite = false;
    engine::Engine eng(cfg);
    const auto got = eng.execute(res.plan);
    const auto groupbys = counters().snapshot().kernels(OpKind::GroupBy);
    if (!(got == direct)) {
        return failed("R7 plan result differs from pivot by Month");
    }
    if (groupbys != 1) {
        return failed("groupby kernel ran " + std::to_string(groupbys) + " times");
    }
    return pass("T(pivot Year) == pivot Month; R7 plan groups on Year, 1 groupby kernel, identical frame");
}

// 3 ---------------------------------------------------------------------
auto oracle_equivalence() -> Verdict {
    const auto t0 = Clock::now();
    constexpr int kPlans = 1000;
    const std::vector<engine::Mode> modes{engine::Mode::Eager, engine::Mode::Lazy, engine::Mode::Opportunistic};
    const std::vector<std::size_t> threads{1, 2, 4, 8};
    Gen gen(20240611);
    std::size_t checks = 0;
    std::size_t succeeded = 0;
    for (int i = 0; i < kPlans; ++i) {
        const auto p = gen.plan(1 + static_cast<int>(gen.below(5)));
        const std::size_t block_rows = 1 + gen.below(4);
        try {
            (void)evaluate(p);
            ++succeeded;
        } catch (const Error&) {
        }
        for (auto m : modes) {
            for (auto t : threads) {
                const auto report = dfk::testing::check_plan(p, {m, t, block_rows});
                ++checks;
                if (!report.empty()) {
                    return failed("plan " + std::to_string(i) + " mode " + std::string(engine::to_string(m)) +
                                  " threads " + std::to_string(t) + ": " + report);
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 60.0) {
        return failed("took " + std::to_string(secs) + " s");
    }
    return pass(std::to_string(kPlans) + " plans (" + std::to_string(succeeded) + " non-error) x 3 modes x 4 thread counts = " +
                std::to_string(checks) + " checks, " + std::to_string(secs) + " s");
}

// 4 ---------------------------------------------------------------------
auto zero_copy() -> Verdict {
    std::vector<CellValue> cells;
    cells.reserve(1000 * 1000);
    for (std::size_t i = 0; i < 1000 * 1000; ++i) {
        cells.push_back(CellValue::raw(std::to_string(i % 997)));
    }
    const auto grid = PartitionGrid::from_row_major(1000, 1000, std::move(cells), BlockShape{100, 100});
    counters().reset();
    const auto t = engine::transpose_grid(grid);
    auto s = counters().snapshot();
    if (s.cross_block_moves != 0 || s.cells_copied != 0 || t.at(3, 7).to_text() != grid.at(7, 3).to_text()) {
        return failed("transpose_grid moved or copied cells");
    }
    std::vector<std::vector<std::string>> text(200, std::vector<std::string>(4));
    Gen gen(7);
    for (auto& r : text) {
        for (auto& c : r) {
            c = gen.cell_text(0);
        }
    }
    const auto df = Dataframe::from_text(text, {"a", "b", "c", "d"}, {}, BlockShape{16, 2});
    counters().reset();
    const auto renamed = rename(df, Axis::Columns, {{"a", "z"}});
    const auto sorted = sort(df, {{ColumnRef::named("b"), true}, {ColumnRef::named("a"), false}});
    s = counters().snapshot();
    if (s.cross_block_moves != 0 || s.cells_copied != 0 || !renamed.shares_grid_with(df) || !sorted.shares_grid_with(df)) {
        return failed("rename or sort copied cells");
    }
    // T(SORT(T(x))) on a frame whose row labels name the sort key.
    const auto wide = Dataframe::from_text({{"3", "1", "2", "1"}, {"x", "y", "z", "w"}}, {"p", "q", "r", "s"}, {"k", "v"});
    const auto tst = plan::transpose(plan::sort(plan::transpose(plan::scan(wide)), {{ColumnRef::named("k"), true}}));
    engine::Engine eng(eager_engine());
    counters().reset();
    const auto h = eng.submit(tst);
    const auto got = eng.collect(h);
    s = counters().snapshot();
    const bool r3 = std::any_of(h.fired_rules().begin(), h.fired_rules().end(),
                                [](const std::string& r) { return r.rfind("R3", 0) == 0; });
    if (!r3 || s.cross_block_moves != 0 || s.cells_copied != 0 || !got.shares_grid_with(wide)) {
        return failed("T.SORT.T rewrite copied cells or did not fire");
    }
    if (!same_data(got, evaluate(tst))) {
        return failed("T.SORT.T rewrite changed the result");
    }
    counters().reset();
    const auto tt = eng.execute(plan::transpose(plan::transpose(plan::scan(df))));
    s = counters().snapshot();
    if (s.kernels(OpKind::Transpose) != 0 || !same_data(tt, df)) {
        return failed("T(T(x)) executed " + std::to_string(s.kernels(OpKind::Transpose)) + " transpose kernels");
    }
    return pass("transpose_grid 1000x1000, rename, sort, T.SORT.T: 0 moves, 0 copies; T(T(x)): 0 transpose kernels");
}

// 5 ---------------------------------------------------------------------
auto write_temp(const std::string& name, const std::string& text) -> std::string {
    const auto dir = fs::temp_directory_path() / "dfk_acceptance";
    fs::create_directories(dir);
    const auto path = (dir / name).string();
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

auto schema_deferral() -> Verdict {
    Gen gen(55);
    std::vector<std::vector<std::string>> text(400, std::vector<std::string>(6));
    for (auto& r : text) {
        for (std::size_t j = 0; j < 6; ++j) {
            r[j] = gen.cell_text(static_cast<int>(j % 5));
        }
    }
    const auto wide = Dataframe::from_text(text, {"a", "b", "c", "d", "e", "f"});
    CsvSource src;
    src.path = write_temp("deferral.csv", io::format_csv(wide));
    // Five static-schema operators, then head(5).
    auto chain = [](PlanRef in) {
        auto p = plan::rename(std::move(in), {{"a", "id"}});
        p = plan::project(p, std::vector<std::string>{"id", "b", "c"});
        p = plan::select(p, Predicate::compare(ColumnRef::named("id"), CompareOp::Ge, CellValue::raw("0")));
        p = plan::sort(p, {{ColumnRef::named("b"), true}});
        p = plan::drop_duplicates(p);
        return plan::head(p, 5);
    };
    const std::size_t displayed = 3;
    std::ostringstream detail;
    for (auto mode : {engine::Mode::Eager, engine::Mode::Lazy, engine::Mode::Opportunistic}) {
        engine::EngineConfig cfg;
        cfg.mode = mode;
        cfg.block_shape = BlockShape{50, 2};
        engine::Engine eng(cfg);
        counters().reset();
        const auto h = eng.submit(chain(plan::scan_csv(src)));
        (void)eng.render(h, 5);
        const auto s = counters().snapshot().s_invocations;
        if (s > displayed) {
            return failed(std::string(engine::to_string(mode)) + ": " + std::to_string(s) + " S invocations for " +
                          std::to_string(displayed) + " displayed columns");
        }
        detail << engine::to_string(mode) << "=" << s << " ";
    }
    // Declared schema: nothing left to induce.
    auto declared_text = text;
    for (auto& r : declared_text) {
        r[0] = std::to_string(r[0].size());
    }
    const auto typed = induce_all(Dataframe::from_text(declared_text, {"a", "b", "c", "d", "e", "f"}), std::nullopt);
    {
        engine::Engine eng(eager_engine());
        counters().reset();
        (void)eng.render(eng.submit(chain(plan::scan(typed))), 5);
        const auto s = counters().snapshot().s_invocations;
        if (s != 0) {
            return failed("declared schema still ran " + std::to_string(s) + " S invocations");
        }
    }
    // Eager induction everywhere, then R5 removes it again.
    {
        const auto eager_plan = planner::insert_eager_induction(chain(plan::scan_csv(src)));
        const auto res = planner::rewrite(eager_plan);
        const bool r5 = std::any_of(res.fired.begin(), res.fired.end(), [](const std::string& r) { return r.rfind("R5", 0) == 0; });
        engine::EngineConfig cfg = eager_engine();
        cfg.rewrite = false;
        engine::Engine naive(cfg);
        counters().reset();
        const auto a = naive.execute(eager_plan);
        const auto s_naive = counters().snapshot().s_invocations;
        engine::Engine elided(cfg);
        counters().reset();
        const auto b = elided.execute(res.plan);
        const auto s_elided = counters().snapshot().s_invocations;
        if (!r5 || s_elided > displayed || !same_data(a, b)) {
            return failed("R5 did not remove eager induction (S " + std::to_string(s_naive) + " -> " +
                          std::to_string(s_elided) + ")");
        }
        detail << "eager-induction " << s_naive << "->" << s_elided << " after R5; ";
    }
    // Fused scan and deferred induction agree.
    for (int i = 0; i < 60; ++i) {
        const auto f = gen.frame(12, 6);
        const auto csv = io::format_csv(f);
        io::CsvOptions fused;
        fused.fuse_induction = true;
        const auto a = io::parse_csv(csv, fused);
        const auto b = induce_all(io::parse_csv(csv), std::nullopt);
        if (a.schema() != b.schema()) {
            return failed("fused and deferred schemas differ on random frame " + std::to_string(i));
        }
    }
    {
        io::CsvOptions fused;
        fused.fuse_induction = true;
        if (io::read_csv(sales_path(), fused).schema() != induce_all(io::read_csv(sales_path()), std::nullopt).schema()) {
            return failed("fused and deferred schemas differ on the sales fixture");
        }
    }
    detail << "declared=0; fused==deferred on 61 inputs";
    return pass("S per render " + detail.str());
}

// 6 ---------------------------------------------------------------------
auto prefix_bound() -> Verdict {
    std::vector<std::vector<std::string>> text(1000, std::vector<std::string>(2));
    for (std::size_t i = 0; i < text.size(); ++i) {
        text[i] = {std::to_string(i), std::to_string((i * 37) % 101)};
    }
    const auto df = Dataframe::from_text(text, {"a", "b"});
    engine::EngineConfig cfg;
    cfg.mode = engine::Mode::Lazy;
    cfg.block_shape = BlockShape{10, 2};
    auto pipeline = [&] {
        auto p = plan::map(plan::scan(df), UdfSpec::builtin("arith", {CellValue::raw("c"), CellValue::raw("a"),
                                                                      CellValue::raw("+"), CellValue::raw("b")}));
        p = plan::select(p, Predicate::compare(ColumnRef::named("c"), CompareOp::Ge, CellValue::raw("0")));
        return plan::project(p, std::vector<std::string>{"c", "a"});
    };
    const auto want = evaluate(pipeline());
    std::ostringstream detail;
    {
        engine::Engine eng(cfg);
        const auto h = eng.submit(plan::head(pipeline(), 5));
        counters().reset();
        const auto got = eng.collect(h);
        const auto parts = counters().snapshot().partitions_evaluated;
        if (parts > 2 || !(got == head(want, 5))) {
            return failed("head(5) evaluated " + std::to_string(parts) + " partitions");
        }
        detail << "head(5): " << parts << " partitions; ";
    }
    {
        engine::Engine eng(cfg);
        const auto h = eng.submit(pipeline());
        counters().reset();
        const auto got = eng.head(h, 5);
        const auto parts = counters().snapshot().partitions_evaluated;
        if (parts > 2 || !(got == head(want, 5))) {
            return failed("demand head(5) evaluated " + std::to_string(parts) + " partitions");
        }
        counters().reset();
        const auto shown = eng.render(h, 5);
        const auto more = counters().snapshot().partitions_evaluated;
        if (more > 2 || shown != io::render(want, 5)) {
            return failed("render evaluated " + std::to_string(more) + " more partitions");
        }
        detail << "render: +" << more << " partitions; ";
    }
    {
        const auto sorted = plan::head(plan::sort(pipeline(), {{ColumnRef::named("c"), false}}), 3);
        engine::Engine eng(cfg);
        const auto got = eng.execute(sorted);
        if (!(got == evaluate(sorted))) {
            return failed("head(3) after sort differs from the reference");
        }
        detail << "head(3) after sort == reference";
    }
    return pass(detail.str());
}

// 7 ---------------------------------------------------------------------
auto sharing() -> Verdict {
    const std::string script = "df = read_csv(\"" + sales_path() +
                               "\")\n"
                               "a = groupby(df, \"Year\", count)\n"
                               "b = sort(groupby(df, \"Year\", count), desc(\"Year\"))\n"
                               "a\n"
                               "b\n"
                               "union(groupby(df, \"Year\", count), head(groupby(df, \"Year\", count), 1))\n";
    auto run = [&](std::size_t cache, engine::Mode mode, std::uint64_t& groupbys) {
        cli::SessionOptions opts;
        opts.engine.mode = mode;
        opts.engine.cache_bytes = cache;
        cli::Session session(opts);
        counters().reset();
        auto out = session.run_text(script);
        session.engine().wait_idle();
        groupbys = counters().snapshot().kernels(OpKind::GroupBy);
        return out;
    };
    std::uint64_t with_cache = 0;
    std::uint64_t without = 0;
    std::uint64_t ignored = 0;
    const auto a = run(std::size_t{64} << 20, engine::Mode::Eager, with_cache);
    const auto b = run(0, engine::Mode::Eager, without);
    if (with_cache != 1) {
        return failed("groupby kernel ran " + std::to_string(with_cache) + " times with the cache");
    }
    if (a != b) {
        return failed("output changed with the cache disabled");
    }
    for (auto mode : {engine::Mode::Lazy, engine::Mode::Opportunistic}) {
        if (run(std::size_t{64} << 20, mode, ignored) != a || run(0, mode, ignored) != a) {
            return failed(std::string("output differs in ") + std::string(engine::to_string(mode)) + " mode");
        }
    }
    return pass("groupby kernel ran once over 4 occurrences; cache off: " + std::to_string(without) +
                " runs, identical output in all modes");
}

// 8 ---------------------------------------------------------------------
auto labelled(Gen& gen, const std::string& prefix, bool key_column) -> Dataframe {
    auto f = gen.frame(8, 5);
    while (key_column && f.rows() == 0) {
        f = gen.frame(8, 5);
    }
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        labels.push_back(prefix + std::to_string(i));
    }
    std::vector<std::vector<std::string>> text(f.rows());
    std::vector<std::string> cols = f.col_labels();
    for (std::size_t i = 0; i < f.rows(); ++i) {
        for (std::size_t j = 0; j < f.cols(); ++j) {
            text[i].push_back(f.at(i, j).to_text());
        }
        text[i].push_back(labels[i]);
        if (key_column) {
            // Row 0 is never null so the key column always induces as Int.
            text[i].push_back(i == 0 ? "1" : gen.pick(std::vector<std::string>{"1", "2", "3", ""}));
        }
    }
    cols.push_back("rid");
    if (key_column) {
        cols.push_back("key");
    }
    return Dataframe::from_text(text, cols, labels, BlockShape{1 + gen.below(3), 2});
}

/// Position of each output row in the input (by unique label), or -1.
auto positions(const std::vector<std::string>& out, const std::vector<std::string>& in) -> std::vector<long> {
    std::vector<long> pos;
    for (const auto& l : out) {
        auto it = std::find(in.begin(), in.end(), l);
        pos.push_back(it == in.end() ? -1 : static_cast<long>(it - in.begin()));
    }
    return pos;
}

auto increasing(const std::vector<long>& p) -> bool {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0 || (i > 0 && p[i] <= p[i - 1])) {
            return false;
        }
    }
    return true;
}

auto order_preservation() -> Verdict {
    Gen gen(8080);
    std::map<std::string, std::size_t> checked;
    for (int round = 0; round < 500; ++round) {
        engine::EngineConfig cfg;
        cfg.mode = static_cast<engine::Mode>(gen.below(3));
        cfg.threads = 1 + gen.below(4);
        cfg.block_shape = BlockShape{1 + gen.below(3), 2};
        engine::Engine eng(cfg);
        const auto df = labelled(gen, "r", false);
        const auto in = plan::scan(df);
        const auto ids = df.row_labels();
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < df.rows(); ++i) {
            if (gen.chance(0.5)) {
                subset.push_back(i);
            }
        }
        const std::vector<std::pair<std::string, PlanRef>> cases{
            {"selection", plan::select(in, gen.predicate())},
            {"selection positions", plan::select_positions(in, subset)},
            {"selection labels", plan::select_labels(in, {"r1"})},
            {"projection", plan::project(in, std::vector<ColumnRef>{ColumnRef::named("rid"), gen.column_ref()})},
            {"difference", plan::difference(in, plan::scan(labelled(gen, "r", false)))},
            {"drop_duplicates", plan::drop_duplicates(plan::project(in, std::vector<ColumnRef>{ColumnRef::at(0)}))},
            {"rename", plan::rename(in, {{"rid", "id"}, {"a", "z"}})},
            {"window", plan::window(in, {WindowFn::Shift, 1, false}, {})},
            {"map", plan::map(in, UdfSpec::builtin("isnull"))},
            {"to_labels", plan::to_labels(in, "rid")},
            {"head", plan::head(in, gen.below(6))},
            {"tail", plan::tail(in, gen.below(6))},
            {"induce", plan::induce(in)},
            {"point_set", plan::point_set(in, gen.below(4), Selector{std::size_t{0}}, CellValue::raw("7"))},
        };
        for (const auto& [name, p] : cases) {
            if (!preserves_parent_order(p->kind)) {
                return failed(name + " is not marked as parent-order");
            }
            dfk::testing::Outcome o = dfk::testing::outcome([&] { return eng.execute(p); });
            if (o.error) {
                continue;  // e.g. positional point_set past the end
            }
            auto labels = o.frame->row_labels();
            if (!increasing(positions(labels, ids))) {
                return failed(name + " reordered rows in round " + std::to_string(round));
            }
            ++checked[name];
        }
        // from_labels: the old labels become a data column.
        {
            const auto out = eng.execute(plan::from_labels(in, "old"));
            std::vector<std::string> old;
            const auto col = out.find_cols("old").at(0);
            for (std::size_t i = 0; i < out.rows(); ++i) {
                old.push_back(out.at(i, col).to_text());
            }
            if (old != ids) {
                return failed("from_labels reordered rows");
            }
            ++checked["from_labels"];
        }
        // union: left rows then right rows.
        {
            const auto right = labelled(gen, "s", false);
            const auto out = dfk::testing::outcome([&] { return eng.execute(plan::union_of(in, plan::scan(right))); });
            if (!out.error) {
                auto want = ids;
                const auto r = right.row_labels();
                want.insert(want.end(), r.begin(), r.end());
                if (out.frame->row_labels() != want) {
                    return failed("union is not left-then-right");
                }
                ++checked["union"];
            }
        }
        // join: nested-loop order against an independent pair enumeration.
        {
            const auto left = labelled(gen, "l", true);
            const auto right = labelled(gen, "m", true);
            const bool outer = gen.chance(0.5);
            JoinSpec spec{outer ? JoinKind::Left : JoinKind::Inner, {{"key", "key"}}};
            const auto out = eng.execute(plan::join(plan::scan(left), plan::scan(right), spec));
            std::vector<std::pair<std::string, std::string>> want;
            const auto lk = left.find_cols("key")[0];
            const auto rk = right.find_cols("key")[0];
            const auto rr = right.find_cols("rid")[0];
            for (std::size_t i = 0; i < left.rows(); ++i) {
                bool any = false;
                for (std::size_t j = 0; j < right.rows(); ++j) {
                    const auto a = left.at(i, lk).to_text();
                    if (!a.empty() && a == right.at(j, rk).to_text()) {
                        want.emplace_back(left.row_label(i), right.at(j, rr).to_text());
                        any = true;
                    }
                }
                if (!any && outer) {
                    want.emplace_back(left.row_label(i), "");
                }
            }
            std::vector<std::pair<std::string, std::string>> got;
            const auto rid = out.find_cols("rid");
            // The right side's rid is the second "rid" column.
            for (std::size_t i = 0; i < out.rows(); ++i) {
                const auto& v = out.at(i, rid.back());
                got.emplace_back(out.row_label(i), v.is_null() ? "" : v.to_text());
            }
            if (rid.size() != 2 || got != want) {
                return failed("join does not follow nested left-major order");
            }
            ++checked["join"];
        }
    }
    std::ostringstream detail;
    detail << "500 frames;";
    for (const auto& [k, v] : checked) {
        detail << " " << k << "=" << v;
    }
    return pass(detail.str());
}

// 9 ---------------------------------------------------------------------
auto raw_identical(const Dataframe& a, const Dataframe& b) -> bool {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.row_labels() != b.row_labels() ||
        a.col_labels() != b.col_labels()) {
        return false;
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (!raw_equal(a.at(i, j), b.at(i, j))) {
                return false;
            }
        }
    }
    return true;
}

auto csv_round_trip() -> Verdict {
    Gen gen(909);
    for (int i = 0; i < 200; ++i) {
        const auto f = gen.frame(10, 6);
        io::CsvOptions opts;
        opts.has_row_labels = gen.chance(0.5);
        opts.delimiter = gen.chance(0.2) ? ';' : ',';
        const auto path = write_temp("round_trip.csv", io::format_csv(f, opts));
        const auto first = io::read_csv(path, opts);
        io::write_csv(first, path, opts);
        const auto second = io::read_csv(path, opts);
        const bool labels_ok = !opts.has_row_labels || first.row_labels() == f.row_labels();
        if (!raw_identical(first, second) || !labels_ok || first.col_labels() != f.col_labels()) {
            return failed("random frame " + std::to_string(i) + " did not round-trip");
        }
        for (std::size_t r = 0; r < f.rows(); ++r) {
            for (std::size_t c = 0; c < f.cols(); ++c) {
                if (!raw_equal(first.at(r, c), f.at(r, c))) {
                    return failed("random frame " + std::to_string(i) + " changed a value");
                }
            }
        }
    }
    const auto sales = io::read_csv(sales_path());
    const auto copy = write_temp("sales_copy.csv", io::format_csv(sales));
    const auto again = io::read_csv(copy);
    std::ifstream orig(sales_path(), std::ios::binary);
    std::stringstream orig_text;
    orig_text << orig.rdbuf();
    if (!raw_identical(sales, again) || io::format_csv(sales) != orig_text.str()) {
        return failed("sales fixture did not round-trip");
    }
    return pass("200 random frames and the sales fixture (byte-identical rewrite)");
}

// 10 --------------------------------------------------------------------
auto perf_smoke() -> Verdict {
    const unsigned cores = std::thread::hardware_concurrency();
    if (cores < 4) {
        return {Verdict::Kind::Skip, "soft, non-gating: " + std::to_string(cores) + " core(s) available, needs 4"};
    }
    std::vector<std::vector<std::string>> text(1000000, std::vector<std::string>(10));
    for (std::size_t i = 0; i < text.size(); ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            text[i][j] = (i + j) % 7 == 0 ? "" : "x";
        }
    }
    const auto df = Dataframe::from_text(text, {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    auto time = [&](std::size_t threads) {
        engine::EngineConfig cfg = eager_engine(threads);
        cfg.block_shape = BlockShape{50000, 10};
        engine::Engine eng(cfg);
        const auto t0 = Clock::now();
        (void)eng.execute(plan::map(plan::scan(df), UdfSpec::builtin("isnull")));
        return seconds_since(t0);
    };
    const double one = time(1);
    const double four = time(4);
    const double speedup = one / four;
    std::ostringstream d;
    d << "soft: 1 thread " << one << " s, 4 threads " << four << " s, speedup " << speedup << "x";
    if (speedup < 1.5) {
        return {Verdict::Kind::Skip, d.str() + " (below 1.5x, non-gating)"};
    }
    return pass(d.str());
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"pivot golden", pivot_golden},
        {"pivot duality and R7", pivot_duality},
        {"oracle equivalence", oracle_equivalence},
        {"zero-copy metadata operations", zero_copy},
        {"schema-induction deferral", schema_deferral},
        {"prefix bound", prefix_bound},
        {"sharing and reuse", sharing},
        {"order preservation", order_preservation},
        {"CSV round-trip", csv_round_trip},
        {"perf smoke", perf_smoke},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = failed(std::string("exception: ") + e.what());
        }
        const char* tag = v.kind == Verdict::Kind::Pass ? "PASS" : v.kind == Verdict::Kind::Fail ? "FAIL" : "SKIP";
        std::cout << "criterion " << (i + 1) << " [" << criteria[i].first << "]: " << tag << " - " << v.detail << std::endl;
        failures += v.kind == Verdict::Kind::Fail ? 1 : 0;
    }
    return failures == 0 ? 0 : 1;
}
