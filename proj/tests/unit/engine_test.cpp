#include <dfk/algebra/plan.hpp>
#include <dfk/algebra/reference.hpp>
#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>
#include <dfk/engine/cache.hpp>
#include <dfk/engine/engine.hpp>
#include <dfk/engine/partition.hpp>
#include <dfk/engine/thread_pool.hpp>
#include <dfk/io/render.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>

using namespace dfk;
using namespace dfk::algebra;
using namespace dfk::engine;
namespace p = dfk::algebra::plan;

namespace {

auto numbered(std::size_t rows, std::size_t cols, BlockShape shape = {}) -> Dataframe {
    std::vector<std::vector<std::string>> text(rows, std::vector<std::string>(cols));
    std::vector<std::string> labels;
    for (std::size_t j = 0; j < cols; ++j) {
        labels.push_back("c" + std::to_string(j));
        for (std::size_t i = 0; i < rows; ++i) {
            text[i][j] = std::to_string(i * cols + j);
        }
    }
    return Dataframe::from_text(text, labels, {}, shape);
}

auto config(Mode mode, std::size_t threads = 1, BlockShape shape = {4, 4}) -> EngineConfig {
    EngineConfig c;
    c.mode = mode;
    c.threads = threads;
    c.block_shape = shape;
    return c;
}

template <typename F>
auto error_of(F&& f) -> std::optional<ErrorKind> {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

}  // namespace

TEST(Partition, CeilingTilingAndReassembly) {
    auto df = numbered(10, 10, BlockShape{10, 10});
    auto grid = partition(df, Scheme::Blocks, BlockShape{4, 4});
    EXPECT_EQ(grid.block_rows(), 3u);
    EXPECT_EQ(grid.block_cols(), 3u);
    EXPECT_EQ(grid.tile(2, 2).block->rows(), 2u);
    EXPECT_EQ(grid.tile(2, 2).block->cols(), 2u);
    auto back = repartition(df, Scheme::Blocks, BlockShape{4, 4});
    EXPECT_TRUE(back == df);
}

TEST(Partition, MoveCountMatchesBruteForce) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = dim(rng);
        const std::size_t n = dim(rng);
        const BlockShape from{dim(rng), dim(rng)};
        const BlockShape to{dim(rng), dim(rng)};
        auto df = numbered(m, n, from);
        // A cell moves when the rectangle of the tile holding it changes.
        auto rect = [&](std::size_t i, std::size_t j, BlockShape s) {
            const std::size_t r0 = i - i % s.rows;
            const std::size_t c0 = j - j % s.cols;
            return std::array<std::size_t, 4>{r0, std::min(m, r0 + s.rows), c0, std::min(n, c0 + s.cols)};
        };
        std::uint64_t expected = 0;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                expected += rect(i, j, from) != rect(i, j, to) ? 1 : 0;
            }
        }
        counters().reset();
        auto grid = partition(df, Scheme::Blocks, to);
        ASSERT_EQ(counters().snapshot().cross_block_moves, expected);
        ASSERT_LE(expected, m * n);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ASSERT_EQ(grid.at(i, j), df.at(i, j));
            }
        }
    }
}

TEST(Partition, TransposeMovesNoCell) {
    auto df = numbered(9, 7, BlockShape{4, 3});
    counters().reset();
    auto t = transpose_grid(df.grid());
    EXPECT_EQ(counters().snapshot().cross_block_moves, 0u);
    EXPECT_EQ(counters().snapshot().cells_copied, 0u);
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            ASSERT_EQ(t.at(j, i), df.at(i, j));
        }
    }
}

TEST(ThreadPool, RunsEveryIndexAndRethrowsLowest) {
    ThreadPool pool(4);
    EXPECT_EQ(pool.size(), 4u);
    std::vector<std::atomic<int>> hits(100);
    pool.parallel_for(100, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) {
        EXPECT_EQ(h.load(), 1);
    }
    std::atomic<int> finished{0};
    try {
        pool.parallel_for(50, [&](std::size_t i) {
            finished++;
            if (i == 7 || i == 31) {
                throw std::runtime_error("index " + std::to_string(i));
            }
        });
        FAIL() << "no exception";
    } catch (const std::runtime_error& e) {
        EXPECT_STREQ(e.what(), "index 7");
    }
    EXPECT_EQ(finished.load(), 50);
}

TEST(ThreadPool, SizeOneRunsInline) {
    ThreadPool pool(1);
    const auto caller = std::this_thread::get_id();
    bool inline_only = true;
    pool.parallel_for(10, [&](std::size_t) { inline_only = inline_only && std::this_thread::get_id() == caller; });
    EXPECT_TRUE(inline_only);
}

TEST(Cache, EvictsLowestDensityFirst) {
    auto df = numbered(1, 1);
    auto a = p::head(p::scan(df, "a"), 1);
    auto b = p::head(p::scan(df, "b"), 1);
    auto c = p::head(p::scan(df, "c"), 1);
    auto d = p::head(p::scan(df, "d"), 1);
    MaterializationCache cache(100);
    EXPECT_TRUE(cache.store_sized(a, df, 10, 50));
    EXPECT_TRUE(cache.store_sized(b, df, 100, 50));
    EXPECT_TRUE(cache.store_sized(c, df, 50, 50));
    EXPECT_FALSE(cache.contains(a));
    EXPECT_TRUE(cache.contains(b));
    EXPECT_TRUE(cache.contains(c));
    EXPECT_EQ(cache.bytes(), 100u);
    // Cheaper than everything resident: rejected, nothing evicted.
    EXPECT_FALSE(cache.store_sized(d, df, 1, 50));
    EXPECT_EQ(cache.entries(), 2u);
    EXPECT_FALSE(cache.store_sized(d, df, 1000, 101));
}

TEST(Cache, ReuseRaisesDensity) {
    auto df = numbered(1, 1);
    auto a = p::head(p::scan(df, "a"), 1);
    auto b = p::head(p::scan(df, "b"), 1);
    auto c = p::head(p::scan(df, "c"), 1);
    MaterializationCache cache(100);
    cache.store_sized(a, df, 10, 50);
    cache.store_sized(b, df, 15, 50);
    counters().reset();
    ASSERT_TRUE(cache.lookup(a).has_value());
    ASSERT_TRUE(cache.lookup(a).has_value());
    EXPECT_FALSE(cache.lookup(c).has_value());
    EXPECT_EQ(counters().snapshot().cache_hits, 2u);
    EXPECT_EQ(counters().snapshot().cache_misses, 1u);
    // a now weighs 10 * 3; b (15 * 1) is the victim.
    EXPECT_TRUE(cache.store_sized(c, df, 20, 50));
    EXPECT_TRUE(cache.contains(a));
    EXPECT_FALSE(cache.contains(b));
    EXPECT_EQ(cache.cost_of(c), 20u);
}

TEST(Engine, ModeNames) {
    for (auto m : {Mode::Eager, Mode::Lazy, Mode::Opportunistic}) {
        EXPECT_EQ(mode_from_string(to_string(m)), m);
    }
    EXPECT_FALSE(mode_from_string("sometimes").has_value());
}

TEST(Engine, RegistryDedupesStructurallyEqualRoots) {
    Engine eng(config(Mode::Lazy));
    auto scan = p::scan(numbered(6, 2), "x");
    auto h1 = eng.submit(p::head(scan, 3));
    auto h2 = eng.submit(p::head(scan, 3));
    EXPECT_EQ(&h1.plan(), &h2.plan());
    auto h3 = eng.submit(p::head(scan, 4));
    EXPECT_NE(&h1.plan(), &h3.plan());
    GroupBySpec spec{{"c0"}, {Aggregate{AggFn::Count, "c1"}}};
    counters().reset();
    auto g1 = eng.submit(p::groupby(scan, spec));
    auto g2 = eng.submit(p::groupby(scan, spec));
    eng.collect(g1);
    eng.collect(g2);
    EXPECT_EQ(counters().snapshot().kernels(OpKind::GroupBy), 1u);
}

TEST(Engine, EagerRethrowsAndMarksFailed) {
    Engine eng(config(Mode::Eager));
    auto bad = p::project(p::scan(numbered(3, 2), "x"), std::vector<std::string>{"nope"});
    EXPECT_EQ(error_of([&] { eng.submit(bad); }), ErrorKind::UnknownColumn);
    auto h = eng.find(bad);
    ASSERT_TRUE(h.has_value());
    EXPECT_EQ(h->status(), HandleStatus::Failed);
    EXPECT_EQ(error_of([&] { eng.collect(*h); }), ErrorKind::UnknownColumn);
}

TEST(Engine, LazyDefersUntilDemand) {
    Engine eng(config(Mode::Lazy));
    auto scan = p::scan(numbered(40, 3), "x");
    counters().reset();
    auto h = eng.submit(p::map(scan, UdfSpec::builtin("isnull")));
    EXPECT_EQ(h.status(), HandleStatus::Pending);
    EXPECT_EQ(counters().snapshot().kernels(OpKind::Map), 0u);
    auto first = eng.head(h, 2);
    EXPECT_EQ(first.rows(), 2u);
    EXPECT_EQ(h.status(), HandleStatus::Partial);
    auto all = eng.collect(h);
    EXPECT_EQ(h.status(), HandleStatus::Complete);
    EXPECT_EQ(all.rows(), 40u);
}

TEST(Engine, OpportunisticCompletesInTheBackground) {
    Engine eng(config(Mode::Opportunistic, 2));
    GroupBySpec spec{{"c0"}, {Aggregate{AggFn::Sum, "c1"}}};
    auto plan = p::groupby(p::scan(numbered(200, 2), "x"), spec);
    counters().reset();
    auto h = eng.submit(plan);
    eng.wait_idle();
    EXPECT_EQ(h.status(), HandleStatus::Complete);
    const auto ran = counters().snapshot().kernels(OpKind::GroupBy);
    EXPECT_EQ(ran, 1u);
    EXPECT_TRUE(eng.collect(h) == evaluate(plan));
    EXPECT_EQ(counters().snapshot().kernels(OpKind::GroupBy), ran);
}

TEST(Engine, OpportunisticFailureIsKeptForTheHandle) {
    Engine eng(config(Mode::Opportunistic));
    auto bad = p::to_labels(p::scan(numbered(3, 2), "x"), "nope");
    auto h = eng.submit(bad);
    eng.wait_idle();
    EXPECT_EQ(h.status(), HandleStatus::Failed);
    EXPECT_EQ(error_of([&] { eng.collect(h); }), ErrorKind::UnknownColumn);
}

TEST(Engine, ConceptualOperatorsCopyNoCells) {
    for (auto mode : {Mode::Eager, Mode::Lazy, Mode::Opportunistic}) {
        Engine eng(config(mode, 2));
        auto scan = p::scan(numbered(30, 5, BlockShape{4, 4}), "x");
        auto sorted = p::sort(scan, {{ColumnRef::named("c2"), false}});
        auto reordered = p::transpose(p::sort(p::transpose(scan), {{ColumnRef::named("0"), false}}));
        auto renamed = p::rename(scan, {{"c1", "one"}});
        for (const auto& plan : {sorted, reordered, renamed, p::transpose(scan)}) {
            counters().reset();
            auto got = eng.execute(plan);
            EXPECT_EQ(counters().snapshot().cells_copied, 0u) << to_string(plan);
            EXPECT_EQ(counters().snapshot().cross_block_moves, 0u) << to_string(plan);
            EXPECT_TRUE(same_data(got, evaluate(plan)));
        }
    }
}

TEST(Engine, RenderMatchesTheFullRender) {
    for (auto mode : {Mode::Eager, Mode::Lazy, Mode::Opportunistic}) {
        Engine eng(config(mode, 3, BlockShape{5, 2}));
        auto plan = p::select(p::scan(numbered(60, 3), "x"),
                              Predicate::compare(ColumnRef::named("c0"), CompareOp::Ge, CellValue::raw("30")));
        auto h = eng.submit(plan);
        EXPECT_EQ(eng.render(h, 4), io::render(evaluate(plan), 4));
        EXPECT_EQ(eng.render(h, 40), io::render(evaluate(plan), 40));
    }
}

TEST(Engine, HeadReadsOnlyLeadingPartitions) {
    Engine eng(config(Mode::Lazy, 1, BlockShape{10, 4}));
    auto plan = p::map(p::scan(numbered(1000, 2), "x"), UdfSpec::builtin("isnull"));
    counters().reset();
    auto h = eng.submit(plan);
    eng.head(h, 5);
    EXPECT_LE(counters().snapshot().partitions_evaluated, 1u);
    counters().reset();
    eng.tail(h, 5);
    EXPECT_LE(counters().snapshot().partitions_evaluated, 1u);
}

TEST(Engine, ExplainListsRules) {
    Engine eng(config(Mode::Lazy));
    auto scan = p::scan(numbered(3, 2), "x");
    EXPECT_NE(eng.explain(p::transpose(p::transpose(scan))).find("R1 transpose-elimination"), std::string::npos);
}
