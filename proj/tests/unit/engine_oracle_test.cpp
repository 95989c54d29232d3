#include "../support/oracle.hpp"

#include <gtest/gtest.h>

using namespace dfk;
using namespace dfk::testing;

namespace {

void run_random(std::uint64_t seed, engine::Mode mode, std::size_t threads, int plans) {
    Gen gen(seed);
    for (int i = 0; i < plans; ++i) {
        const auto plan = gen.plan(1 + static_cast<int>(gen.below(5)));
        OracleConfig cfg{mode, threads, 1 + gen.below(4)};
        const auto report = check_plan(plan, cfg);
        ASSERT_TRUE(report.empty()) << "seed " << seed << " plan " << i << "\n" << report;
    }
}

}  // namespace

TEST(EngineOracle, EagerSingleThread) { run_random(1, engine::Mode::Eager, 1, 150); }
TEST(EngineOracle, LazyTwoThreads) { run_random(2, engine::Mode::Lazy, 2, 150); }
TEST(EngineOracle, OpportunisticFourThreads) { run_random(3, engine::Mode::Opportunistic, 4, 150); }
