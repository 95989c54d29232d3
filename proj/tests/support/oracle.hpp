#pragma once

#include "gen.hpp"

#include <dfk/algebra/ops.hpp>
#include <dfk/algebra/reference.hpp>
#include <dfk/engine/engine.hpp>
#include <dfk/io/render.hpp>

#include <sstream>
#include <string>

namespace dfk::testing {

inline auto describe(const Outcome& o) -> std::string {
    if (o.error) {
        return "error " + std::string(to_string(*o.error));
    }
    return "frame\n" + io::render(*o.frame, 100);
}

inline auto same_outcome(const Outcome& a, const Outcome& b, bool exact) -> bool {
    if (a.error || b.error) {
        return a.error == b.error;
    }
    return exact ? *a.frame == *b.frame : same_data(*a.frame, *b.frame);
}

struct OracleConfig {
    engine::Mode mode = engine::Mode::Eager;
    std::size_t threads = 1;
    std::size_t block_rows = 3;
};

/// Runs `plan` through an engine and checks it against the reference
/// evaluator. Returns an empty string on agreement, else a report.
///
/// With rewriting on, the engine must equal the reference on the rewritten
/// plan exactly, and the original plan on values, labels and order
/// (rewrites may change declared domains, and R4 may drop a failing sort).
/// With rewriting off, it must equal the reference on the original plan.
inline auto check_plan(const algebra::PlanRef& plan, const OracleConfig& cfg) -> std::string {
    std::ostringstream why;
    const auto original = outcome([&] { return algebra::evaluate(plan); });
    for (bool rewrite : {true, false}) {
        engine::EngineConfig ec;
        ec.mode = cfg.mode;
        ec.threads = cfg.threads;
        ec.block_shape = BlockShape{cfg.block_rows, 2};
        ec.rewrite = rewrite;
        engine::Engine eng(ec);
        std::optional<engine::Handle> handle;
        auto got = outcome([&] {
            handle = eng.submit(plan);
            return eng.collect(*handle);
        });
        if (!handle) {
            handle = eng.find(plan);
        }
        if (!handle) {
            return "no handle registered";
        }
        const auto& executed = handle->rewritten();
        const auto expected = rewrite ? outcome([&] { return algebra::evaluate(executed); }) : original;
        if (!same_outcome(got, expected, true)) {
            why << (rewrite ? "rewritten" : "unrewritten") << " plan disagrees\nplan:\n"
                << algebra::to_string(executed) << "engine: " << describe(got) << "\nreference: " << describe(expected);
            return why.str();
        }
        if (rewrite && !original.error && !same_outcome(got, original, false)) {
            why << "rewrite changed the data\nplan:\n" << algebra::to_string(plan) << "rewritten:\n"
                << algebra::to_string(executed) << "engine: " << describe(got) << "\noriginal: " << describe(original);
            return why.str();
        }
        if (rewrite && got.error && !original.error) {
            why << "rewrite introduced an error\n" << algebra::to_string(plan) << describe(got);
            return why.str();
        }
        // Demand paths on a fresh lazy handle: prefix, suffix and render.
        if (!expected.error) {
            engine::EngineConfig lc = ec;
            lc.mode = engine::Mode::Lazy;
            engine::Engine lazy(lc);
            for (std::size_t k : {std::size_t{0}, std::size_t{1}, std::size_t{3}}) {
                auto h = lazy.submit(plan);
                auto shown = outcome([&] { return lazy.head(h, k); });
                auto want = Outcome{algebra::head(*expected.frame, k), std::nullopt};
                if (!same_outcome(shown, want, true)) {
                    why << "head(" << k << ") disagrees\n" << algebra::to_string(executed) << describe(shown)
                        << "\nwant " << describe(want);
                    return why.str();
                }
                auto tail = outcome([&] { return lazy.tail(h, k); });
                want = Outcome{algebra::tail(*expected.frame, k), std::nullopt};
                if (!same_outcome(tail, want, true)) {
                    why << "tail(" << k << ") disagrees\n" << algebra::to_string(executed) << describe(tail)
                        << "\nwant " << describe(want);
                    return why.str();
                }
            }
            engine::Engine lazy2(lc);
            auto h = lazy2.submit(plan);
            std::string shown;
            try {
                shown = lazy2.render(h, 2);
            } catch (const Error& e) {
                shown = std::string("error ") + e.what();
            }
            const auto want = io::render(*expected.frame, 2);
            if (shown != want) {
                why << "render disagrees\n" << algebra::to_string(executed) << shown << "\nwant\n" << want;
                return why.str();
            }
        }
    }
    return {};
}

}  // namespace dfk::testing
