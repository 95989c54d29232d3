#include <dfk/cli/session.hpp>
#include <dfk/core/counters.hpp>
#include <dfk/core/error.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

auto parse_block_shape(const std::string& text, dfk::BlockShape& shape) -> bool {
    const auto x = text.find('x');
    if (x == std::string::npos) {
        return false;
    }
    try {
        std::size_t used = 0;
        const auto rows = std::stoull(text.substr(0, x), &used);
        if (used != x) {
            return false;
        }
        const auto cols = std::stoull(text.substr(x + 1), &used);
        if (used != text.size() - x - 1 || rows == 0 || cols == 0) {
            return false;
        }
        shape = dfk::BlockShape{rows, cols};
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

void report(const std::exception& e) {
    if (const auto* err = dynamic_cast<const dfk::Error*>(&e)) {
        std::cerr << "error: " << err->what() << '\n';
    } else {
        std::cerr << "error: " << e.what() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ordered dataframe kernel: runs statement scripts through the planner and engine"};
    std::string mode = "opportunistic";
    std::size_t threads = 1;
    std::size_t cache_bytes = std::size_t{256} << 20;
    std::string block_shape;
    bool explain = false;
    bool stats = false;
    bool strict_union = false;
    std::string script;
    app.add_option("--mode", mode, "eager, lazy or opportunistic")
        ->check(CLI::IsMember({"eager", "lazy", "opportunistic"}));
    app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--cache-bytes", cache_bytes, "Materialization cache budget (0 disables the cache)");
    app.add_option("--block-shape", block_shape, "Partition block shape as ROWSxCOLS");
    app.add_flag("--explain", explain, "Print the planner explanation for each statement");
    app.add_flag("--stats", stats, "Print the engine counters after the run");
    app.add_flag("--strict-union", strict_union, "Unions require identical column labels");
    app.add_option("--script", script, "Statement file (otherwise statements are read from stdin)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    dfk::cli::SessionOptions opts;
    opts.engine.mode = *dfk::engine::mode_from_string(mode);
    opts.engine.threads = threads;
    opts.engine.cache_bytes = cache_bytes;
    opts.engine.strict_union = strict_union;
    if (!block_shape.empty() && !parse_block_shape(block_shape, opts.engine.block_shape)) {
        std::cerr << "--block-shape: expected ROWSxCOLS, got '" << block_shape << "'\n\n" << app.help();
        return 2;
    }
    opts.explain = explain;

    dfk::cli::Session session(opts);
    int status = 0;
    if (!script.empty()) {
        std::ifstream in(script, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot open script '" << script << "'\n";
            return 1;
        }
        std::ostringstream text;
        text << in.rdbuf();
        try {
            for (const auto& st : dfk::cli::parse_script(text.str())) {
                std::cout << session.run(st) << std::flush;
            }
        } catch (const std::exception& e) {
            std::cout << std::flush;
            report(e);
            status = 1;
        }
    } else {
        // Interactive: one statement line at a time; errors do not end the session.
        std::string line;
        while (std::getline(std::cin, line)) {
            try {
                std::cout << session.run_text(line) << std::flush;
            } catch (const std::exception& e) {
                report(e);
                status = 1;
            }
        }
    }
    if (stats) {
        session.engine().wait_idle();
        std::cout << dfk::counters().snapshot().dump();
    }
    return status;
}
