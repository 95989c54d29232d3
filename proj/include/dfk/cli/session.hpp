#pragma once

#include <dfk/engine/engine.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dfk::cli {

/// Parsed expression of the statement language.
///
///   stmt    := NAME '=' expr | expr
///   expr    := and ('or' and)*
///   and     := not ('and' not)*
///   not     := 'not' not | cmp
///   cmp     := primary (('=='|'!='|'<'|'<='|'>'|'>=') primary)?
///   primary := STRING | NUMBER | true | false | null | '[' list ']'
///            | NAME | NAME '(' args ')' | '(' expr ')'
///   args    := (NAME '=' expr | expr) (',' ...)*
///
/// Statements end at a newline or ';' outside brackets; '#' starts a comment.
struct Expr {
    enum class Kind { Call, Name, String, Int, Float, Bool, Null, List, Compare, And, Or, Not };

    Kind kind = Kind::Null;
    std::string text;  // name, string value, literal source or operator
    std::vector<Expr> args;
    std::vector<std::pair<std::string, Expr>> kwargs;
    std::size_t line = 1;
    std::size_t column = 1;
};

struct Statement {
    std::optional<std::string> target;
    Expr expr;
    std::size_t line = 1;
};

/// Splits a script into statements; Syntax errors carry line and column.
auto parse_script(const std::string& text) -> std::vector<Statement>;

struct SessionOptions {
    engine::EngineConfig engine;
    /// Print the planner explanation before each statement's output.
    bool explain = false;
    std::size_t render_rows = 5;
};

/// A sequence of statements over one engine. Each statement becomes a
/// fenced plan; names bind to handles.
class Session {
public:
    explicit Session(SessionOptions options = {});

    /// Output produced by one parsed statement (render, explain or stats).
    auto run(const Statement& statement) -> std::string;
    /// Parses and runs `text`, returning the concatenated output.
    auto run_text(const std::string& text) -> std::string;

    [[nodiscard]] auto engine() -> engine::Engine& { return *engine_; }
    [[nodiscard]] auto has(const std::string& name) const -> bool { return bindings_.contains(name); }
    auto handle(const std::string& name) const -> const engine::Handle&;
    [[nodiscard]] auto statements() const -> std::size_t { return counter_; }

private:
    auto build(const Expr& e) -> algebra::PlanRef;

    SessionOptions options_;
    std::unique_ptr<engine::Engine> engine_;
    std::map<std::string, engine::Handle> bindings_;
    std::size_t counter_ = 0;
};

}  // namespace dfk::cli
