#include <dfk/cli/session.hpp>

#include <dfk/core/error.hpp>

#include <cctype>

namespace dfk::cli {

namespace {

struct Token {
    enum class Kind { Name, String, Number, Op, End, Break };
    Kind kind = Kind::End;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

[[noreturn]] void syntax(std::size_t line, std::size_t column, const std::string& what) {
    fail(ErrorKind::Syntax, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

auto tokenize(const std::string& s) -> std::vector<Token> {
    std::vector<Token> out;
    std::size_t i = 0;
    std::size_t line = 1;
    std::size_t line_start = 0;
    int depth = 0;
    auto col = [&](std::size_t at) { return at - line_start + 1; };
    while (i < s.size()) {
        const char c = s[i];
        if (c == '\n') {
            if (depth == 0) {
                out.push_back({Token::Kind::Break, "\n", line, col(i)});
            }
            ++i;
            ++line;
            line_start = i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < s.size() && s[i] != '\n') {
                ++i;
            }
            continue;
        }
        Token t{Token::Kind::Op, "", line, col(i)};
        if (c == ';') {
            t.kind = Token::Kind::Break;
            t.text = ";";
            ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            t.kind = Token::Kind::Name;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
                t.text += s[i++];
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            t.kind = Token::Kind::Number;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '.' ||
                                    ((s[i] == '-' || s[i] == '+') && (s[i - 1] == 'e' || s[i - 1] == 'E')))) {
                t.text += s[i++];
            }
        } else if (c == '"') {
            t.kind = Token::Kind::String;
            ++i;
            while (true) {
                if (i >= s.size() || s[i] == '\n') {
                    syntax(t.line, t.column, "unterminated string");
                }
                if (s[i] == '"') {
                    ++i;
                    break;
                }
                if (s[i] == '\\' && i + 1 < s.size()) {
                    const char e = s[i + 1];
                    t.text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
                    i += 2;
                    continue;
                }
                t.text += s[i++];
            }
        } else {
            static const std::vector<std::string> ops{"==", "!=", "<=", ">=", "<", ">", "=", "(", ")", "[", "]", ",", "-"};
            for (const auto& op : ops) {
                if (s.compare(i, op.size(), op) == 0) {
                    t.text = op;
                    break;
                }
            }
            if (t.text.empty()) {
                syntax(line, col(i), std::string("unexpected character '") + c + "'");
            }
            i += t.text.size();
            if (t.text == "(" || t.text == "[") {
                ++depth;
            } else if ((t.text == ")" || t.text == "]") && depth > 0) {
                --depth;
            }
        }
        out.push_back(std::move(t));
    }
    out.push_back({Token::Kind::End, "", line, col(i)});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : t_(std::move(tokens)) {}

    auto script() -> std::vector<Statement> {
        std::vector<Statement> out;
        while (peek().kind != Token::Kind::End) {
            if (peek().kind == Token::Kind::Break) {
                ++p_;
                continue;
            }
            out.push_back(statement());
            if (peek().kind != Token::Kind::Break && peek().kind != Token::Kind::End) {
                syntax(peek().line, peek().column, "expected end of statement, found '" + peek().text + "'");
            }
        }
        return out;
    }

private:
    auto peek(std::size_t ahead = 0) const -> const Token& { return t_[std::min(p_ + ahead, t_.size() - 1)]; }
    auto is_op(const std::string& op, std::size_t ahead = 0) const -> bool {
        return peek(ahead).kind == Token::Kind::Op && peek(ahead).text == op;
    }
    auto is_word(const std::string& w) const -> bool { return peek().kind == Token::Kind::Name && peek().text == w; }
    void expect(const std::string& op) {
        if (!is_op(op)) {
            syntax(peek().line, peek().column,
                   "expected '" + op + "', found " + (peek().kind == Token::Kind::End ? "end of input" : "'" + peek().text + "'"));
        }
        ++p_;
    }
    auto at(Expr::Kind kind, const Token& tok) -> Expr {
        Expr e;
        e.kind = kind;
        e.line = tok.line;
        e.column = tok.column;
        return e;
    }

    auto statement() -> Statement {
        Statement s;
        s.line = peek().line;
        if (peek().kind == Token::Kind::Name && is_op("=", 1)) {
            s.target = peek().text;
            p_ += 2;
        }
        s.expr = expr();
        return s;
    }

    auto expr() -> Expr {
        auto lhs = conj();
        while (is_word("or")) {
            auto e = at(Expr::Kind::Or, peek());
            ++p_;
            e.args = {std::move(lhs), conj()};
            lhs = std::move(e);
        }
        return lhs;
    }

    auto conj() -> Expr {
        auto lhs = negation();
        while (is_word("and")) {
            auto e = at(Expr::Kind::And, peek());
            ++p_;
            e.args = {std::move(lhs), negation()};
            lhs = std::move(e);
        }
        return lhs;
    }

    auto negation() -> Expr {
        if (is_word("not")) {
            auto e = at(Expr::Kind::Not, peek());
            ++p_;
            e.args = {negation()};
            return e;
        }
        auto lhs = primary();
        for (const char* op : {"==", "!=", "<=", ">=", "<", ">"}) {
            if (is_op(op)) {
                auto e = at(Expr::Kind::Compare, peek());
                e.text = op;
                ++p_;
                e.args = {std::move(lhs), primary()};
                return e;
            }
        }
        return lhs;
    }

    auto primary() -> Expr {
        const Token tok = peek();
        switch (tok.kind) {
            case Token::Kind::String: {
                ++p_;
                auto e = at(Expr::Kind::String, tok);
                e.text = tok.text;
                return e;
            }
            case Token::Kind::Number: {
                ++p_;
                return number(tok, tok.text);
            }
            case Token::Kind::Name: {
                ++p_;
                if (tok.text == "true" || tok.text == "false") {
                    auto e = at(Expr::Kind::Bool, tok);
                    e.text = tok.text;
                    return e;
                }
                if (tok.text == "null") {
                    return at(Expr::Kind::Null, tok);
                }
                if (!is_op("(")) {
                    auto e = at(Expr::Kind::Name, tok);
                    e.text = tok.text;
                    return e;
                }
                ++p_;
                auto e = at(Expr::Kind::Call, tok);
                e.text = tok.text;
                while (!is_op(")")) {
                    if (peek().kind == Token::Kind::Name && is_op("=", 1)) {
                        auto key = peek().text;
                        p_ += 2;
                        e.kwargs.emplace_back(std::move(key), expr());
                    } else {
                        if (!e.kwargs.empty()) {
                            syntax(peek().line, peek().column, "positional argument after keyword argument");
                        }
                        e.args.push_back(expr());
                    }
                    if (!is_op(")")) {
                        expect(",");
                    }
                }
                ++p_;
                return e;
            }
            case Token::Kind::Op: {
                if (tok.text == "(") {
                    ++p_;
                    auto e = expr();
                    expect(")");
                    return e;
                }
                if (tok.text == "[") {
                    ++p_;
                    auto e = at(Expr::Kind::List, tok);
                    while (!is_op("]")) {
                        e.args.push_back(expr());
                        if (!is_op("]")) {
                            expect(",");
                        }
                    }
                    ++p_;
                    return e;
                }
                if (tok.text == "-" && peek(1).kind == Token::Kind::Number) {
                    const Token num = peek(1);
                    p_ += 2;
                    return number(tok, "-" + num.text);
                }
                break;
            }
            default: break;
        }
        syntax(tok.line, tok.column,
               tok.kind == Token::Kind::End || tok.kind == Token::Kind::Break ? "unexpected end of statement"
                                                                              : "unexpected '" + tok.text + "'");
    }

    auto number(const Token& pos, const std::string& text) -> Expr {
        const bool real = text.find_first_of(".eE") != std::string::npos;
        for (std::size_t i = text[0] == '-' ? 1 : 0; i < text.size(); ++i) {
            const char c = text[i];
            if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != 'e' && c != 'E' && c != '-' && c != '+') {
                syntax(pos.line, pos.column, "malformed number '" + text + "'");
            }
        }
        auto e = at(real ? Expr::Kind::Float : Expr::Kind::Int, pos);
        e.text = text;
        return e;
    }

    std::vector<Token> t_;
    std::size_t p_ = 0;
};

}  // namespace

auto parse_script(const std::string& text) -> std::vector<Statement> { return Parser(tokenize(text)).script(); }

}  // namespace dfk::cli
