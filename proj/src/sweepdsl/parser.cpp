#include <algorithm>
#include <optional>
#include <cctype>
#include <charconv>
#include <string>

#include "emseg/sweep.hpp"

namespace emseg::sweep {

namespace {

bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Expr parse_all() {
        Expr e = parse_union();
        skip_ws();
        if (pos_ != s_.size()) fail("end of input");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    bool last_bare_word_ = false;

    [[noreturn]] void fail(const std::string& expected) const {
        std::string found = pos_ < s_.size() ? "'" + std::string(1, s_[pos_]) + "'" : "end of input";
        throw Error(ErrorCode::SyntaxError,
                    "at offset " + std::to_string(pos_) + ": expected " + expected + ", found " + found);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    char peek_at(std::size_t k) const { return pos_ + k < s_.size() ? s_[pos_ + k] : '\0'; }
    bool consume(char c) {
        skip_ws();
        if (peek() != c) return false;
        ++pos_;
        return true;
    }
    void expect(char c) {
        if (!consume(c)) fail(std::string("'") + c + "'");
    }

    bool at_keyword(std::string_view kw) const {
        if (s_.substr(pos_, kw.size()) != kw) return false;
        const std::size_t end = pos_ + kw.size();
        return end == s_.size() || !is_word_char(s_[end]);
    }

    Expr parse_union() {
        std::vector<Expr> parts{parse_list()};
        for (;;) {
            skip_ws();
            if (!at_keyword("and")) break;
            pos_ += 3;
            parts.push_back(parse_list());
        }
        if (parts.size() == 1) return std::move(parts.front());
        Expr u;
        u.kind = Expr::Kind::Union;
        u.items = std::move(parts);
        return u;
    }

    // Top-level comma list. Bare words inside it name argument-less terms.
    Expr parse_list() {
        std::vector<Expr> items;
        std::vector<bool> bare;
        items.push_back(parse_item());
        bare.push_back(last_bare_word_);
        while (consume(',')) {
            items.push_back(parse_item());
            bare.push_back(last_bare_word_);
        }
        if (items.size() == 1) return std::move(items.front());
        for (std::size_t i = 0; i < items.size(); ++i)
            if (bare[i]) items[i] = Expr::make_term(items[i].text);
        Expr list;
        list.kind = Expr::Kind::TermList;
        list.items = std::move(items);
        return list;
    }

    Expr parse_item() {
        skip_ws();
        last_bare_word_ = false;
        const char c = peek();
        if (c == '"') return parse_quoted();
        if (c == '[') return parse_bracket();
        if (c == '{') return parse_braces();
        if (c == '(') {
            auto [args, names] = parse_args();
            return Expr::make_term("tuple", std::move(args), std::move(names));
        }
        if (c == '$') return parse_math();
        if (c == '-' && !is_digit(peek_at(1)) && peek_at(1) != '.') {
            ++pos_;
            return Expr::not_selected();
        }
        if (c == '-' || c == '+' || c == '.' || is_digit(c)) return parse_numeric();
        if (is_word_start(c)) return parse_word();
        fail("a value");
    }

    Expr parse_quoted() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
            out += s_[pos_++];
        }
        if (pos_ >= s_.size()) fail("closing '\"'");
        ++pos_;
        return Expr::make_string(std::move(out));
    }

    Expr parse_word() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && is_word_char(s_[pos_])) ++pos_;
        std::string word(s_.substr(start, pos_ - start));
        const std::size_t after = pos_;
        skip_ws();
        if (word == "choice" && peek() == '[') return parse_choice();
        if (peek() == '(') {
            auto [args, names] = parse_args();
            return Expr::make_term(std::move(word), std::move(args), std::move(names));
        }
        pos_ = after;
        if (word == "True") return Expr::make_bool(true);
        if (word == "False") return Expr::make_bool(false);
        last_bare_word_ = true;
        return Expr::make_string(std::move(word));
    }

    std::pair<std::vector<Expr>, std::vector<std::string>> parse_args() {
        expect('(');
        std::vector<Expr> args;
        std::vector<std::string> names;
        if (consume(')')) return {args, names};
        do {
            skip_ws();
            std::string name;
            if (is_word_start(peek())) {
                const std::size_t save = pos_;
                while (pos_ < s_.size() && is_word_char(s_[pos_])) ++pos_;
                std::string word(s_.substr(save, pos_ - save));
                skip_ws();
                if (peek() == '=') {
                    ++pos_;
                    name = std::move(word);
                } else {
                    pos_ = save;
                }
            }
            args.push_back(parse_item());
            names.push_back(std::move(name));
        } while (consume(','));
        expect(')');
        return {args, names};
    }

    Expr parse_choice() {
        expect('[');
        if (consume(']')) throw Error(ErrorCode::EmptyChoice, "choice[] has no options");
        std::vector<Expr> options;
        do options.push_back(parse_item());
        while (consume(','));
        expect(']');
        return Expr::make_choice(std::move(options));
    }

    Expr parse_braces() {
        expect('{');
        Expr list;
        list.kind = Expr::Kind::List;
        list.braces = true;
        if (consume('}')) return list;
        do list.items.push_back(parse_item());
        while (consume(','));
        expect('}');
        return list;
    }

    // "x2" or "$\times2$" as the last element of a bracket marks a geometric step.
    std::optional<Expr> try_factor() {
        skip_ws();
        const std::size_t save = pos_;
        if (peek() == '$') {
            const std::size_t close = s_.find('$', pos_ + 1);
            if (close == std::string_view::npos) fail("closing '$'");
            const std::string body = math_to_plain(s_.substr(pos_ + 1, close - pos_ - 1));
            if (body.size() > 1 && body[0] == 'x') {
                Parser sub(std::string_view(body).substr(1));
                Expr f = sub.parse_all();
                if (f.kind == Expr::Kind::Number) {
                    pos_ = close + 1;
                    return f;
                }
            }
            return std::nullopt;
        }
        if (peek() == 'x' && (is_digit(peek_at(1)) || peek_at(1) == '.')) {
            ++pos_;
            Expr f = parse_numeric();
            if (f.kind == Expr::Kind::Number) return f;
        }
        pos_ = save;
        return std::nullopt;
    }

    Expr parse_bracket() {
        const std::size_t open = pos_;
        expect('[');
        std::vector<Expr> items;
        std::optional<Expr> factor;
        if (!consume(']')) {
            do {
                if (items.size() == 2 && (factor = try_factor())) break;
                items.push_back(parse_item());
            } while (consume(','));
            expect(']');
        }
        const bool numeric = std::all_of(items.begin(), items.end(),
                                         [](const Expr& e) { return e.kind == Expr::Kind::Number; });
        if (factor) {
            if (!numeric) {
                pos_ = open;
                fail("numeric bounds before a geometric step");
            }
            const Expr& lo = items[0];
            const Expr& hi = items[1];
            if (!(factor->number > 1.0) || !(lo.number > 0.0))
                throw Error(ErrorCode::BadStep, "geometric step needs factor > 1 and lower bound > 0");
            if (lo.number > hi.number) throw Error(ErrorCode::ReversedRange, "lower bound exceeds upper bound");
            Expr g;
            g.kind = Expr::Kind::Geometric;
            g.items = {lo, hi, *factor};
            return g;
        }
        if (numeric && items.size() == 2) return Expr::make_range(items[0], items[1]);
        if (numeric && items.size() == 3) return Expr::make_stepped(items[0], items[1], items[2]);
        Expr list;
        list.kind = Expr::Kind::List;
        list.items = std::move(items);
        return list;
    }

    static std::string math_to_plain(std::string_view body) {
        std::string out;
        for (std::size_t i = 0; i < body.size();) {
            if (body.substr(i, 6) == "\\times") {
                out += 'x';
                i += 6;
            } else if (std::isspace(static_cast<unsigned char>(body[i])) || body[i] == '{' || body[i] == '}') {
                ++i;
            } else {
                out += body[i++];
            }
        }
        return out;
    }

    // "$256\times256$" is the typeset spelling of the dims literal 256x256.
    Expr parse_math() {
        const std::size_t open = pos_;
        const std::size_t close = s_.find('$', pos_ + 1);
        if (close == std::string_view::npos) fail("closing '$'");
        const std::string body = math_to_plain(s_.substr(pos_ + 1, close - pos_ - 1));
        Parser sub(body);
        Expr e;
        try {
            e = sub.parse_all();
        } catch (const Error&) {
            pos_ = open;
            fail("a number or dims literal inside $...$");
        }
        if (e.kind != Expr::Kind::Number && e.kind != Expr::Kind::Dims) {
            pos_ = open;
            fail("a number or dims literal inside $...$");
        }
        pos_ = close + 1;
        return e;
    }

    Expr parse_numeric() {
        const std::size_t start = pos_;
        auto read_number = [&](bool& integer) {
            const std::size_t b = pos_;
            if (peek() == '-' || peek() == '+') ++pos_;
            integer = true;
            while (is_digit(peek())) ++pos_;
            if (peek() == '.') {
                integer = false;
                ++pos_;
                while (is_digit(peek())) ++pos_;
            }
            if ((peek() == 'e' || peek() == 'E') &&
                (is_digit(peek_at(1)) || ((peek_at(1) == '-' || peek_at(1) == '+') && is_digit(peek_at(2))))) {
                integer = false;
                pos_ += 2;
                while (is_digit(peek())) ++pos_;
            }
            std::string_view tok = s_.substr(b, pos_ - b);
            if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
            double v = 0.0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
                pos_ = b;
                fail("a number");
            }
            return v;
        };
        bool integer = false;
        const double v = read_number(integer);
        if (peek() == '%') {
            ++pos_;
            return Expr::make_percent(v);
        }
        if (peek() == 'x' && is_digit(peek_at(1))) {
            std::vector<std::uint64_t> dims;
            auto push = [&](double d, bool is_int) {
                if (!is_int || d <= 0.0) {
                    pos_ = start;
                    fail("positive integer dims");
                }
                dims.push_back(static_cast<std::uint64_t>(d));
            };
            push(v, integer);
            while (peek() == 'x' && is_digit(peek_at(1))) {
                ++pos_;
                bool is_int = false;
                const double d = read_number(is_int);
                push(d, is_int);
            }
            return Expr::make_dims(std::move(dims));
        }
        if (is_word_char(peek())) fail("a separator after the number");
        return Expr::make_number(v, integer);
    }
};

}  // namespace

Expr parse_expr(std::string_view text) { return Parser(text).parse_all(); }

}  // namespace emseg::sweep
