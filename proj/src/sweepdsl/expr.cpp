#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "emseg/sweep.hpp"

namespace emseg::sweep {

namespace {

std::string format_number(double v, bool integer) {
    std::array<char, 64> buf{};
    if (integer && std::abs(v) < 9.0e15) {
        const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<long long>(v));
        return std::string(buf.data(), r.ptr);
    }
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
    if (r.ec == std::errc()) {
        std::string s(buf.data(), r.ptr);
        // keep reals recognisable as reals when they happen to be whole
        if (s.find('.') == std::string::npos) s += ".0";
        return s;
    }
    const auto g = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), g.ptr);
}

bool is_bare_word(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return s != "True" && s != "False" && s != "choice" && s != "and";
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

void render_into(const Expr& e, std::string& out, bool in_term_list);

void render_joined(const std::vector<Expr>& items, std::string& out, std::string_view sep) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        render_into(items[i], out, false);
    }
}

void render_into(const Expr& e, std::string& out, bool in_term_list) {
    using K = Expr::Kind;
    switch (e.kind) {
        case K::Number: out += format_number(e.number, e.integer); break;
        case K::Percent: out += format_number(e.number, e.number == std::floor(e.number)) + "%"; break;
        case K::Bool: out += e.boolean ? "True" : "False"; break;
        case K::String: out += (!in_term_list && is_bare_word(e.text)) ? e.text : quote(e.text); break;
        case K::Dims:
            for (std::size_t i = 0; i < e.dims.size(); ++i) {
                if (i) out += 'x';
                out += std::to_string(e.dims[i]);
            }
            break;
        case K::NotSelected: out += '-'; break;
        case K::Range:
        case K::Stepped:
            out += '[';
            render_joined(e.items, out, ",");
            out += ']';
            break;
        case K::Geometric:
            out += '[';
            render_into(e.items[0], out, false);
            out += ',';
            render_into(e.items[1], out, false);
            out += ",x";
            render_into(e.items[2], out, false);
            out += ']';
            break;
        case K::List:
            out += e.braces ? '{' : '[';
            render_joined(e.items, out, ",");
            out += e.braces ? '}' : ']';
            break;
        case K::Choice:
            out += "choice[";
            render_joined(e.items, out, ",");
            out += ']';
            break;
        case K::TermList:
            for (std::size_t i = 0; i < e.items.size(); ++i) {
                if (i) out += ", ";
                render_into(e.items[i], out, true);
            }
            break;
        case K::Term: {
            const bool tuple = e.text == "tuple";
            if (!tuple) out += e.text;
            if (e.items.empty() && in_term_list && !tuple) break;
            out += '(';
            for (std::size_t i = 0; i < e.items.size(); ++i) {
                if (i) out += ',';
                if (i < e.arg_names.size() && !e.arg_names[i].empty()) out += e.arg_names[i] + "=";
                render_into(e.items[i], out, false);
            }
            out += ')';
            break;
        }
        case K::Union:
            render_joined(e.items, out, " and ");
            break;
    }
}

}  // namespace

Expr Expr::make_number(double v, bool is_integer) {
    Expr e;
    e.kind = Kind::Number;
    e.number = v;
    e.integer = is_integer && v == std::floor(v);
    return e;
}

Expr Expr::make_percent(double v) {
    Expr e;
    e.kind = Kind::Percent;
    e.number = v;
    return e;
}

Expr Expr::make_bool(bool b) {
    Expr e;
    e.kind = Kind::Bool;
    e.boolean = b;
    return e;
}

Expr Expr::make_string(std::string s) {
    Expr e;
    e.kind = Kind::String;
    e.text = std::move(s);
    return e;
}

Expr Expr::make_dims(std::vector<std::uint64_t> d) {
    for (auto v : d)
        if (v == 0) throw Error(ErrorCode::InvalidArgument, "dims literal components must be positive");
    Expr e;
    e.kind = Kind::Dims;
    e.dims = std::move(d);
    return e;
}

Expr Expr::not_selected() { return Expr{}; }

Expr Expr::make_range(Expr lo, Expr hi) {
    if (lo.number > hi.number) throw Error(ErrorCode::ReversedRange, "lower bound exceeds upper bound");
    Expr e;
    e.kind = Kind::Range;
    e.items = {std::move(lo), std::move(hi)};
    return e;
}

Expr Expr::make_stepped(Expr lo, Expr hi, Expr step) {
    if (!(step.number > 0.0)) throw Error(ErrorCode::BadStep, "step must be > 0");
    if (lo.number > hi.number) throw Error(ErrorCode::ReversedRange, "lower bound exceeds upper bound");
    Expr e;
    e.kind = Kind::Stepped;
    e.items = {std::move(lo), std::move(hi), std::move(step)};
    return e;
}

Expr Expr::make_choice(std::vector<Expr> options) {
    if (options.empty()) throw Error(ErrorCode::EmptyChoice, "choice[] has no options");
    Expr e;
    e.kind = Kind::Choice;
    e.items = std::move(options);
    return e;
}

Expr Expr::make_term(std::string name, std::vector<Expr> args, std::vector<std::string> names) {
    Expr e;
    e.kind = Kind::Term;
    e.text = std::move(name);
    names.resize(args.size());
    e.items = std::move(args);
    e.arg_names = std::move(names);
    return e;
}

bool Expr::is_literal() const noexcept {
    switch (kind) {
        case Kind::Number:
        case Kind::Percent:
        case Kind::Bool:
        case Kind::String:
        case Kind::Dims:
        case Kind::NotSelected:
            return true;
        default:
            return false;
    }
}

const Expr* Expr::arg(std::size_t position) const noexcept {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!arg_names[i].empty()) continue;
        if (seen++ == position) return &items[i];
    }
    return nullptr;
}

const Expr* Expr::arg(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < items.size(); ++i)
        if (arg_names[i] == name) return &items[i];
    return nullptr;
}

std::string render_expr(const Expr& e) {
    std::string out;
    render_into(e, out, false);
    return out;
}

}  // namespace emseg::sweep
