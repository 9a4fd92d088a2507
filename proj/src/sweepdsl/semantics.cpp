#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "emseg/sweep.hpp"

namespace emseg::sweep {

namespace {

using K = Expr::Kind;

constexpr double kRelTol = 1e-9;

bool close(double a, double b) { return std::abs(a - b) <= kRelTol * std::max(1.0, std::max(std::abs(a), std::abs(b))); }

// Strips accumulated binary error so 0 + 3*0.1 becomes 0.3.
double tidy(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

bool all_integer(const Expr& e) {
    for (const auto& it : e.items)
        if (!it.integer) return false;
    return true;
}

std::uint64_t stepped_count(const Expr& e) {
    const double lo = e.items[0].number, hi = e.items[1].number, step = e.items[2].number;
    return static_cast<std::uint64_t>(std::floor((hi - lo) / step * (1.0 + kRelTol) + kRelTol)) + 1;
}

Expr stepped_value(const Expr& e, std::uint64_t k) {
    const double v = e.items[0].number + static_cast<double>(k) * e.items[2].number;
    return Expr::make_number(all_integer(e) ? v : tidy(v), all_integer(e));
}

std::vector<Expr> geometric_values(const Expr& e) {
    std::vector<Expr> out;
    const double hi = e.items[1].number, f = e.items[2].number;
    const bool integer = all_integer(e);
    for (double v = e.items[0].number; v <= hi * (1.0 + kRelTol); v *= f)
        out.push_back(Expr::make_number(tidy(v), integer));
    return out;
}

bool same_literal(const Expr& a, const Expr& b) {
    if (a.kind == K::Number && b.kind == K::Number) return close(a.number, b.number);
    if (a.kind == K::Percent && b.kind == K::Percent) return close(a.number, b.number);
    // a bare word in a list is an argument-less term
    if (a.kind == K::String && b.kind == K::Term) return b.items.empty() && a.text == b.text;
    if (a.kind == K::Term && b.kind == K::String) return a.items.empty() && a.text == b.text;
    return a == b;
}

bool member_of_term(const Expr& v, const Expr& space) {
    if (v.kind != K::Term || v.text != space.text || v.items.size() != space.items.size()) return false;
    for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (v.arg_names[i] != space.arg_names[i]) return false;
        if (!is_member(v.items[i], space.items[i])) return false;
    }
    return true;
}

bool member_of_list(const Expr& v, const Expr& space) {
    if (v.kind != space.kind || v.items.size() != space.items.size()) return false;
    for (std::size_t i = 0; i < v.items.size(); ++i)
        if (!is_member(v.items[i], space.items[i])) return false;
    return true;
}

}  // namespace

std::optional<std::uint64_t> cardinality(const Expr& space) {
    switch (space.kind) {
        case K::Range: return std::nullopt;
        case K::Stepped: return stepped_count(space);
        case K::Geometric: return geometric_values(space).size();
        case K::Choice:
        case K::Union: {
            std::uint64_t total = 0;
            for (const auto& it : space.items) {
                const auto c = cardinality(it);
                if (!c) return std::nullopt;
                total += *c;
            }
            return total;
        }
        default: return 1;
    }
}

bool is_member(const Expr& value, const Expr& space) {
    if (same_literal(value, space)) return true;
    switch (space.kind) {
        case K::Range: {
            if (value.kind != K::Number) return false;
            const double lo = space.items[0].number, hi = space.items[1].number;
            return (value.number >= lo || close(value.number, lo)) && (value.number <= hi || close(value.number, hi));
        }
        case K::Stepped: {
            if (value.kind != K::Number) return false;
            const double lo = space.items[0].number, step = space.items[2].number;
            const double k = std::round((value.number - lo) / step);
            return k >= 0 && static_cast<std::uint64_t>(k) < stepped_count(space) && close(lo + k * step, value.number);
        }
        case K::Geometric:
            for (const auto& g : geometric_values(space))
                if (same_literal(value, g)) return true;
            return false;
        case K::Choice:
        case K::Union:
            for (const auto& opt : space.items)
                if (is_member(value, opt)) return true;
            return false;
        case K::TermList: {
            auto in_space = [&](const Expr& item) {
                for (const auto& s : space.items)
                    if (is_member(item, s)) return true;
                return false;
            };
            if (value.kind != K::TermList) return in_space(value);
            for (const auto& item : value.items)
                if (!in_space(item)) return false;
            return true;
        }
        case K::Term: return member_of_term(value, space);
        case K::List: return member_of_list(value, space) && value.braces == space.braces;
        default: return false;
    }
}

Expr sample_expr(const Expr& space, Rng& rng) {
    switch (space.kind) {
        case K::Range: {
            const double v = uniform_real(rng, space.items[0].number, space.items[1].number);
            return Expr::make_number(v, false);
        }
        case K::Stepped: return stepped_value(space, uniform_index(rng, stepped_count(space)));
        case K::Geometric: {
            auto vals = geometric_values(space);
            return vals[uniform_index(rng, vals.size())];
        }
        case K::Choice:
        case K::Union: return sample_expr(space.items[uniform_index(rng, space.items.size())], rng);
        default: return space;
    }
}

std::vector<Expr> enumerate_values(const Expr& space) {
    switch (space.kind) {
        case K::Range: throw Error(ErrorCode::InfiniteSpace, "range " + render_expr(space) + " has infinitely many values");
        case K::Stepped: {
            std::vector<Expr> out;
            const auto n = stepped_count(space);
            for (std::uint64_t k = 0; k < n; ++k) out.push_back(stepped_value(space, k));
            return out;
        }
        case K::Geometric: return geometric_values(space);
        case K::Choice:
        case K::Union: {
            std::vector<Expr> out;
            for (const auto& opt : space.items) {
                auto sub = enumerate_values(opt);
                out.insert(out.end(), sub.begin(), sub.end());
            }
            return out;
        }
        default: return {space};
    }
}

}  // namespace emseg::sweep
