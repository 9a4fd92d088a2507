#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emseg/error.hpp"
#include "emseg/random.hpp"

namespace emseg::sweep {

/// Node of the search-space notation. One struct covers every node kind; which
/// fields are meaningful depends on `kind`.
///
///   Number      42, 0.002, -180           number, integer
///   Percent     10%                       number
///   Bool        True / False              boolean
///   String      BCE, he_init, "free text" text
///   Dims        256x256x20                dims
///   NotSelected -                         (no payload)
///   Range       [lo,hi]                   items = {lo, hi} (Numbers)
///   Stepped     [lo,hi,step]              items = {lo, hi, step}
///   Geometric   [lo,hi,x2]                items = {lo, hi, factor}
///   List        [a,b,c,d] or {a,b}        items, braces
///   Choice      choice[a,b,...]           items
///   TermList    a, b(...), c              items
///   Term        name(arg, key=value)      text = name, items = args, arg_names ("" = positional)
///   Union       A and B                   items
///
/// A Term named "tuple" renders as a bare parenthesised argument list "(lr=0.1,final_lr=0.1)".
struct Expr {
    enum class Kind {
        Number, Percent, Bool, String, Dims, NotSelected,
        Range, Stepped, Geometric, List, Choice, TermList, Term, Union,
    };

    Kind kind = Kind::NotSelected;
    double number = 0.0;
    bool integer = false;
    bool boolean = false;
    bool braces = false;
    std::string text;
    std::vector<std::uint64_t> dims;
    std::vector<Expr> items;
    std::vector<std::string> arg_names;

    static Expr make_number(double v, bool integer);
    static Expr make_percent(double v);
    static Expr make_bool(bool b);
    static Expr make_string(std::string s);
    static Expr make_dims(std::vector<std::uint64_t> d);
    static Expr not_selected();
    static Expr make_range(Expr lo, Expr hi);
    static Expr make_stepped(Expr lo, Expr hi, Expr step);
    static Expr make_choice(std::vector<Expr> options);
    static Expr make_term(std::string name, std::vector<Expr> args = {}, std::vector<std::string> arg_names = {});

    bool is_literal() const noexcept;
    /// Value of a positional or named Term argument, or nullptr.
    const Expr* arg(std::size_t position) const noexcept;
    const Expr* arg(std::string_view name) const noexcept;

    friend bool operator==(const Expr&, const Expr&) = default;
};

/// Throws SyntaxError (with offset and expectation), EmptyChoice, BadStep, ReversedRange.
Expr parse_expr(std::string_view text);
/// Canonical surface form; parse_expr(render_expr(e)) == e.
std::string render_expr(const Expr& e);

/// nullopt means infinitely many values.
std::optional<std::uint64_t> cardinality(const Expr& space);

/// Whether a concrete value belongs to the value set of `space`. A value list
/// ("flips, elastic") is a member of a list space when each of its items is.
bool is_member(const Expr& value, const Expr& space);

/// Draws one value. Choice and Union pick a member first, then a value inside it.
Expr sample_expr(const Expr& space, Rng& rng);

/// All values in order; InfiniteSpace for ranges.
std::vector<Expr> enumerate_values(const Expr& space);

/// "% of train as validation" -> "percent_of_train_as_validation".
std::string normalize_name(std::string_view label);

struct Entry {
    std::string name;   // normalized
    std::string label;  // as written
    Expr expr;
    friend bool operator==(const Entry&, const Entry&) = default;
};

/// Ordered "label = expression" document. Used both for search spaces and for
/// concrete assignments (where every expression is a single value).
struct Document {
    std::vector<Entry> entries;

    const Entry* find(std::string_view name) const noexcept;
    friend bool operator==(const Document&, const Document&) = default;
};

using SearchSpace = Document;
using ConfigAssignment = Document;

/// Lines "label = expr"; '#' starts a comment line; blank lines ignored.
/// Throws SyntaxError (message carries the line number) and DuplicateName.
Document parse_space(std::string_view text);
std::string render_space(const Document& doc);
inline std::string render_config(const ConfigAssignment& a) { return render_space(a); }

ConfigAssignment sample(const SearchSpace& space, std::uint64_t seed);

/// Product of entry cardinalities; nullopt if any entry is infinite.
std::optional<std::uint64_t> grid_size(const SearchSpace& space);

/// Lexicographic walk over the product of entry value sets, first entry slowest.
class GridIterator {
public:
    explicit GridIterator(const SearchSpace& space);  // throws InfiniteSpace
    std::optional<ConfigAssignment> next();

private:
    const SearchSpace* space_;
    std::vector<std::vector<Expr>> values_;
    std::vector<std::size_t> cursor_;
    bool done_ = false;
};

inline GridIterator enumerate_grid(const SearchSpace& space) { return GridIterator(space); }

struct MembershipIssue {
    std::string name;
    std::string reason;
};

/// Checks every assignment entry against the space entry of the same name.
/// NotSelected values always pass.
std::vector<MembershipIssue> validate(const ConfigAssignment& a, const SearchSpace& space);

}  // namespace emseg::sweep
