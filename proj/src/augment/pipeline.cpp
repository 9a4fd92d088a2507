#include <cmath>
#include <string>

#include "emseg/augment.hpp"
#include "emseg/random.hpp"
#include "emseg/sweep.hpp"

namespace emseg {

namespace {

using sweep::Expr;
using Kind = AugmentTerm::Kind;

struct TermName {
    Kind kind;
    std::string_view name;
};

constexpr TermName kNames[] = {
    {Kind::Flips, "flips"},
    {Kind::SquareRotations, "square_rotations"},
    {Kind::RotationRange, "rotation_range"},
    {Kind::Shift, "shift"},
    {Kind::Shearing, "shearing"},
    {Kind::Zoom, "zoom"},
    {Kind::Brightness, "brightness_range"},
    {Kind::MedianFiltering, "median_filtering"},
    {Kind::Elastic, "elastic"},
};

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::BadAugmentSpec, what); }

Expr number(double v) { return Expr::make_number(v, v == std::floor(v)); }

std::vector<int> int_options(const Expr& e, const std::string& term) {
    std::vector<int> out;
    auto add = [&](const Expr& x) {
        if (x.kind != Expr::Kind::Number || !x.integer) bad(term + ": expected integer values");
        out.push_back(static_cast<int>(x.number));
    };
    if (e.kind == Expr::Kind::Number) {
        add(e);
    } else if (e.kind == Expr::Kind::List || e.kind == Expr::Kind::Choice) {
        for (const auto& x : e.items) add(x);
    } else {
        bad(term + ": expected a value list");
    }
    if (out.empty()) bad(term + ": empty value list");
    return out;
}

AugmentTerm term_from_expr(const Expr& e) {
    std::string name;
    if (e.kind == Expr::Kind::String) name = e.text;
    else if (e.kind == Expr::Kind::Term) name = e.text;
    else bad("unexpected '" + sweep::render_expr(e) + "'");

    AugmentTerm t;
    bool known = false;
    for (const auto& n : kNames)
        if (n.name == name) {
            t.kind = n.kind;
            known = true;
        }
    if (!known) bad("unknown augmentation '" + name + "'");
    const std::size_t nargs = e.kind == Expr::Kind::Term ? e.items.size() : 0;
    const Expr* first = nargs ? &e.items.front() : nullptr;

    switch (t.kind) {
        case Kind::Flips:
            if (nargs) bad("flips takes no arguments");
            break;
        case Kind::SquareRotations:
            t.options = first ? int_options(*first, name) : std::vector<int>{0, 90, 180, 270};
            for (int a : t.options)
                if (a % 90 != 0) bad("square_rotations: angles must be multiples of 90");
            break;
        case Kind::RotationRange:
        case Kind::Shift:
        case Kind::Shearing:
        case Kind::Zoom:
        case Kind::Brightness:
            if (nargs != 1 || first->kind != Expr::Kind::Range) bad(name + ": expected one [lo,hi] range");
            t.lo = first->items[0].number;
            t.hi = first->items[1].number;
            if (t.kind == Kind::Zoom && !(t.lo > 0.0)) bad("zoom: factors must be > 0");
            if (t.kind == Kind::Brightness && !(t.lo >= 0.0)) bad("brightness_range: factors must be >= 0");
            break;
        case Kind::MedianFiltering: {
            const Expr* size = e.kind == Expr::Kind::Term ? e.arg("size") : nullptr;
            if (!size) size = first;
            if (!size || nargs != 1) bad("median_filtering: expected one size or size list");
            t.options = int_options(*size, name);
            for (int s : t.options)
                if (s < 1 || s % 2 == 0) bad("median_filtering: sizes must be odd and positive");
            break;
        }
        case Kind::Elastic:
            if (nargs) {
                ElasticParams p;
                for (std::size_t i = 0; i < nargs; ++i) {
                    const auto& key = e.arg_names[i];
                    const Expr& v = e.items[i];
                    if (v.kind != Expr::Kind::Number) bad("elastic: parameters must be numbers");
                    if (key == "alpha") p.alpha = v.number;
                    else if (key == "sigma") p.sigma = v.number;
                    else bad("elastic: expected alpha= and sigma= arguments");
                }
                if (!(p.alpha >= 0.0) || !(p.sigma > 0.0)) bad("elastic: need alpha >= 0 and sigma > 0");
                t.elastic = p;
            }
            break;
    }
    return t;
}

std::string_view name_of(Kind k) {
    for (const auto& n : kNames)
        if (n.kind == k) return n.name;
    return "?";
}

Expr int_list(const std::vector<int>& v) {
    Expr list;
    list.kind = Expr::Kind::List;
    for (int x : v) list.items.push_back(Expr::make_number(x, true));
    return list;
}

Expr expr_from_term(const AugmentTerm& t) {
    const std::string name(name_of(t.kind));
    switch (t.kind) {
        case Kind::Flips: return Expr::make_term(name);
        case Kind::SquareRotations: return Expr::make_term(name, {int_list(t.options)});
        case Kind::MedianFiltering:
            if (t.options.size() == 1) return Expr::make_term(name, {Expr::make_number(t.options[0], true)}, {"size"});
            {
                Expr c = int_list(t.options);
                c.kind = Expr::Kind::Choice;
                return Expr::make_term(name, {c});
            }
        case Kind::Elastic:
            if (!t.elastic) return Expr::make_term(name);
            return Expr::make_term(name, {number(t.elastic->alpha), number(t.elastic->sigma)}, {"alpha", "sigma"});
        default: return Expr::make_term(name, {Expr::make_range(number(t.lo), number(t.hi))});
    }
}

double signed_draw(Rng& rng, double lo, double hi) {
    const double magnitude = uniform_real(rng, lo, hi);
    return uniform_index(rng, 2) ? -magnitude : magnitude;
}

}  // namespace

AugmentSpec parse_augment_spec(std::string_view text) {
    Expr e;
    try {
        e = sweep::parse_expr(text);
    } catch (const Error& err) {
        bad(err.what());
    }
    AugmentSpec spec;
    if (e.kind == Expr::Kind::TermList) {
        for (const auto& item : e.items) spec.terms.push_back(term_from_expr(item));
    } else {
        spec.terms.push_back(term_from_expr(e));
    }
    return spec;
}

std::string render_augment_spec(const AugmentSpec& spec) {
    Expr list;
    list.kind = Expr::Kind::TermList;
    for (const auto& t : spec.terms) list.items.push_back(expr_from_term(t));
    if (list.items.size() == 1) {
        // a lone argument-less term would read back as a plain word, which parses the same way
        return sweep::render_expr(list.items.front().items.empty() ? Expr::make_string(list.items.front().text)
                                                                   : list.items.front());
    }
    return sweep::render_expr(list);
}

AugmentedPair augment(const Volume& image, const std::optional<Volume>& mask, const AugmentSpec& spec,
                      std::uint64_t seed) {
    if (mask) {
        if (!(mask->dims() == image.dims())) throw Error(ErrorCode::DimMismatch, "image and mask dims differ");
        require_binary_mask(*mask, "augmentation mask");
    }
    const Interpolation image_interp = image.dtype() == DType::F32 ? Interpolation::Bilinear : Interpolation::Nearest;
    Rng rng(seed);
    AugmentedPair out{image, mask};
    auto geometric = [&](auto&& op) {
        out.image = op(out.image, image_interp);
        if (out.mask) out.mask = op(*out.mask, Interpolation::Nearest);
    };
    for (const auto& t : spec.terms) {
        switch (t.kind) {
            case Kind::Flips:
                for (Axis axis : {Axis::X, Axis::Y}) {
                    if (!uniform_index(rng, 2)) continue;
                    geometric([&](const Volume& v, Interpolation) { return flip(v, axis); });
                }
                break;
            case Kind::SquareRotations: {
                const int k = t.options[uniform_index(rng, t.options.size())] / 90;
                geometric([&](const Volume& v, Interpolation) { return square_rotation(v, k); });
                break;
            }
            case Kind::RotationRange: {
                const double angle = uniform_real(rng, t.lo, t.hi);
                geometric([&](const Volume& v, Interpolation i) { return rotate_free(v, angle, i); });
                break;
            }
            case Kind::Shift: {
                const double dx = signed_draw(rng, t.lo, t.hi);
                const double dy = signed_draw(rng, t.lo, t.hi);
                geometric([&](const Volume& v, Interpolation i) { return shift(v, dx, dy, i); });
                break;
            }
            case Kind::Shearing: {
                const double f = signed_draw(rng, t.lo, t.hi);
                geometric([&](const Volume& v, Interpolation i) { return shear(v, f, i); });
                break;
            }
            case Kind::Zoom: {
                const double f = uniform_real(rng, t.lo, t.hi);
                geometric([&](const Volume& v, Interpolation i) { return zoom(v, f, i); });
                break;
            }
            case Kind::Brightness:
                out.image = brightness(out.image, uniform_real(rng, t.lo, t.hi));
                break;
            case Kind::MedianFiltering:
                out.image = median_filter_2d(out.image, t.options[uniform_index(rng, t.options.size())]);
                break;
            case Kind::Elastic: {
                ElasticParams p = t.elastic.value_or(ElasticParams{});
                p.seed = rng();
                geometric([&](const Volume& v, Interpolation i) { return elastic_deform(v, p, i); });
                break;
            }
        }
    }
    return out;
}

}  // namespace emseg
