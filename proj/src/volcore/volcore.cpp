#include "emseg/volcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emseg/parallel.hpp"
#include "emseg/random.hpp"

namespace emseg {

Volume binarize(const Volume& p, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0,1]");
    require_probabilities(p, "binarize input");
    Volume out(p.dims(), DType::U8, p.spacing());
    auto src = p.f32();
    auto dst = out.u8();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]) >= threshold ? 1 : 0;
    return out;
}

namespace {

// One pass of a binary box filter along `axis`. Dilation keeps any hit inside
// the clipped window; erosion needs the full window inside the volume and all set.
void box_pass(std::vector<std::uint8_t>& buf, const Dims& d, int axis, int r, bool dilation) {
    const std::size_t n = d[axis];
    const std::size_t stride = axis == 0 ? 1 : axis == 1 ? d.x : d.x * d.y;
    const std::size_t lines = buf.size() / n;
    const auto line_start = [&](std::size_t l) -> std::size_t {
        if (axis == 0) return l * n;
        if (axis == 1) return (l / d.x) * d.x * d.y + (l % d.x);
        return l;
    };
    const auto rad = static_cast<std::ptrdiff_t>(r);
    const auto len = static_cast<std::ptrdiff_t>(n);

    parallel_for(lines, [&](std::size_t l) {
        const std::size_t base = line_start(l);
        std::vector<std::uint8_t> line(n);
        for (std::size_t i = 0; i < n; ++i) line[i] = buf[base + i * stride];
        // prefix sums give window counts in O(n)
        std::vector<std::size_t> prefix(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + line[i];
        for (std::ptrdiff_t i = 0; i < len; ++i) {
            const std::ptrdiff_t lo = i - rad;
            const std::ptrdiff_t hi = i + rad;
            std::uint8_t v;
            if (dilation) {
                const auto a = static_cast<std::size_t>(std::max<std::ptrdiff_t>(lo, 0));
                const auto b = static_cast<std::size_t>(std::min<std::ptrdiff_t>(hi, len - 1));
                v = prefix[b + 1] - prefix[a] > 0 ? 1 : 0;
            } else if (lo < 0 || hi >= len) {
                v = 0;
            } else {
                v = prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)] ==
                            static_cast<std::size_t>(2 * r + 1)
                        ? 1
                        : 0;
            }
            buf[base + static_cast<std::size_t>(i) * stride] = v;
        }
    });
}

Volume morph(const Volume& mask, int radius, Footprint fp, bool dilation) {
    if (radius < 1) throw Error(ErrorCode::InvalidArgument, "morphology radius must be >= 1");
    require_binary_mask(mask, "morphology input");
    auto src = mask.u8();
    std::vector<std::uint8_t> buf(src.begin(), src.end());
    box_pass(buf, mask.dims(), 0, radius, dilation);
    box_pass(buf, mask.dims(), 1, radius, dilation);
    if (fp == Footprint::Volume3D) box_pass(buf, mask.dims(), 2, radius, dilation);
    return Volume::from_u8(mask.dims(), std::move(buf), mask.spacing());
}

}  // namespace

Volume dilate(const Volume& mask, int radius, Footprint fp) { return morph(mask, radius, fp, true); }
Volume erode(const Volume& mask, int radius, Footprint fp) { return morph(mask, radius, fp, false); }

Volume complement(const Volume& mask) {
    require_binary_mask(mask, "complement input");
    Volume out = mask;
    for (auto& c : out.u8()) c = 1 - c;
    return out;
}

SplitResult split_validation(std::size_t n, const SplitSpec& spec) {
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "split fraction must lie in (0,1)");
    if (n < 2) throw Error(ErrorCode::DegenerateSplit, "need at least two slices");
    const auto n_val = static_cast<std::size_t>(std::floor(spec.fraction * static_cast<double>(n) + 0.5 + 1e-9));
    if (n_val == 0 || n_val >= n)
        throw Error(ErrorCode::DegenerateSplit,
                    "validation set would hold " + std::to_string(n_val) + " of " + std::to_string(n) + " slices");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitResult r;
    if (spec.mode == SplitMode::ConsecutiveTail) {
        r.train.assign(idx.begin(), idx.end() - static_cast<std::ptrdiff_t>(n_val));
        r.val.assign(idx.end() - static_cast<std::ptrdiff_t>(n_val), idx.end());
        return r;
    }
    // partial Fisher-Yates
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < n_val; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    r.val.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    r.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    std::sort(r.val.begin(), r.val.end());
    std::sort(r.train.begin(), r.train.end());
    return r;
}

Volume replicate_slices(const Volume& v, std::size_t factor) {
    if (factor < 1) throw Error(ErrorCode::InvalidArgument, "replication factor must be >= 1");
    Dims d = v.dims();
    if (__builtin_mul_overflow(d.z, factor, &d.z)) throw Error(ErrorCode::DimOverflow, "replicated depth overflows");
    Volume out(d, v.dtype(), v.spacing());
    v.visit([&](auto src) {
        using T = std::remove_const_t<typename decltype(src)::element_type>;
        auto dst = out.typed<T>();
        for (std::size_t k = 0; k < factor; ++k)
            std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(k * src.size()));
    });
    return out;
}

}  // namespace emseg
