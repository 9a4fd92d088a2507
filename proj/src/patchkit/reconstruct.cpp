#include <cmath>
#include <string>

#include "emseg/parallel.hpp"
#include "emseg/patchkit.hpp"

namespace emseg {

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
    if (n <= 1) return 0;
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

namespace {

void check_patches(std::span<const Volume> patches, const PatchLayout& l, bool need_f32) {
    l.validate();
    if (patches.size() != l.origins.size())
        throw Error(ErrorCode::WrongPatchCount, "expected " + std::to_string(l.origins.size()) + " patches, got " +
                                                    std::to_string(patches.size()));
    if (patches.empty()) throw Error(ErrorCode::WrongPatchCount, "layout has no patches");
    const DType t = patches.front().dtype();
    for (std::size_t n = 0; n < patches.size(); ++n) {
        if (patches[n].dims() != l.patch)
            throw Error(ErrorCode::LayoutMismatch, "patch " + std::to_string(n) + " does not match layout shape");
        if (patches[n].dtype() != t) throw Error(ErrorCode::LayoutMismatch, "patches mix dtypes");
    }
    if (need_f32 && t != DType::F32) throw Error(ErrorCode::DtypeMismatch, "reconstruction needs f32 patches");
}

// Visits every voxel of patch n that lands inside the unpadded source volume.
template <class F>
void for_each_source_voxel(const PatchLayout& l, std::size_t n, F&& f) {
    const Dims& o = l.origins[n];
    const Dims& p = l.patch;
    for (std::size_t k = 0; k < p.z && o.z + k < l.source.z; ++k)
        for (std::size_t j = 0; j < p.y && o.y + j < l.source.y; ++j)
            for (std::size_t i = 0; i < p.x && o.x + i < l.source.x; ++i)
                f(i, j, k, ((o.z + k) * l.source.y + (o.y + j)) * l.source.x + (o.x + i));
}

}  // namespace

std::vector<Volume> extract(const Volume& v, const PatchLayout& l) {
    l.validate();
    if (v.dims() != l.source) throw Error(ErrorCode::LayoutMismatch, "layout was planned for different dims");
    std::vector<Volume> out(l.origins.size());
    parallel_for(l.origins.size(), [&](std::size_t n) {
        Volume patch(l.patch, v.dtype(), v.spacing());
        const Dims& o = l.origins[n];
        v.visit([&](auto src) {
            using T = std::remove_const_t<typename decltype(src)::element_type>;
            auto dst = patch.typed<T>();
            std::size_t w = 0;
            for (std::size_t k = 0; k < l.patch.z; ++k) {
                const auto z = static_cast<std::size_t>(reflect_index(
                    static_cast<std::ptrdiff_t>(o.z + k), static_cast<std::ptrdiff_t>(l.source.z)));
                for (std::size_t j = 0; j < l.patch.y; ++j) {
                    const auto y = static_cast<std::size_t>(reflect_index(
                        static_cast<std::ptrdiff_t>(o.y + j), static_cast<std::ptrdiff_t>(l.source.y)));
                    for (std::size_t i = 0; i < l.patch.x; ++i) {
                        const auto x = static_cast<std::size_t>(reflect_index(
                            static_cast<std::ptrdiff_t>(o.x + i), static_cast<std::ptrdiff_t>(l.source.x)));
                        dst[w++] = src[v.index(x, y, z)];
                    }
                }
            }
        });
        out[n] = std::move(patch);
    });
    return out;
}

Volume reconstruct_mosaic(std::span<const Volume> patches, const PatchLayout& l) {
    if (l.overlap != Overlap::None) throw Error(ErrorCode::LayoutMismatch, "mosaic needs a non-overlapping layout");
    check_patches(patches, l, false);
    Volume out(l.source, patches.front().dtype(), patches.front().spacing());
    out.visit([&](auto dst) {
        using T = typename decltype(dst)::element_type;
        for (std::size_t n = 0; n < patches.size(); ++n) {
            auto src = patches[n].typed<T>();
            for_each_source_voxel(l, n, [&](std::size_t i, std::size_t j, std::size_t k, std::size_t at) {
                dst[at] = src[(k * l.patch.y + j) * l.patch.x + i];
            });
        }
    });
    return out;
}

Volume reconstruct_overlap_mean(std::span<const Volume> patches, const PatchLayout& l) {
    if (l.overlap != Overlap::Half) throw Error(ErrorCode::LayoutMismatch, "overlap mean needs a half-overlap layout");
    check_patches(patches, l, true);
    const std::size_t total = l.source.voxels();
    std::vector<double> sum(total, 0.0);
    std::vector<std::uint32_t> count(total, 0);
    // patch order is fixed, so the per-voxel summation order is too
    for (std::size_t n = 0; n < patches.size(); ++n) {
        auto src = patches[n].f32();
        for_each_source_voxel(l, n, [&](std::size_t i, std::size_t j, std::size_t k, std::size_t at) {
            sum[at] += src[(k * l.patch.y + j) * l.patch.x + i];
            ++count[at];
        });
    }
    Volume out(l.source, DType::F32, patches.front().spacing());
    auto dst = out.f32();
    for (std::size_t i = 0; i < total; ++i) dst[i] = static_cast<float>(sum[i] / count[i]);
    return out;
}

double spline_weight(std::size_t i, std::size_t length) noexcept {
    if (length <= 1) return 1.0;
    const std::size_t m = std::min(i, length - 1 - i);
    const double t = (static_cast<double>(m) + 0.5) * 2.0 / static_cast<double>(length);
    if (t <= 0.5) return 2.0 * t * t;
    const double u = 1.0 - t;
    return 1.0 - 2.0 * u * u;
}

std::vector<double> spline_window_1d(std::size_t length) {
    if (length < 2 || length % 2 != 0)
        throw Error(ErrorCode::OddLength, "spline window length must be even and >= 2, got " + std::to_string(length));
    std::vector<double> w(length);
    for (std::size_t i = 0; i < length; ++i) w[i] = spline_weight(i, length);
    return w;
}

Volume reconstruct_blend(std::span<const Volume> patches, const PatchLayout& l) {
    if (l.overlap != Overlap::Half) throw Error(ErrorCode::LayoutMismatch, "blending needs a half-overlap layout");
    check_patches(patches, l, true);
    std::vector<double> wx(l.patch.x), wy(l.patch.y), wz(l.patch.z);
    for (std::size_t i = 0; i < l.patch.x; ++i) wx[i] = spline_weight(i, l.patch.x);
    for (std::size_t i = 0; i < l.patch.y; ++i) wy[i] = spline_weight(i, l.patch.y);
    for (std::size_t i = 0; i < l.patch.z; ++i) wz[i] = spline_weight(i, l.patch.z);

    const std::size_t total = l.source.voxels();
    std::vector<double> acc(total, 0.0);
    std::vector<double> norm(total, 0.0);
    for (std::size_t n = 0; n < patches.size(); ++n) {
        auto src = patches[n].f32();
        for_each_source_voxel(l, n, [&](std::size_t i, std::size_t j, std::size_t k, std::size_t at) {
            const double w = wx[i] * wy[j] * wz[k];
            acc[at] += w * src[(k * l.patch.y + j) * l.patch.x + i];
            norm[at] += w;
        });
    }
    Volume out(l.source, DType::F32, patches.front().spacing());
    auto dst = out.f32();
    for (std::size_t i = 0; i < total; ++i) dst[i] = static_cast<float>(acc[i] / norm[i]);
    return out;
}

}  // namespace emseg
