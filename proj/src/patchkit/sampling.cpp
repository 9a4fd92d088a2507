#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emseg/patchkit.hpp"
#include "emseg/random.hpp"

namespace emseg {

ProbabilityMap ProbabilityMap::from_weights(const Volume& weights) {
    ProbabilityMap m;
    m.dims_ = weights.dims();
    m.p_.resize(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights.value(i);
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
        m.p_[i] = w;
        total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::EmptyMask, "weights sum to zero");
    for (auto& p : m.p_) p /= total;
    m.fg_mass_ = 1.0;
    m.bg_mass_ = 0.0;
    return m;
}

Volume ProbabilityMap::to_volume() const {
    std::vector<float> f(p_.size());
    std::transform(p_.begin(), p_.end(), f.begin(), [](double p) { return static_cast<float>(p); });
    return Volume::from_f32(dims_, std::move(f));
}

ProbabilityMap build_probability_map(const Volume& gt, double fg_mass) {
    if (!(fg_mass > 0.0 && fg_mass < 1.0)) throw Error(ErrorCode::InvalidArgument, "fg_mass must lie in (0,1)");
    require_binary_mask(gt, "probability map source");
    if (gt.size() == 0) throw Error(ErrorCode::EmptyMask, "mask has no voxels");
    auto m = gt.u8();
    const auto n_fg = static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
    const std::size_t n_bg = m.size() - n_fg;

    double fg = fg_mass;
    double bg = 1.0 - fg_mass;
    if (n_fg == 0) {
        fg = 0.0;
        bg = 1.0;
    } else if (n_bg == 0) {
        fg = 1.0;
        bg = 0.0;
    }
    const double fg_value = n_fg ? fg / static_cast<double>(n_fg) : 0.0;
    const double bg_value = n_bg ? bg / static_cast<double>(n_bg) : 0.0;

    ProbabilityMap pm;
    pm.dims_ = gt.dims();
    pm.fg_mass_ = fg;
    pm.bg_mass_ = bg;
    pm.p_.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) pm.p_[i] = m[i] ? fg_value : bg_value;
    return pm;
}

std::vector<Dims> sample_patch_centers(const ProbabilityMap& map, std::size_t n, std::uint64_t seed) {
    auto p = map.values();
    std::vector<double> cdf(p.size());
    std::partial_sum(p.begin(), p.end(), cdf.begin());
    const double total = cdf.back();
    const Dims& d = map.dims();

    Rng rng(seed);
    std::vector<Dims> centers;
    centers.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double u = uniform_unit(rng) * total;
        // first voxel whose cumulative mass exceeds u; never a zero-probability voxel
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t idx = static_cast<std::size_t>(it - cdf.begin());
        if (it == cdf.end()) {
            idx = p.size() - 1;
            while (p[idx] == 0.0 && idx > 0) --idx;
        }
        centers.push_back({idx % d.x, (idx / d.x) % d.y, idx / (d.x * d.y)});
    }
    return centers;
}

Dims origin_for_center(const Dims& center, const Dims& patch, const Dims& dims) {
    Dims o;
    for (int a = 0; a < 3; ++a) {
        if (patch[a] > dims[a]) throw Error(ErrorCode::PatchLargerThanVolume, "patch does not fit in the volume");
        const std::size_t half = patch[a] / 2;
        const std::size_t start = center[a] > half ? center[a] - half : 0;
        o[a] = std::min(start, dims[a] - patch[a]);
    }
    return o;
}

std::vector<Dims> sample_patch_origins(const ProbabilityMap& map, const Dims& patch, std::size_t n,
                                       std::uint64_t seed) {
    for (int a = 0; a < 3; ++a)
        if (patch[a] > map.dims()[a] || patch[a] == 0)
            throw Error(ErrorCode::PatchLargerThanVolume, "patch does not fit in the volume");
    auto centers = sample_patch_centers(map, n, seed);
    for (auto& c : centers) c = origin_for_center(c, patch, map.dims());
    return centers;
}

double foreground_fraction(const Volume& mask) {
    require_binary_mask(mask, "ground-truth patch");
    auto m = mask.u8();
    const auto fg = std::count(m.begin(), m.end(), std::uint8_t{1});
    return static_cast<double>(fg) / static_cast<double>(m.size());
}

std::vector<PatchPair> discard_low_foreground(std::vector<PatchPair> pairs, double min_fg_fraction) {
    if (!(min_fg_fraction >= 0.0 && min_fg_fraction < 1.0))
        throw Error(ErrorCode::InvalidArgument, "min_fg_fraction must lie in [0,1)");
    std::erase_if(pairs, [&](const PatchPair& p) { return foreground_fraction(p.second) < min_fg_fraction; });
    return pairs;
}

}  // namespace emseg
