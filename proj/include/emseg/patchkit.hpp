#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emseg/volume.hpp"

namespace emseg {

enum class Overlap { None, Half };

/// Geometry tying a list of patches back to their positions in the source volume.
struct PatchLayout {
    Dims source;
    Dims patch;
    Dims stride;
    Dims padding;  // trailing pad per axis, filled by reflection on extraction
    Overlap overlap = Overlap::None;
    std::vector<Dims> origins;  // z slowest, x fastest

    Dims padded() const { return {source.x + padding.x, source.y + padding.y, source.z + padding.z}; }

    /// Throws LayoutMismatch if origins fall outside the padded grid, repeat, or are out of order.
    void validate() const;

    friend bool operator==(const PatchLayout&, const PatchLayout&) = default;
};

/// Each axis is first padded up to a multiple of the patch extent.
/// None: stride = patch. Half: stride = ceil(patch/2), with extra padding when needed
/// so the last patch ends on the padded border. Axes with patch extent 1 never overlap.
PatchLayout plan_grid(const Dims& dims, const Dims& patch, Overlap overlap);

std::string layout_to_json(const PatchLayout& layout);
PatchLayout layout_from_json(const std::string& text);

/// Reflection index for out-of-range coordinates (edge voxel not repeated).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept;

std::vector<Volume> extract(const Volume& v, const PatchLayout& layout);

Volume reconstruct_mosaic(std::span<const Volume> patches, const PatchLayout& layout);
Volume reconstruct_overlap_mean(std::span<const Volume> patches, const PatchLayout& layout);

/// Second-order spline window of even length. Shifted copies at stride length/2 sum to one.
std::vector<double> spline_window_1d(std::size_t length);

/// Spline weight at position i of a window of any length >= 1; for even lengths this
/// matches spline_window_1d, for length 1 it is 1.
double spline_weight(std::size_t i, std::size_t length) noexcept;

/// Weighted overlap-add with separable spline windows, normalized by the accumulated weight.
Volume reconstruct_blend(std::span<const Volume> patches, const PatchLayout& layout);

/// Per-voxel sampling distribution for patch centers.
class ProbabilityMap {
public:
    /// Normalizes arbitrary non-negative weights (f32 or u8 volume).
    static ProbabilityMap from_weights(const Volume& weights);

    const Dims& dims() const noexcept { return dims_; }
    double operator[](std::size_t i) const noexcept { return p_[i]; }
    std::span<const double> values() const noexcept { return p_; }
    double foreground_mass() const noexcept { return fg_mass_; }
    double background_mass() const noexcept { return bg_mass_; }

    Volume to_volume() const;

private:
    friend ProbabilityMap build_probability_map(const Volume& gt, double fg_mass);
    Dims dims_;
    std::vector<double> p_;
    double fg_mass_ = 0.0;
    double bg_mass_ = 0.0;
};

/// Every foreground voxel gets fg_mass/N_fg, every background voxel (1-fg_mass)/N_bg.
/// If one class is absent its mass moves to the other.
ProbabilityMap build_probability_map(const Volume& gt, double fg_mass);

/// i.i.d. voxel draws from the map (pre-clamp centers).
std::vector<Dims> sample_patch_centers(const ProbabilityMap& map, std::size_t n, std::uint64_t seed);

/// Origin of the patch centered at `center`, clamped so the patch stays inside dims.
Dims origin_for_center(const Dims& center, const Dims& patch, const Dims& dims);

std::vector<Dims> sample_patch_origins(const ProbabilityMap& map, const Dims& patch, std::size_t n,
                                       std::uint64_t seed);

/// Fraction of voxels equal to 1 in a binary mask.
double foreground_fraction(const Volume& mask);

using PatchPair = std::pair<Volume, Volume>;  // (image patch, ground-truth patch)

/// Keeps pairs whose ground-truth foreground fraction is at least min_fg_fraction.
std::vector<PatchPair> discard_low_foreground(std::vector<PatchPair> pairs, double min_fg_fraction);

}  // namespace emseg
