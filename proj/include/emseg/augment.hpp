#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "emseg/volume.hpp"

namespace emseg {

// ---------------------------------------------------------------------------
// Rigid test-time-augmentation group
// ---------------------------------------------------------------------------

/// One element of the 8-element (2D) or 16-element (3D) rigid group. The action
/// is: optional x-flip, then rot90 counter-clockwise in the (x,y) plane `rot90`
/// times, then an optional z-flip (3D group only).
struct RigidTransform {
    int rot90 = 0;
    bool xflip = false;
    bool zflip = false;

    std::string name() const;
    friend bool operator==(const RigidTransform&, const RigidTransform&) = default;
};

/// Identity first. 2D: rot90 = 0..3 unflipped, then the same with x-flip.
/// 3D: the 2D order, then all eight again with z-flip.
std::vector<RigidTransform> enumerate_tta(int dimensionality);

Volume apply_rigid(const Volume& v, const RigidTransform& t);
RigidTransform invert_rigid(const RigidTransform& t);

enum class Axis { X, Y, Z };

/// Lossless rot90 counter-clockwise (x right, y down). Odd k swaps the x/y extents.
Volume square_rotation(const Volume& v, int k);
Volume flip(const Volume& v, Axis axis);

// ---------------------------------------------------------------------------
// Resampling augmentations (per z-slice, reflection fill outside the slice)
// ---------------------------------------------------------------------------

enum class Interpolation { Nearest, Bilinear };

/// Rotation about the slice center; positive angles turn counter-clockwise as displayed.
/// Bilinear on u8 volumes throws InterpolationOnMask.
Volume rotate_free(const Volume& v, double degrees, Interpolation interp);
/// Translation by a fraction of the slice extent.
Volume shift(const Volume& v, double dx_frac, double dy_frac, Interpolation interp);
/// Horizontal shear about the slice center row: x' = x + factor * (y - cy).
Volume shear(const Volume& v, double factor, Interpolation interp);
/// Scale about the slice center; factor > 1 magnifies.
Volume zoom(const Volume& v, double factor, Interpolation interp);
/// Multiplies f32 intensities and clamps to [0,1].
Volume brightness(const Volume& v, double factor);
/// size x size median per slice with reflection at the border; size 1 is the identity.
Volume median_filter_2d(const Volume& v, int size);

struct ElasticParams {
    double alpha = 8.0;  // displacement scale, voxels
    double sigma = 4.0;  // smoothing std, voxels
    std::uint64_t seed = 0;

    friend bool operator==(const ElasticParams&, const ElasticParams&) = default;
};

/// In-plane displacement field shared by every slice of a volume.
struct DisplacementField {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<double> dx;
    std::vector<double> dy;
};

/// alpha * GaussianSmooth_sigma(Uniform[-1,1] noise), one field per axis.
DisplacementField elastic_displacement_field(std::size_t nx, std::size_t ny, const ElasticParams& params);
Volume elastic_deform(const Volume& v, const ElasticParams& params, Interpolation interp);

// ---------------------------------------------------------------------------
// Training-time augmentation pipeline
// ---------------------------------------------------------------------------

struct AugmentTerm {
    enum class Kind { Flips, SquareRotations, RotationRange, Shift, Shearing, Zoom, Brightness, MedianFiltering, Elastic };
    Kind kind = Kind::Flips;
    double lo = 0.0;                  // range terms
    double hi = 0.0;
    std::vector<int> options;         // square_rotations angles / median sizes
    std::optional<ElasticParams> elastic;  // explicit alpha/sigma, defaults otherwise

    friend bool operator==(const AugmentTerm&, const AugmentTerm&) = default;
};

struct AugmentSpec {
    std::vector<AugmentTerm> terms;
    friend bool operator==(const AugmentSpec&, const AugmentSpec&) = default;
};

/// Parses a term list such as "flips, rotation_range([-180,180]), median_filtering(choice[1,3,5])".
AugmentSpec parse_augment_spec(std::string_view text);
std::string render_augment_spec(const AugmentSpec& spec);

struct AugmentedPair {
    Volume image;
    std::optional<Volume> mask;
};

/// Applies every term in order with parameters drawn from the seed. Geometric
/// terms move the mask with nearest-neighbour sampling; intensity terms touch
/// only the image.
AugmentedPair augment(const Volume& image, const std::optional<Volume>& mask, const AugmentSpec& spec,
                      std::uint64_t seed);

}  // namespace emseg
