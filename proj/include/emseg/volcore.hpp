#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "emseg/volume.hpp"

namespace emseg {

/// Foreground iff p >= threshold. Input must be f32 probabilities.
Volume binarize(const Volume& probabilities, double threshold);

/// Square (2r+1)^2 element applied to each z-slice independently, or a (2r+1)^3 cube.
enum class Footprint { Slice2D, Volume3D };

// Voxels outside the volume count as background for both operations, so
// erosion peels the volume border.
Volume dilate(const Volume& mask, int radius, Footprint fp = Footprint::Slice2D);
Volume erode(const Volume& mask, int radius, Footprint fp = Footprint::Slice2D);

Volume complement(const Volume& mask);

enum class SplitMode { RandomSlices, ConsecutiveTail };

struct SplitSpec {
    double fraction = 0.1;
    SplitMode mode = SplitMode::RandomSlices;
    std::uint64_t seed = 42;
};

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Validation size is round-half-up(fraction * n). Both index lists come back sorted.
SplitResult split_validation(std::size_t n_slices, const SplitSpec& spec);

/// Stacks `factor` copies of v along z.
Volume replicate_slices(const Volume& v, std::size_t factor);

}  // namespace emseg
