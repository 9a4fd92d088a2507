#include <string>

#include "emseg/augment.hpp"

namespace emseg {

namespace {

// out(x,y,z) = in(src(x,y,z)) over every voxel of the output volume.
template <class Map>
Volume remap(const Volume& v, const Dims& out_dims, Map&& src) {
    Volume out(out_dims, v.dtype(), v.spacing());
    v.visit([&](auto in) {
        using T = std::remove_const_t<typename decltype(in)::element_type>;
        auto dst = out.typed<T>();
        std::size_t w = 0;
        for (std::size_t z = 0; z < out_dims.z; ++z)
            for (std::size_t y = 0; y < out_dims.y; ++y)
                for (std::size_t x = 0; x < out_dims.x; ++x) {
                    const Dims s = src(x, y, z);
                    dst[w++] = in[v.index(s.x, s.y, s.z)];
                }
    });
    return out;
}

}  // namespace

std::string RigidTransform::name() const {
    std::string s = "rot" + std::to_string(90 * rot90);
    if (xflip) s += "+flipx";
    if (zflip) s += "+flipz";
    return s;
}

std::vector<RigidTransform> enumerate_tta(int dimensionality) {
    if (dimensionality != 2 && dimensionality != 3)
        throw Error(ErrorCode::InvalidArgument, "dimensionality must be 2 or 3");
    std::vector<RigidTransform> g;
    for (int zf = 0; zf < (dimensionality == 3 ? 2 : 1); ++zf)
        for (int xf = 0; xf < 2; ++xf)
            for (int k = 0; k < 4; ++k) g.push_back({k, xf == 1, zf == 1});
    return g;
}

Volume square_rotation(const Volume& v, int k) {
    k = ((k % 4) + 4) % 4;
    const Dims& d = v.dims();
    switch (k) {
        case 1:
            return remap(v, {d.y, d.x, d.z}, [&](std::size_t x, std::size_t y, std::size_t z) {
                return Dims{d.x - 1 - y, x, z};
            });
        case 2:
            return remap(v, d, [&](std::size_t x, std::size_t y, std::size_t z) {
                return Dims{d.x - 1 - x, d.y - 1 - y, z};
            });
        case 3:
            return remap(v, {d.y, d.x, d.z}, [&](std::size_t x, std::size_t y, std::size_t z) {
                return Dims{y, d.y - 1 - x, z};
            });
        default:
            return v;
    }
}

Volume flip(const Volume& v, Axis axis) {
    const Dims& d = v.dims();
    return remap(v, d, [&](std::size_t x, std::size_t y, std::size_t z) {
        switch (axis) {
            case Axis::X: return Dims{d.x - 1 - x, y, z};
            case Axis::Y: return Dims{x, d.y - 1 - y, z};
            default: return Dims{x, y, d.z - 1 - z};
        }
    });
}

Volume apply_rigid(const Volume& v, const RigidTransform& t) {
    Volume out = t.xflip ? flip(v, Axis::X) : v;
    out = square_rotation(out, t.rot90);
    if (t.zflip) out = flip(out, Axis::Z);
    return out;
}

RigidTransform invert_rigid(const RigidTransform& t) {
    // x-flip conjugates a rotation into its inverse, so flipped elements are involutions
    if (t.xflip) return t;
    return {(4 - t.rot90 % 4) % 4, false, t.zflip};
}

}  // namespace emseg
