#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "emseg/error.hpp"

namespace emseg {

enum class DType : std::uint8_t { U8 = 0, F32 = 1 };

std::string_view dtype_name(DType t) noexcept;

/// Voxel counts along x (fastest), y and z (slowest).
struct Dims {
    std::size_t x = 1;
    std::size_t y = 1;
    std::size_t z = 1;

    std::size_t operator[](int axis) const noexcept { return axis == 0 ? x : axis == 1 ? y : z; }
    std::size_t& operator[](int axis) noexcept { return axis == 0 ? x : axis == 1 ? y : z; }

    /// Total voxel count. Throws DimOverflow if any axis is zero or the product overflows.
    std::size_t voxels() const;

    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Physical voxel size in nanometers; anisotropic spacing such as 3x3x30 is allowed.
struct Spacing {
    float x = 1.0f;
    float y = 1.0f;
    float z = 1.0f;

    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Dense 3D scalar array, x-fastest. Holds either U8 labels/grayscale or F32 values.
class Volume {
public:
    Volume() : Volume(Dims{}, DType::U8) {}
    Volume(Dims dims, DType dtype, Spacing spacing = {});

    static Volume from_u8(Dims dims, std::vector<std::uint8_t> data, Spacing spacing = {});
    static Volume from_f32(Dims dims, std::vector<float> data, Spacing spacing = {});

    const Dims& dims() const noexcept { return dims_; }
    DType dtype() const noexcept { return dtype_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    void set_spacing(Spacing s);
    std::size_t size() const noexcept { return size_; }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
        return (z * dims_.y + y) * dims_.x + x;
    }

    std::span<std::uint8_t> u8();
    std::span<const std::uint8_t> u8() const;
    std::span<float> f32();
    std::span<const float> f32() const;

    template <class T>
    std::span<T> typed() {
        if constexpr (std::is_same_v<T, std::uint8_t>) return u8(); else return f32();
    }
    template <class T>
    std::span<const T> typed() const {
        if constexpr (std::is_same_v<T, std::uint8_t>) return u8(); else return f32();
    }

    /// Voxel value widened to double regardless of dtype.
    double value(std::size_t i) const noexcept {
        return dtype_ == DType::U8 ? static_cast<double>(std::get<0>(data_)[i])
                                   : static_cast<double>(std::get<1>(data_)[i]);
    }
    double at(std::size_t x, std::size_t y, std::size_t z) const noexcept { return value(index(x, y, z)); }

    /// Raw little-endian payload bytes, as stored on disk on little-endian hosts.
    std::span<const std::byte> bytes() const;

    /// Calls f with a span over the typed buffer.
    template <class F>
    decltype(auto) visit(F&& f) {
        return dtype_ == DType::U8 ? f(u8()) : f(f32());
    }
    template <class F>
    decltype(auto) visit(F&& f) const {
        return dtype_ == DType::U8 ? f(u8()) : f(f32());
    }

    /// Field- and bit-identical comparison (F32 compared by bit pattern).
    friend bool operator==(const Volume& a, const Volume& b);

private:
    Dims dims_;
    DType dtype_;
    Spacing spacing_;
    std::size_t size_;
    std::variant<std::vector<std::uint8_t>, std::vector<float>> data_;
};

/// A Volume whose dtype is U8 with every voxel in {0,1}.
bool is_binary_mask(const Volume& v) noexcept;
void require_binary_mask(const Volume& v, std::string_view what);
/// Throws OutOfRangeProbability unless v is F32 with all values in [0,1].
void require_probabilities(const Volume& v, std::string_view what);

Volume to_f32(const Volume& v);

/// Copies of a single z-slice / a z-range.
Volume slice_z(const Volume& v, std::size_t z);
Volume slab_z(const Volume& v, std::size_t z0, std::size_t nz);

}  // namespace emseg
