#include "emseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

namespace emseg {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::UnknownDtype: return "UnknownDtype";
        case ErrorCode::DimOverflow: return "DimOverflow";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DtypeMismatch: return "DtypeMismatch";
        case ErrorCode::OutOfRangeProbability: return "OutOfRangeProbability";
        case ErrorCode::DegenerateSplit: return "DegenerateSplit";
        case ErrorCode::PatchLargerThanVolume: return "PatchLargerThanVolume";
        case ErrorCode::LayoutMismatch: return "LayoutMismatch";
        case ErrorCode::WrongPatchCount: return "WrongPatchCount";
        case ErrorCode::OddLength: return "OddLength";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::InterpolationOnMask: return "InterpolationOnMask";
        case ErrorCode::BadKernelSize: return "BadKernelSize";
        case ErrorCode::BadAugmentSpec: return "BadAugmentSpec";
        case ErrorCode::PredictorShapeMismatch: return "PredictorShapeMismatch";
        case ErrorCode::PredictorRangeViolation: return "PredictorRangeViolation";
        case ErrorCode::PredictorFailure: return "PredictorFailure";
        case ErrorCode::EvenWindow: return "EvenWindow";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::MissingLayout: return "MissingLayout";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::EmptyChoice: return "EmptyChoice";
        case ErrorCode::BadStep: return "BadStep";
        case ErrorCode::ReversedRange: return "ReversedRange";
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::InfiniteSpace: return "InfiniteSpace";
        case ErrorCode::NotAMember: return "NotAMember";
    }
    return "Unknown";
}

std::string_view dtype_name(DType t) noexcept { return t == DType::U8 ? "u8" : "f32"; }

std::size_t Dims::voxels() const {
    if (x == 0 || y == 0 || z == 0) throw Error(ErrorCode::DimOverflow, "zero-sized dimension");
    std::size_t n = 0;
    if (__builtin_mul_overflow(x, y, &n) || __builtin_mul_overflow(n, z, &n))
        throw Error(ErrorCode::DimOverflow, "voxel count overflows 64 bits");
    return n;
}

namespace {

void check_spacing(const Spacing& s) {
    for (float c : {s.x, s.y, s.z})
        if (!(c > 0.0f) || !std::isfinite(c))
            throw Error(ErrorCode::InvalidArgument, "voxel spacing must be finite and > 0");
}

}  // namespace

Volume::Volume(Dims dims, DType dtype, Spacing spacing)
    : dims_(dims), dtype_(dtype), spacing_(spacing), size_(dims.voxels()) {
    check_spacing(spacing);
    if (dtype == DType::U8)
        data_ = std::vector<std::uint8_t>(size_, 0);
    else
        data_ = std::vector<float>(size_, 0.0f);
}

Volume Volume::from_u8(Dims dims, std::vector<std::uint8_t> data, Spacing spacing) {
    Volume v(Dims{1, 1, 1}, DType::U8, spacing);
    v.dims_ = dims;
    v.size_ = dims.voxels();
    if (data.size() != v.size_) throw Error(ErrorCode::InvalidArgument, "buffer length does not match dims");
    v.data_ = std::move(data);
    return v;
}

Volume Volume::from_f32(Dims dims, std::vector<float> data, Spacing spacing) {
    Volume v(Dims{1, 1, 1}, DType::F32, spacing);
    v.dims_ = dims;
    v.size_ = dims.voxels();
    if (data.size() != v.size_) throw Error(ErrorCode::InvalidArgument, "buffer length does not match dims");
    v.data_ = std::move(data);
    return v;
}

void Volume::set_spacing(Spacing s) {
    check_spacing(s);
    spacing_ = s;
}

std::span<std::uint8_t> Volume::u8() {
    if (dtype_ != DType::U8) throw Error(ErrorCode::DtypeMismatch, "volume is not u8");
    return std::get<0>(data_);
}
std::span<const std::uint8_t> Volume::u8() const {
    if (dtype_ != DType::U8) throw Error(ErrorCode::DtypeMismatch, "volume is not u8");
    return std::get<0>(data_);
}
std::span<float> Volume::f32() {
    if (dtype_ != DType::F32) throw Error(ErrorCode::DtypeMismatch, "volume is not f32");
    return std::get<1>(data_);
}
std::span<const float> Volume::f32() const {
    if (dtype_ != DType::F32) throw Error(ErrorCode::DtypeMismatch, "volume is not f32");
    return std::get<1>(data_);
}

std::span<const std::byte> Volume::bytes() const {
    return visit([](auto s) { return std::as_bytes(s); });
}

bool operator==(const Volume& a, const Volume& b) {
    if (a.dims_ != b.dims_ || a.dtype_ != b.dtype_ || !(a.spacing_ == b.spacing_)) return false;
    auto ba = a.bytes();
    auto bb = b.bytes();
    return ba.size() == bb.size() && std::memcmp(ba.data(), bb.data(), ba.size()) == 0;
}

bool is_binary_mask(const Volume& v) noexcept {
    if (v.dtype() != DType::U8) return false;
    auto s = v.u8();
    return std::all_of(s.begin(), s.end(), [](std::uint8_t c) { return c <= 1; });
}

void require_binary_mask(const Volume& v, std::string_view what) {
    if (v.dtype() != DType::U8)
        throw Error(ErrorCode::DtypeMismatch, std::string(what) + " must be a u8 binary mask");
    if (!is_binary_mask(v))
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " has values outside {0,1}");
}

void require_probabilities(const Volume& v, std::string_view what) {
    if (v.dtype() != DType::F32)
        throw Error(ErrorCode::DtypeMismatch, std::string(what) + " must be f32 probabilities");
    for (float p : v.f32())
        if (!(p >= 0.0f && p <= 1.0f))
            throw Error(ErrorCode::OutOfRangeProbability,
                        std::string(what) + " has a value outside [0,1]: " + std::to_string(p));
}

Volume to_f32(const Volume& v) {
    if (v.dtype() == DType::F32) return v;
    std::vector<float> out(v.size());
    auto in = v.u8();
    std::transform(in.begin(), in.end(), out.begin(), [](std::uint8_t c) { return static_cast<float>(c); });
    return Volume::from_f32(v.dims(), std::move(out), v.spacing());
}

Volume slab_z(const Volume& v, std::size_t z0, std::size_t nz) {
    const Dims& d = v.dims();
    if (nz == 0 || z0 + nz > d.z) throw Error(ErrorCode::InvalidArgument, "z range out of bounds");
    const std::size_t plane = d.x * d.y;
    Volume out(Dims{d.x, d.y, nz}, v.dtype(), v.spacing());
    v.visit([&](auto src) {
        using T = std::remove_const_t<typename decltype(src)::element_type>;
        auto dst = out.typed<T>();
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(z0 * plane), nz * plane, dst.begin());
    });
    return out;
}

Volume slice_z(const Volume& v, std::size_t z) { return slab_z(v, z, 1); }

}  // namespace emseg
