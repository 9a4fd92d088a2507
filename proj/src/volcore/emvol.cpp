#include "emseg/emvol.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <system_error>

#include <unistd.h>

namespace emseg {

namespace {

constexpr char kMagic[6] = {'E', 'M', 'V', 'O', 'L', '1'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::span<const std::byte> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

void put_f32(std::vector<std::byte>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

float get_f32(std::span<const std::byte> in, std::size_t off) { return std::bit_cast<float>(get_u32(in, off)); }

}  // namespace

std::vector<std::byte> encode_emvol(const Volume& v) {
    const Dims& d = v.dims();
    constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
    if (d.x > kMax || d.y > kMax || d.z > kMax)
        throw Error(ErrorCode::DimOverflow, "dimension does not fit in u32");

    std::vector<std::byte> out;
    const std::size_t elem = v.dtype() == DType::U8 ? 1 : 4;
    out.reserve(kEmvolHeaderSize + v.size() * elem);
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    out.push_back(static_cast<std::byte>(v.dtype()));
    put_u32(out, static_cast<std::uint32_t>(d.x));
    put_u32(out, static_cast<std::uint32_t>(d.y));
    put_u32(out, static_cast<std::uint32_t>(d.z));
    put_f32(out, v.spacing().x);
    put_f32(out, v.spacing().y);
    put_f32(out, v.spacing().z);

    if (v.dtype() == DType::U8) {
        for (std::uint8_t c : v.u8()) out.push_back(static_cast<std::byte>(c));
    } else {
        for (float f : v.f32()) put_f32(out, f);
    }
    return out;
}

Volume decode_emvol(std::span<const std::byte> in) {
    const std::size_t magic_len = std::min<std::size_t>(in.size(), sizeof kMagic);
    if (std::memcmp(in.data(), kMagic, magic_len) != 0) throw Error(ErrorCode::BadMagic, "not an EMVOL1 file");
    if (in.size() < kEmvolHeaderSize)
        throw Error(ErrorCode::TruncatedFile,
                    "header needs " + std::to_string(kEmvolHeaderSize) + " bytes, got " + std::to_string(in.size()));

    const auto tag = std::to_integer<std::uint8_t>(in[6]);
    if (tag > 1) throw Error(ErrorCode::UnknownDtype, "dtype byte " + std::to_string(tag));
    const DType dtype = static_cast<DType>(tag);

    const Dims dims{get_u32(in, 7), get_u32(in, 11), get_u32(in, 15)};
    const std::size_t n = dims.voxels();
    const std::size_t elem = dtype == DType::U8 ? 1 : 4;
    std::size_t payload = 0;
    if (__builtin_mul_overflow(n, elem, &payload)) throw Error(ErrorCode::DimOverflow, "payload size overflows");

    const std::size_t have = in.size() - kEmvolHeaderSize;
    if (have < payload)
        throw Error(ErrorCode::TruncatedFile,
                    "payload needs " + std::to_string(payload) + " bytes, got " + std::to_string(have));
    if (have > payload) throw Error(ErrorCode::InvalidArgument, "unexpected trailing bytes after payload");

    const Spacing spacing{get_f32(in, 19), get_f32(in, 23), get_f32(in, 27)};
    auto body = in.subspan(kEmvolHeaderSize);
    if (dtype == DType::U8) {
        std::vector<std::uint8_t> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = std::to_integer<std::uint8_t>(body[i]);
        return Volume::from_u8(dims, std::move(data), spacing);
    }
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = get_f32(body, 4 * i);
    return Volume::from_f32(dims, std::move(data), spacing);
}

Volume load_volume(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::vector<char> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
    return decode_emvol(std::as_bytes(std::span(raw)));
}

void save_volume(const Volume& v, const std::filesystem::path& path) {
    const auto bytes = encode_emvol(v);
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot move file into place at " + path.string());
    }
}

}  // namespace emseg
