#include <algorithm>
#include <set>
#include <string>
#include <tuple>

#include <json.hpp>

#include "emseg/patchkit.hpp"

namespace emseg {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

nlohmann::json dims_json(const Dims& d) { return nlohmann::json::array({d.x, d.y, d.z}); }

Dims dims_from(const nlohmann::json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::LayoutMismatch, std::string(key) + " must be [x,y,z]");
    return {a[0].get<std::size_t>(), a[1].get<std::size_t>(), a[2].get<std::size_t>()};
}

auto zyx(const Dims& d) { return std::tie(d.z, d.y, d.x); }

}  // namespace

PatchLayout plan_grid(const Dims& dims, const Dims& patch, Overlap overlap) {
    (void)dims.voxels();
    (void)patch.voxels();
    PatchLayout l;
    l.source = dims;
    l.patch = patch;
    l.overlap = overlap;
    Dims count;
    for (int a = 0; a < 3; ++a) {
        if (patch[a] > dims[a])
            throw Error(ErrorCode::PatchLargerThanVolume,
                        "patch extent " + std::to_string(patch[a]) + " exceeds volume extent " +
                            std::to_string(dims[a]) + " on axis " + std::to_string(a));
        // pad to a whole number of patches, then step through it
        const std::size_t whole = ceil_div(dims[a], patch[a]) * patch[a];
        l.stride[a] = overlap == Overlap::None ? patch[a] : ceil_div(patch[a], 2);
        count[a] = ceil_div(whole - patch[a], l.stride[a]) + 1;
        l.padding[a] = (count[a] - 1) * l.stride[a] + patch[a] - dims[a];
    }
    l.origins.reserve(count.x * count.y * count.z);
    for (std::size_t k = 0; k < count.z; ++k)
        for (std::size_t j = 0; j < count.y; ++j)
            for (std::size_t i = 0; i < count.x; ++i)
                l.origins.push_back({i * l.stride.x, j * l.stride.y, k * l.stride.z});
    return l;
}

void PatchLayout::validate() const {
    (void)source.voxels();
    (void)patch.voxels();
    for (int a = 0; a < 3; ++a) {
        if (stride[a] < 1) throw Error(ErrorCode::LayoutMismatch, "stride must be >= 1");
        if (patch[a] > source[a] + padding[a]) throw Error(ErrorCode::LayoutMismatch, "patch exceeds padded volume");
    }
    const Dims p = padded();
    for (std::size_t n = 0; n < origins.size(); ++n) {
        const Dims& o = origins[n];
        for (int a = 0; a < 3; ++a)
            if (o[a] + patch[a] > p[a])
                throw Error(ErrorCode::LayoutMismatch, "origin " + std::to_string(n) + " runs past the padded border");
        if (n > 0 && !(zyx(origins[n - 1]) < zyx(o)))
            throw Error(ErrorCode::LayoutMismatch, "origins must be unique and sorted x-fastest");
    }
}

std::string layout_to_json(const PatchLayout& l) {
    nlohmann::json j;
    j["dims"] = dims_json(l.source);
    j["patch"] = dims_json(l.patch);
    j["stride"] = dims_json(l.stride);
    j["padding"] = dims_json(l.padding);
    j["overlap"] = l.overlap == Overlap::None ? "none" : "half";
    auto origins = nlohmann::json::array();
    for (const auto& o : l.origins) origins.push_back(dims_json(o));
    j["origins"] = std::move(origins);
    return j.dump(2) + "\n";
}

PatchLayout layout_from_json(const std::string& text) {
    PatchLayout l;
    try {
        const auto j = nlohmann::json::parse(text);
        l.source = dims_from(j, "dims");
        l.patch = dims_from(j, "patch");
        l.stride = dims_from(j, "stride");
        l.padding = dims_from(j, "padding");
        const auto ov = j.at("overlap").get<std::string>();
        if (ov == "none")
            l.overlap = Overlap::None;
        else if (ov == "half")
            l.overlap = Overlap::Half;
        else
            throw Error(ErrorCode::LayoutMismatch, "overlap must be \"none\" or \"half\"");
        for (const auto& o : j.at("origins")) {
            if (!o.is_array() || o.size() != 3) throw Error(ErrorCode::LayoutMismatch, "origin must be [x,y,z]");
            l.origins.push_back({o[0].get<std::size_t>(), o[1].get<std::size_t>(), o[2].get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::LayoutMismatch, std::string("malformed layout JSON: ") + e.what());
    }
    l.validate();
    return l;
}

}  // namespace emseg
