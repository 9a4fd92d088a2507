#include <json.hpp>

#include "emseg/metrics.hpp"
#include "emseg/parallel.hpp"

namespace emseg {

namespace {

Score ratio(std::uint64_t num, std::uint64_t den) noexcept {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

Score mean_defined(const std::vector<UnitScore>& units, Score UnitScore::*field) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& u : units)
        if (const auto& s = u.*field) {
            sum += *s;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

UnitScore score_unit(std::size_t index, const Confusion& c) {
    UnitScore u;
    u.index = index;
    u.counts = c;
    u.iou_fg = foreground_iou(c);
    u.iou_bg = background_iou(c);
    u.iou_overall = overall_iou(u.iou_fg, u.iou_bg);
    return u;
}

IoUReport summarize(EvalMode mode, EvalUnit unit, double threshold, std::vector<UnitScore> units) {
    IoUReport r;
    r.mode = mode;
    r.unit = unit;
    r.threshold = threshold;
    for (const auto& u : units) r.counts += u.counts;
    r.iou_fg = mean_defined(units, &UnitScore::iou_fg);
    r.iou_bg = mean_defined(units, &UnitScore::iou_bg);
    r.iou_overall = overall_iou(r.iou_fg, r.iou_bg);
    r.units = std::move(units);
    return r;
}

Volume as_probabilities(const Volume& pred) {
    Volume p = pred.dtype() == DType::U8 ? to_f32(pred) : pred;
    require_probabilities(p, "prediction");
    return p;
}

void check_inputs(const Volume& pred, const Volume& gt) {
    if (!(pred.dims() == gt.dims())) throw Error(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
    require_binary_mask(gt, "ground truth");
}

EvalUnit default_unit(const EvalOptions& o, const PatchLayout* layout) {
    if (o.unit) return *o.unit;
    return layout && layout->patch.z == 1 ? EvalUnit::Slice : EvalUnit::Volume;
}

IoUReport score_image(const Volume& prob, const Volume& gt, const EvalOptions& o, EvalUnit unit) {
    check_inputs(prob, gt);
    const Volume pred = binarize(prob, o.threshold);
    std::vector<UnitScore> units;
    if (unit == EvalUnit::Slice) {
        for (std::size_t z = 0; z < gt.dims().z; ++z)
            units.push_back(score_unit(z, confusion_counts(slice_z(pred, z), slice_z(gt, z))));
    } else if (unit == EvalUnit::Volume) {
        units.push_back(score_unit(0, confusion_counts(pred, gt)));
    } else {
        throw Error(ErrorCode::InvalidArgument, "image modes average over slices or volumes");
    }
    return summarize(o.mode, unit, o.threshold, std::move(units));
}

IoUReport score_patches(std::span<const Volume> pred, const PatchLayout& layout, const Volume& gt,
                        const EvalOptions& o) {
    if (pred.size() != layout.origins.size())
        throw Error(ErrorCode::WrongPatchCount, std::to_string(pred.size()) + " patches for " +
                                                    std::to_string(layout.origins.size()) + " origins");
    const auto gt_patches = extract(gt, layout);
    std::vector<UnitScore> units(pred.size());
    parallel_for(pred.size(), [&](std::size_t i) {
        const Volume p = as_probabilities(pred[i]);
        check_inputs(p, gt_patches[i]);
        units[i] = score_unit(i, confusion_counts(binarize(p, o.threshold), gt_patches[i]));
        units[i].origin = layout.origins[i];
    });
    return summarize(EvalMode::PerPatch, EvalUnit::Patch, o.threshold, std::move(units));
}

void check_layout(const PatchLayout& layout, const Volume& gt) {
    layout.validate();
    if (!(layout.source == gt.dims())) throw Error(ErrorCode::LayoutMismatch, "layout source dims differ from volume");
}

nlohmann::json score_json(const Score& s) { return s ? nlohmann::json(*s) : nlohmann::json(nullptr); }

}  // namespace

Confusion confusion_counts(const Volume& pred, const Volume& gt) {
    if (!(pred.dims() == gt.dims())) throw Error(ErrorCode::DimMismatch, "prediction and ground truth dims differ");
    require_binary_mask(pred, "prediction mask");
    require_binary_mask(gt, "ground truth");
    const auto p = pred.u8();
    const auto g = gt.u8();
    const std::size_t nz = pred.dims().z;
    const std::size_t plane = pred.dims().x * pred.dims().y;
    std::vector<Confusion> per_slice(nz);
    parallel_for(nz, [&](std::size_t z) {
        Confusion c;
        for (std::size_t i = z * plane; i < (z + 1) * plane; ++i) {
            const int code = (p[i] << 1) | g[i];
            switch (code) {
                case 3: ++c.tp; break;
                case 2: ++c.fp; break;
                case 1: ++c.fn; break;
                default: ++c.tn; break;
            }
        }
        per_slice[z] = c;
    });
    Confusion total;
    for (const auto& c : per_slice) total += c;
    return total;
}

Score foreground_iou(const Confusion& c) noexcept { return ratio(c.tp, c.tp + c.fp + c.fn); }
Score background_iou(const Confusion& c) noexcept { return ratio(c.tn, c.tn + c.fp + c.fn); }

Score overall_iou(Score fg, Score bg) noexcept {
    if (!fg || !bg) return std::nullopt;
    return (*fg + *bg) / 2.0;
}

Score foreground_iou(const Volume& pred, const Volume& gt) { return foreground_iou(confusion_counts(pred, gt)); }
Score background_iou(const Volume& pred, const Volume& gt) { return background_iou(confusion_counts(pred, gt)); }

std::string_view mode_name(EvalMode m) noexcept {
    switch (m) {
        case EvalMode::PerPatch: return "per_patch";
        case EvalMode::MosaicImage: return "mosaic";
        case EvalMode::Overlap50Image: return "overlap50";
        case EvalMode::FullImage: return "full";
    }
    return "?";
}

EvalMode parse_mode(std::string_view s) {
    for (EvalMode m : {EvalMode::PerPatch, EvalMode::MosaicImage, EvalMode::Overlap50Image, EvalMode::FullImage})
        if (mode_name(m) == s) return m;
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(s) + "'");
}

std::string_view unit_name(EvalUnit u) noexcept {
    switch (u) {
        case EvalUnit::Slice: return "slice";
        case EvalUnit::Volume: return "volume";
        case EvalUnit::Patch: return "patch";
    }
    return "?";
}

EvalUnit parse_unit(std::string_view s) {
    if (s == "slice") return EvalUnit::Slice;
    if (s == "volume") return EvalUnit::Volume;
    throw Error(ErrorCode::InvalidArgument, "unknown unit '" + std::string(s) + "'");
}

IoUReport evaluate(const Volume& pred_prob, const Volume& gt, const EvalOptions& o, const PatchLayout* layout) {
    check_inputs(pred_prob, gt);
    const Volume prob = as_probabilities(pred_prob);
    if (o.mode == EvalMode::FullImage) return score_image(prob, gt, o, default_unit(o, layout));
    if (!layout) throw Error(ErrorCode::MissingLayout, std::string(mode_name(o.mode)) + " mode needs a patch layout");
    check_layout(*layout, gt);
    const auto patches = extract(prob, *layout);
    return evaluate_patches(patches, *layout, gt, o);
}

IoUReport evaluate_patches(std::span<const Volume> pred_patches, const PatchLayout& layout, const Volume& gt,
                           const EvalOptions& o) {
    check_layout(layout, gt);
    require_binary_mask(gt, "ground truth");
    switch (o.mode) {
        case EvalMode::PerPatch: return score_patches(pred_patches, layout, gt, o);
        case EvalMode::MosaicImage:
            return score_image(as_probabilities(reconstruct_mosaic(pred_patches, layout)), gt, o,
                               default_unit(o, &layout));
        case EvalMode::Overlap50Image:
            return score_image(as_probabilities(reconstruct_overlap_mean(pred_patches, layout)), gt, o,
                               default_unit(o, &layout));
        case EvalMode::FullImage: break;
    }
    throw Error(ErrorCode::InvalidArgument, "full-image mode evaluates a reconstructed volume, not patches");
}

std::string report_to_json(const IoUReport& r, int indent) {
    nlohmann::json j;
    j["mode"] = mode_name(r.mode);
    j["unit"] = unit_name(r.unit);
    j["threshold"] = r.threshold;
    j["tp"] = r.counts.tp;
    j["fp"] = r.counts.fp;
    j["fn"] = r.counts.fn;
    j["tn"] = r.counts.tn;
    j["iou_fg"] = score_json(r.iou_fg);
    j["iou_bg"] = score_json(r.iou_bg);
    j["iou_overall"] = score_json(r.iou_overall);
    j["units"] = nlohmann::json::array();
    for (const auto& u : r.units) {
        nlohmann::json ju;
        ju["index"] = u.index;
        if (u.origin) ju["origin"] = {u.origin->x, u.origin->y, u.origin->z};
        ju["tp"] = u.counts.tp;
        ju["fp"] = u.counts.fp;
        ju["fn"] = u.counts.fn;
        ju["tn"] = u.counts.tn;
        ju["iou_fg"] = score_json(u.iou_fg);
        ju["iou_bg"] = score_json(u.iou_bg);
        ju["iou_overall"] = score_json(u.iou_overall);
        j["units"].push_back(std::move(ju));
    }
    return j.dump(indent);
}

PerturbationResult gt_perturbation_check(const Volume& gt, int radius, Footprint footprint) {
    require_binary_mask(gt, "ground truth");
    if (radius < 1) throw Error(ErrorCode::InvalidArgument, "radius must be >= 1");
    return {foreground_iou(dilate(gt, radius, footprint), gt), foreground_iou(erode(gt, radius, footprint), gt)};
}

}  // namespace emseg
