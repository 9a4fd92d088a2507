#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "emseg/patchkit.hpp"
#include "emseg/volcore.hpp"
#include "emseg/volume.hpp"

namespace emseg {

struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    Confusion& operator+=(const Confusion& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// nullopt stands for an undefined 0/0 score.
using Score = std::optional<double>;

Confusion confusion_counts(const Volume& pred, const Volume& gt);  // DimMismatch

Score foreground_iou(const Confusion& c) noexcept;  // tp / (tp + fp + fn)
Score background_iou(const Confusion& c) noexcept;  // tn / (tn + fp + fn)
Score overall_iou(Score fg, Score bg) noexcept;     // mean, undefined if either is

Score foreground_iou(const Volume& pred, const Volume& gt);
Score background_iou(const Volume& pred, const Volume& gt);

enum class EvalMode { PerPatch, MosaicImage, Overlap50Image, FullImage };
enum class EvalUnit { Slice, Volume, Patch };

std::string_view mode_name(EvalMode m) noexcept;
EvalMode parse_mode(std::string_view s);  // "per_patch", "mosaic", "overlap50", "full"
std::string_view unit_name(EvalUnit u) noexcept;
EvalUnit parse_unit(std::string_view s);  // "slice", "volume"

struct UnitScore {
    std::size_t index = 0;
    std::optional<Dims> origin;  // patch units only
    Confusion counts;
    Score iou_fg;
    Score iou_bg;
    Score iou_overall;
};

/// Top-level scores are unweighted means over units with a defined score;
/// counts are pooled over units.
struct IoUReport {
    EvalMode mode = EvalMode::FullImage;
    EvalUnit unit = EvalUnit::Volume;
    double threshold = 0.5;
    Confusion counts;
    Score iou_fg;
    Score iou_bg;
    Score iou_overall;
    std::vector<UnitScore> units;
};

struct EvalOptions {
    double threshold = 0.5;
    EvalMode mode = EvalMode::FullImage;
    /// Image modes only. Default: slices when the layout patches are single slices, else the whole volume.
    std::optional<EvalUnit> unit;
};

/// Predictions given as one probability volume. PerPatch cuts prediction and
/// ground truth with the layout; Mosaic/Overlap50 cut and reassemble through it.
/// A layout is required for every mode except FullImage (MissingLayout).
IoUReport evaluate(const Volume& pred_prob, const Volume& gt, const EvalOptions& options,
                   const PatchLayout* layout = nullptr);

/// Predictions given as per-patch probability volumes in layout order.
/// FullImage is rejected here (InvalidArgument).
IoUReport evaluate_patches(std::span<const Volume> pred_patches, const PatchLayout& layout, const Volume& gt,
                           const EvalOptions& options);

std::string report_to_json(const IoUReport& report, int indent = 2);

struct PerturbationResult {
    Score iou_dilated;
    Score iou_eroded;
};

/// Foreground IoU of the dilated and of the eroded ground truth against the original.
PerturbationResult gt_perturbation_check(const Volume& gt, int radius, Footprint footprint = Footprint::Slice2D);

}  // namespace emseg
