#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "emseg/augment.hpp"
#include "emseg/volume.hpp"

namespace emseg {

/// Stand-in for a trained network: maps a volume to F32 probabilities of the same dims.
/// U8 outputs are accepted and widened to F32.
using Predictor = std::function<Volume(const Volume&)>;

struct TtaResult {
    Volume prediction;
    std::size_t branches = 0;
};

/// Runs the predictor on every element of the rigid group, undoes each transform on
/// its output and averages in canonical group order.
/// Throws PredictorShapeMismatch / PredictorRangeViolation on contract breaches.
TtaResult tta_ensemble(const Predictor& predictor, const Volume& v, int dimensionality);

/// Median over a window of `window` slices along z, per (x,y) column, with edge
/// replication at the volume ends. Throws EvenWindow for even or non-positive windows
/// and InvalidArgument when window > 2*nz - 1.
Volume median_z_filter(const Volume& m, int window);

enum class ZFilterOrder { BinarizeThenFilter, FilterThenBinarize };

/// Probability volume to cleaned binary mask. The default order filters the labels.
Volume z_filtered_labels(const Volume& probabilities, double threshold, int window,
                         ZFilterOrder order = ZFilterOrder::BinarizeThenFilter);

/// Runs `/bin/sh -c "<command> <input.emvol> <output.emvol>"` for each call. The
/// child gets `timeout` to finish; non-zero exit, timeout or an unreadable output
/// raise PredictorFailure.
Predictor subprocess_predictor(std::string command, std::chrono::milliseconds timeout = std::chrono::minutes(10));

}  // namespace emseg
