#include <algorithm>
#include <cmath>
#include <string>

#include "emseg/parallel.hpp"
#include "emseg/postproc.hpp"
#include "emseg/volcore.hpp"

namespace emseg {

namespace {

Volume checked_output(Volume out, const Dims& expected, const std::string& branch) {
    if (!(out.dims() == expected))
        throw Error(ErrorCode::PredictorShapeMismatch, "branch " + branch + ": predictor returned wrong dims");
    if (out.dtype() == DType::U8) out = to_f32(out);
    for (float f : out.f32())
        if (!(f >= 0.0f && f <= 1.0f))
            throw Error(ErrorCode::PredictorRangeViolation, "branch " + branch + ": output outside [0,1]");
    return out;
}

}  // namespace

TtaResult tta_ensemble(const Predictor& predictor, const Volume& v, int dimensionality) {
    const auto group = enumerate_tta(dimensionality);
    std::vector<double> sum(v.size(), 0.0);
    for (const auto& t : group) {
        const Volume input = apply_rigid(v, t);
        const Volume p = checked_output(predictor(input), input.dims(), t.name());
        const Volume back = apply_rigid(p, invert_rigid(t));
        const auto f = back.f32();
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += f[i];
    }
    Volume out(v.dims(), DType::F32, v.spacing());
    auto dst = out.f32();
    const double n = static_cast<double>(group.size());
    for (std::size_t i = 0; i < sum.size(); ++i) dst[i] = static_cast<float>(std::clamp(sum[i] / n, 0.0, 1.0));
    return {std::move(out), group.size()};
}

Volume median_z_filter(const Volume& m, int window) {
    if (window < 1 || window % 2 == 0) throw Error(ErrorCode::EvenWindow, "window must be odd and >= 1");
    const Dims& d = m.dims();
    if (static_cast<std::size_t>(window) > 2 * d.z - 1)
        throw Error(ErrorCode::InvalidArgument, "window " + std::to_string(window) + " exceeds 2*nz-1");
    if (window == 1) return m;
    const auto r = static_cast<std::ptrdiff_t>(window / 2);
    const auto nz = static_cast<std::ptrdiff_t>(d.z);
    const std::size_t plane = d.x * d.y;
    Volume out(d, m.dtype(), m.spacing());
    m.visit([&](auto in) {
        using T = std::remove_const_t<typename decltype(in)::element_type>;
        auto dst = out.typed<T>();
        parallel_for(d.y, [&](std::size_t y) {
            std::vector<T> win(static_cast<std::size_t>(window));
            for (std::size_t x = 0; x < d.x; ++x) {
                const std::size_t col = y * d.x + x;
                for (std::ptrdiff_t z = 0; z < nz; ++z) {
                    for (std::ptrdiff_t k = -r; k <= r; ++k) {
                        const std::ptrdiff_t zz = std::clamp<std::ptrdiff_t>(z + k, 0, nz - 1);
                        win[static_cast<std::size_t>(k + r)] = in[static_cast<std::size_t>(zz) * plane + col];
                    }
                    auto mid = win.begin() + r;
                    std::nth_element(win.begin(), mid, win.end());
                    dst[static_cast<std::size_t>(z) * plane + col] = *mid;
                }
            }
        });
    });
    return out;
}

Volume z_filtered_labels(const Volume& probabilities, double threshold, int window, ZFilterOrder order) {
    if (order == ZFilterOrder::BinarizeThenFilter) return median_z_filter(binarize(probabilities, threshold), window);
    return binarize(median_z_filter(probabilities, window), threshold);
}

}  // namespace emseg
