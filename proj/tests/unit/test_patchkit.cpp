#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "emseg/patchkit.hpp"
#include "test_util.hpp"

namespace emseg {
namespace {

using namespace emseg::testing;

std::vector<std::uint32_t> coverage(const PatchLayout& l) {
    const Dims p = l.padded();
    std::vector<std::uint32_t> c(p.voxels(), 0);
    for (const auto& o : l.origins)
        for (std::size_t k = 0; k < l.patch.z; ++k)
            for (std::size_t j = 0; j < l.patch.y; ++j)
                for (std::size_t i = 0; i < l.patch.x; ++i)
                    ++c[((o.z + k) * p.y + (o.y + j)) * p.x + (o.x + i)];
    return c;
}

TEST(PlanGrid, LucchiImageWith256Patches) {
    auto l = plan_grid({1024, 768, 1}, {256, 256, 1}, Overlap::None);
    EXPECT_EQ(l.origins.size(), 12u);
    EXPECT_EQ(l.padding, (Dims{0, 0, 0}));
    EXPECT_EQ(l.stride, (Dims{256, 256, 1}));
}

TEST(PlanGrid, WholeImagePatch) {
    auto l = plan_grid({512, 512, 1}, {512, 512, 1}, Overlap::None);
    ASSERT_EQ(l.origins.size(), 1u);
    EXPECT_EQ(l.origins[0], (Dims{0, 0, 0}));
}

TEST(PlanGrid, HalfOverlapPadsToWholePatches) {
    auto l = plan_grid({768, 512, 1}, {512, 512, 1}, Overlap::Half);
    EXPECT_EQ(l.stride, (Dims{256, 256, 1}));
    EXPECT_EQ(l.padded(), (Dims{1024, 512, 1}));
    ASSERT_EQ(l.origins.size(), 3u);
    EXPECT_EQ(l.origins[0].x, 0u);
    EXPECT_EQ(l.origins[1].x, 256u);
    EXPECT_EQ(l.origins[2].x, 512u);
}

TEST(PlanGrid, OddPatchHalfOverlap) {
    auto l = plan_grid({7, 4, 1}, {5, 3, 1}, Overlap::Half);
    EXPECT_EQ(l.stride, (Dims{3, 2, 1}));
    // x: whole = 10, origins 0,3,6 -> padded 11
    EXPECT_EQ(l.padded().x, 11u);
    EXPECT_NO_THROW(l.validate());
}

TEST(PlanGrid, CoverageProperties) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const Dims dims{2 + rng() % 40, 2 + rng() % 30, 1 + rng() % 6};
        const Dims patch{1 + rng() % dims.x, 1 + rng() % dims.y, 1 + rng() % dims.z};
        for (auto ov : {Overlap::None, Overlap::Half}) {
            auto l = plan_grid(dims, patch, ov);
            ASSERT_NO_THROW(l.validate());
            auto c = coverage(l);
            const Dims p = l.padded();
            for (std::size_t z = 0; z < dims.z; ++z)
                for (std::size_t y = 0; y < dims.y; ++y)
                    for (std::size_t x = 0; x < dims.x; ++x) {
                        const auto n = c[(z * p.y + y) * p.x + x];
                        if (ov == Overlap::None) {
                            ASSERT_EQ(n, 1u);
                        } else {
                            ASSERT_GE(n, 1u);
                        }
                    }
        }
    }
}

TEST(PlanGrid, HalfOverlapInteriorCoveredTwicePerAxis) {
    auto l = plan_grid({40, 24, 1}, {8, 8, 1}, Overlap::Half);
    auto c = coverage(l);
    const Dims p = l.padded();
    for (std::size_t y = 4; y + 4 < p.y; ++y)
        for (std::size_t x = 4; x + 4 < p.x; ++x) EXPECT_EQ(c[y * p.x + x], 4u);
}

TEST(PlanGrid, PatchLargerThanVolume) {
    EXPECT_EQ(code_of([] { plan_grid({10, 10, 1}, {16, 8, 1}, Overlap::None); }), ErrorCode::PatchLargerThanVolume);
}

TEST(Layout, JsonRoundTrip) {
    auto l = plan_grid({30, 20, 5}, {16, 8, 2}, Overlap::Half);
    EXPECT_EQ(layout_from_json(layout_to_json(l)), l);
    EXPECT_EQ(code_of([] { layout_from_json("{\"dims\": [1,2]}"); }), ErrorCode::LayoutMismatch);
    auto bad = l;
    std::swap(bad.origins[0], bad.origins[1]);
    EXPECT_EQ(code_of([&] { layout_from_json(layout_to_json(bad)); }), ErrorCode::LayoutMismatch);
}

TEST(ReflectIndex, MirrorsWithoutRepeatingEdge) {
    EXPECT_EQ(reflect_index(4, 4), 2);
    EXPECT_EQ(reflect_index(5, 4), 1);
    EXPECT_EQ(reflect_index(6, 4), 0);
    EXPECT_EQ(reflect_index(7, 4), 1);
    EXPECT_EQ(reflect_index(-1, 4), 1);
    EXPECT_EQ(reflect_index(3, 1), 0);
}

TEST(Extract, RampQuadrants) {
    std::vector<std::uint8_t> ramp(16);
    for (std::size_t i = 0; i < 16; ++i) ramp[i] = static_cast<std::uint8_t>(i);
    auto v = Volume::from_u8({4, 4, 1}, ramp);
    auto l = plan_grid({4, 4, 1}, {2, 2, 1}, Overlap::None);
    auto p = extract(v, l);
    ASSERT_EQ(p.size(), 4u);
    // index arithmetic: quadrant (qx,qy) holds values 4*(2qy+j) + 2qx + i
    for (std::size_t q = 0; q < 4; ++q) {
        const std::size_t qx = q % 2, qy = q / 2;
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t i = 0; i < 2; ++i)
                EXPECT_EQ(p[q].at(i, j, 0), static_cast<double>(4 * (2 * qy + j) + 2 * qx + i));
    }
}

TEST(Extract, ConstantVolumeGivesConstantPatches) {
    Volume v({9, 7, 3}, DType::F32);
    for (auto& f : v.f32()) f = 0.25f;
    for (auto ov : {Overlap::None, Overlap::Half})
        for (const auto& p : extract(v, plan_grid(v.dims(), {4, 4, 2}, ov)))
            for (float f : p.f32()) EXPECT_EQ(f, 0.25f);
}

TEST(Extract, PaddingIsReflected) {
    auto v = Volume::from_u8({3, 1, 1}, {10, 20, 30});
    auto l = plan_grid(v.dims(), {2, 1, 1}, Overlap::None);
    auto p = extract(v, l);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[1].at(0, 0, 0), 30.0);
    EXPECT_EQ(p[1].at(1, 0, 0), 20.0);
}

TEST(Extract, LayoutMismatch) {
    auto l = plan_grid({8, 8, 1}, {4, 4, 1}, Overlap::None);
    EXPECT_EQ(code_of([&] { extract(Volume({8, 9, 1}, DType::U8), l); }), ErrorCode::LayoutMismatch);
}

TEST(Mosaic, InverseOfExtraction) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto v = random_f32({13 + seed, 9, 3}, seed);
        auto l = plan_grid(v.dims(), {4, 4, 2}, Overlap::None);
        EXPECT_EQ(reconstruct_mosaic(extract(v, l), l), v);
        auto m = random_mask({16, 8, 2}, seed);
        auto lm = plan_grid(m.dims(), {8, 4, 1}, Overlap::None);
        EXPECT_EQ(reconstruct_mosaic(extract(m, lm), lm), m);
    }
}

TEST(Mosaic, ContractErrors) {
    auto v = random_f32({8, 8, 1}, 1);
    auto l = plan_grid(v.dims(), {4, 4, 1}, Overlap::None);
    auto p = extract(v, l);
    p.pop_back();
    EXPECT_EQ(code_of([&] { reconstruct_mosaic(p, l); }), ErrorCode::WrongPatchCount);
    auto h = plan_grid(v.dims(), {4, 4, 1}, Overlap::Half);
    EXPECT_EQ(code_of([&] { reconstruct_mosaic(extract(v, h), h); }), ErrorCode::LayoutMismatch);
}

TEST(OverlapMean, ExactOnSelfConsistentExtraction) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto v = random_f32({11 + 3 * seed, 10, 4}, seed);
        auto l = plan_grid(v.dims(), {6, 4, 2}, Overlap::Half);
        EXPECT_EQ(reconstruct_overlap_mean(extract(v, l), l), v);
    }
}

TEST(OverlapMean, AveragesDisagreement) {
    auto l = plan_grid({4, 1, 1}, {2, 1, 1}, Overlap::Half);
    ASSERT_EQ(l.origins.size(), 3u);
    std::vector<Volume> p;
    p.push_back(Volume::from_f32({2, 1, 1}, {0.2f, 0.2f}));
    p.push_back(Volume::from_f32({2, 1, 1}, {0.6f, 0.6f}));
    p.push_back(Volume::from_f32({2, 1, 1}, {0.6f, 0.6f}));
    auto r = reconstruct_overlap_mean(p, l);
    EXPECT_FLOAT_EQ(r.f32()[0], 0.2f);
    EXPECT_FLOAT_EQ(r.f32()[1], 0.4f);
    EXPECT_FLOAT_EQ(r.f32()[2], 0.6f);
}

TEST(SplineWindow, LengthFourValues) {
    auto w = spline_window_1d(4);
    ASSERT_EQ(w.size(), 4u);
    EXPECT_DOUBLE_EQ(w[0], 0.125);
    EXPECT_DOUBLE_EQ(w[1], 0.875);
    EXPECT_DOUBLE_EQ(w[2], 0.875);
    EXPECT_DOUBLE_EQ(w[3], 0.125);
}

TEST(SplineWindow, SymmetricPositivePartitionOfUnity) {
    for (std::size_t len = 2; len <= 300; len += 2) {
        auto w = spline_window_1d(len);
        for (std::size_t i = 0; i < len; ++i) {
            EXPECT_GT(w[i], 0.0);
            EXPECT_EQ(w[i], w[len - 1 - i]);
        }
        for (std::size_t i = 0; i < len / 2; ++i) EXPECT_NEAR(w[i] + w[i + len / 2], 1.0, 1e-12);
    }
}

TEST(SplineWindow, OddLengthRejected) {
    EXPECT_EQ(code_of([] { spline_window_1d(5); }), ErrorCode::OddLength);
    EXPECT_EQ(code_of([] { spline_window_1d(0); }), ErrorCode::OddLength);
}

TEST(Blend, ReproducesSelfConsistentExtraction) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto v = random_f32({17 + seed, 12, 5}, seed);
        auto l = plan_grid(v.dims(), {8, 6, 3}, Overlap::Half);
        auto r = reconstruct_blend(extract(v, l), l);
        for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(r.f32()[i], v.f32()[i], 1e-6);
    }
}

TEST(Blend, ConstantPatches) {
    auto l = plan_grid({20, 20, 1}, {8, 8, 1}, Overlap::Half);
    std::vector<Volume> p(l.origins.size(), Volume({8, 8, 1}, DType::F32));
    for (auto& v : p)
        for (auto& f : v.f32()) f = 0.7f;
    for (float f : reconstruct_blend(p, l).f32()) EXPECT_NEAR(f, 0.7f, 1e-6);
}

TEST(Blend, SmoothsSeams) {
    // patches disagree: constant 0 left of x=8, constant 1 from there on
    const Dims dims{16, 4, 1};
    auto step_patches = [](const PatchLayout& l) {
        std::vector<Volume> p;
        for (const auto& o : l.origins) {
            Volume v(l.patch, DType::F32);
            const float val = o.x + l.patch.x / 2 < 8 ? 0.0f : 1.0f;
            for (auto& f : v.f32()) f = val;
            p.push_back(std::move(v));
        }
        return p;
    };
    auto max_jump = [&](const Volume& v) {
        double j = 0;
        for (std::size_t x = 1; x < dims.x; ++x) j = std::max(j, std::abs(v.at(x, 0, 0) - v.at(x - 1, 0, 0)));
        return j;
    };
    auto lm = plan_grid(dims, {8, 4, 1}, Overlap::None);
    auto lb = plan_grid(dims, {8, 4, 1}, Overlap::Half);
    const double mosaic_jump = max_jump(reconstruct_mosaic(step_patches(lm), lm));
    const double blend_jump = max_jump(reconstruct_blend(step_patches(lb), lb));
    EXPECT_DOUBLE_EQ(mosaic_jump, 1.0);
    EXPECT_LT(blend_jump, mosaic_jump);
}

TEST(ProbabilityMap, ClassMasses) {
    Volume gt({10, 10, 10}, DType::U8);
    for (std::size_t i = 0; i < 100; ++i) gt.u8()[i * 10] = 1;
    auto m = build_probability_map(gt, 0.94);
    EXPECT_NEAR(m[0], 0.0094, 1e-15);
    EXPECT_NEAR(m[1], 0.06 / 900.0, 1e-15);
    EXPECT_NEAR(m[1], 6.667e-5, 1e-8);
    double sum = 0;
    for (double p : m.values()) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(ProbabilityMap, AllBackgroundIsUniform) {
    Volume gt({4, 5, 2}, DType::U8);
    auto m = build_probability_map(gt, 0.94);
    for (double p : m.values()) EXPECT_DOUBLE_EQ(p, 1.0 / 40.0);
    EXPECT_EQ(m.foreground_mass(), 0.0);
    EXPECT_EQ(code_of([&] { build_probability_map(gt, 1.0); }), ErrorCode::InvalidArgument);
}

TEST(Sampling, DeltaMapGivesIdenticalOrigins) {
    Volume w({20, 20, 1}, DType::F32);
    w.f32()[w.index(13, 4, 0)] = 1.0f;
    auto m = ProbabilityMap::from_weights(w);
    auto o = sample_patch_origins(m, {8, 8, 1}, 50, 7);
    for (const auto& x : o) EXPECT_EQ(x, (Dims{9, 0, 0}));
}

TEST(Sampling, ForegroundRateMatchesClassMass) {
    auto gt = random_mask({64, 64, 4}, 11, 0.05);
    auto m = build_probability_map(gt, 0.94);
    auto centers = sample_patch_centers(m, 10000, 42);
    std::size_t fg = 0;
    for (const auto& c : centers) fg += gt.at(c.x, c.y, c.z) != 0;
    EXPECT_NEAR(static_cast<double>(fg) / 10000.0, 0.94, 0.02);
    EXPECT_EQ(sample_patch_centers(m, 100, 42), std::vector<Dims>(centers.begin(), centers.begin() + 100));
}

TEST(Sampling, OriginsStayInBounds) {
    auto gt = random_mask({30, 20, 3}, 2, 0.2);
    auto m = build_probability_map(gt, 0.9);
    for (const auto& o : sample_patch_origins(m, {16, 16, 2}, 500, 3)) {
        EXPECT_LE(o.x + 16, 30u);
        EXPECT_LE(o.y + 16, 20u);
        EXPECT_LE(o.z + 2, 3u);
    }
    EXPECT_EQ(code_of([&] { sample_patch_origins(m, {31, 1, 1}, 1, 0); }), ErrorCode::PatchLargerThanVolume);
}

TEST(Discard, Filtering) {
    Volume img({32, 32, 1}, DType::F32);
    Volume sparse({32, 32, 1}, DType::U8);
    for (std::size_t i = 0; i < 5; ++i) sparse.u8()[i] = 1;  // 5/1024 = 0.488%
    Volume full({32, 32, 1}, DType::U8);
    for (auto& c : full.u8()) c = 1;
    std::vector<PatchPair> pairs{{img, sparse}, {img, full}};
    EXPECT_EQ(discard_low_foreground(pairs, 0.0).size(), 2u);
    auto kept = discard_low_foreground(pairs, 0.05);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].second, full);
    EXPECT_EQ(discard_low_foreground(pairs, 0.999).size(), 1u);
}

}  // namespace
}  // namespace emseg
