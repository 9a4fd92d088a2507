#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "emseg/emvol.hpp"
#include "emseg/volume.hpp"

namespace emseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("emseg_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    CliRun run(const std::string& args) const {
        const fs::path o = path("stdout.txt"), e = path("stderr.txt");
        const std::string line = std::string(EMSEG_CLI) + " " + args + " >" + o.string() + " 2>" + e.string();
        const int status = std::system(line.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(o);
        r.err = slurp(e);
        return r;
    }

    std::string save(const std::string& name, const Volume& v) const {
        save_volume(v, path(name));
        return path(name).string();
    }

    fs::path dir_;
};

Volume ramp(Dims d) {
    std::vector<float> data(d.voxels());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>((i * 37) % 101) / 100.0f;
    return Volume::from_f32(d, std::move(data));
}

// Value depends only on the distance to the nearest x/y edge, so every square
// symmetry of the slice maps it onto itself; z is symmetric too.
Volume symmetric(std::size_t n, std::size_t nz) {
    Volume v({n, n, nz}, DType::F32);
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const auto dx = std::min(x, n - 1 - x), dy = std::min(y, n - 1 - y);
                const auto dz = std::min(z, nz - 1 - z);
                v.f32()[v.index(x, y, z)] = static_cast<float>(std::min(dx, dy) + dx * dy + dz) / 64.0f;
            }
    return v;
}

Volume disc(std::size_t n, double r) {
    Volume v({n, n, 1}, DType::U8);
    const double c = static_cast<double>(n - 1) / 2.0;
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
            v.u8()[v.index(x, y, 0)] = std::hypot(x - c, y - c) <= r ? 1 : 0;
    return v;
}

TEST_F(Cli, EvalIdenticalFilesScoreOne) {
    const Volume gt = disc(32, 8);
    const auto g = save("gt.emvol", gt);
    const CliRun r = run("eval --pred " + g + " --gt " + g);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_DOUBLE_EQ(json::parse(r.out).at("iou_fg").get<double>(), 1.0);
}

TEST_F(Cli, EvalDimMismatchExitsTwo) {
    const auto a = save("a.emvol", Volume({4, 4, 1}, DType::U8));
    const auto b = save("b.emvol", Volume({4, 5, 1}, DType::U8));
    const CliRun r = run("eval --pred " + a + " --gt " + b);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("DimMismatch"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalHandCase) {
    const auto p = save("p.emvol", Volume::from_u8({2, 2, 1}, {1, 1, 0, 0}));
    const auto g = save("g.emvol", Volume::from_u8({2, 2, 1}, {0, 1, 0, 1}));
    const CliRun r = run("eval --pred " + p + " --gt " + g);
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_NEAR(j.at("iou_fg").get<double>(), 1.0 / 3.0, 1e-12);
    EXPECT_EQ(j.at("tp"), 1);
    EXPECT_EQ(j.at("tn"), 1);
}

TEST_F(Cli, EvalTextFormat) {
    const auto g = save("g.emvol", disc(16, 4));
    const CliRun r = run("eval --format text --pred " + g + " --gt " + g);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("iou_fg      1.000000"), std::string::npos) << r.out;
}

TEST_F(Cli, EvalPatchModeNeedsLayout) {
    const auto g = save("g.emvol", disc(16, 4));
    const CliRun r = run("eval --mode mosaic --pred " + g + " --gt " + g);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("MissingLayout"), std::string::npos) << r.err;
}

TEST_F(Cli, MosaicRoundTripIsByteIdentical) {
    const Volume v = ramp({23, 17, 3});
    const auto src = save("src.emvol", v);
    const auto pd = path("patches").string();
    ASSERT_EQ(run("extract --in " + src + " --patch 8x8x1 --out-dir " + pd).code, 0);
    EXPECT_TRUE(fs::exists(fs::path(pd) / "layout.json"));
    EXPECT_TRUE(fs::exists(fs::path(pd) / "0_0_0.emvol"));
    const auto out = path("mosaic.emvol").string();
    const CliRun r = run("reconstruct --patches-dir " + pd + " --mode mosaic --out " + out);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(out), slurp(src));
}

TEST_F(Cli, BlendReportsTinyError) {
    const auto src = save("src.emvol", ramp({40, 36, 1}));
    const auto pd = path("patches").string();
    ASSERT_EQ(run("extract --in " + src + " --patch 16x16 --overlap half --out-dir " + pd).code, 0);
    const CliRun r = run("reconstruct --patches-dir " + pd + " --mode blend --out " + path("b.emvol").string() +
                      " --compare " + src);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_LT(json::parse(r.out).at("max_abs_diff").get<double>(), 1e-6);
}

TEST_F(Cli, MosaicWithHalfLayoutExitsTwo) {
    const auto src = save("src.emvol", ramp({32, 32, 1}));
    const auto pd = path("patches").string();
    ASSERT_EQ(run("extract --in " + src + " --patch 16x16 --overlap half --out-dir " + pd).code, 0);
    const CliRun r = run("reconstruct --patches-dir " + pd + " --mode mosaic --out " + path("m.emvol").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("LayoutMismatch"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("m.emvol")));
}

TEST_F(Cli, EvalOnPatchDirectory) {
    const Volume gt = disc(32, 9);
    const auto g = save("gt.emvol", gt);
    Volume prob = Volume({32, 32, 1}, DType::F32);
    for (std::size_t i = 0; i < prob.size(); ++i) prob.f32()[i] = static_cast<float>(gt.u8()[i]);
    const auto p = save("p.emvol", prob);
    const auto pd = path("patches").string();
    ASSERT_EQ(run("extract --in " + p + " --patch 16x16 --out-dir " + pd).code, 0);
    const CliRun r = run("eval --mode per_patch --pred " + pd + " --gt " + g);
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("units").size(), 4u);
    EXPECT_DOUBLE_EQ(j.at("iou_fg").get<double>(), 1.0);
}

TEST_F(Cli, TtaCopyStubReturnsSymmetricInput) {
    for (int dim : {2, 3}) {
        const Volume v = symmetric(8, dim == 2 ? 1 : 8);
        const auto in = save("in.emvol", v);
        const auto out = path("out.emvol").string();
        const CliRun r = run("tta --in " + in + " --cmd cp --dim " + std::to_string(dim) + " --out " + out);
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(load_volume(out), v);
        const std::string expect = dim == 2 ? "8 branches" : "16 branches";
        EXPECT_NE(r.err.find(expect), std::string::npos) << r.err;
        EXPECT_EQ(json::parse(r.out).at("branches"), dim == 2 ? 8 : 16);
    }
}

TEST_F(Cli, TtaFailingPredictorExitsThree) {
    const auto in = save("in.emvol", symmetric(4, 1));
    const CliRun r = run("tta --in " + in + " --cmd false --dim 2 --out " + path("o.emvol").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.err.find("PredictorFailure"), std::string::npos) << r.err;
}

TEST_F(Cli, MedianzRemovesImpulse) {
    Volume m({3, 3, 5}, DType::U8);
    m.u8()[m.index(1, 1, 2)] = 1;
    const auto in = save("m.emvol", m);
    const auto out = path("f.emvol").string();
    ASSERT_EQ(run("medianz --in " + in + " --window 3 --out " + out).code, 0);
    EXPECT_EQ(load_volume(out), Volume({3, 3, 5}, DType::U8));
    const CliRun even = run("medianz --in " + in + " --window 4 --out " + out);
    EXPECT_EQ(even.code, 2);
    EXPECT_NE(even.err.find("EvenWindow"), std::string::npos);
}

TEST_F(Cli, OutputMayNotOverwriteInput) {
    const auto in = save("m.emvol", Volume({3, 3, 5}, DType::U8));
    EXPECT_EQ(run("medianz --in " + in + " --window 3 --out " + in).code, 2);
}

TEST_F(Cli, PerturbGtMatchesCountOracle) {
    const Volume gt = disc(64, 20);
    // 3x3 dilation / erosion by direct neighbourhood scan
    std::uint64_t fg = 0, dil = 0, ero = 0;
    const auto n = static_cast<long>(64);
    auto at = [&](long x, long y) {
        return x >= 0 && y >= 0 && x < n && y < n && gt.u8()[gt.index(x, y, 0)] == 1;
    };
    for (long y = 0; y < n; ++y)
        for (long x = 0; x < n; ++x) {
            bool any = false, all = true;
            for (long dy = -1; dy <= 1; ++dy)
                for (long dx = -1; dx <= 1; ++dx) {
                    any = any || at(x + dx, y + dy);
                    all = all && at(x + dx, y + dy);
                }
            fg += at(x, y);
            dil += any;
            ero += all;
        }
    const auto g = save("disc.emvol", gt);
    const CliRun r = run("perturb-gt --gt " + g + " --radius 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_EQ(j.at("iou_dilated").get<double>(), static_cast<double>(fg) / static_cast<double>(dil));
    EXPECT_EQ(j.at("iou_eroded").get<double>(), static_cast<double>(ero) / static_cast<double>(fg));
}

TEST_F(Cli, SampledExtractionIsReproducible) {
    const auto img = save("img.emvol", ramp({40, 40, 4}));
    const auto gt = save("gt.emvol", disc(40, 10));
    const Volume gt3 = [&] {
        Volume d = disc(40, 10), v({40, 40, 4}, DType::U8);
        for (std::size_t z = 0; z < 4; ++z)
            std::copy(d.u8().begin(), d.u8().end(), v.u8().begin() + static_cast<long>(z * 1600));
        return v;
    }();
    const auto g3 = save("gt3.emvol", gt3);
    const std::string common = "extract --in " + img + " --gt " + g3 + " --patch 8x8x1 --n 20 --prob-fg 0.94 ";
    ASSERT_EQ(run(common + "--seed 7 --out-dir " + path("a").string()).code, 0);
    ASSERT_EQ(run(common + "--seed 7 --out-dir " + path("b").string()).code, 0);
    ASSERT_EQ(run(common + "--seed 8 --out-dir " + path("c").string()).code, 0);
    const auto sa = json::parse(slurp(path("a") / "samples.json"));
    EXPECT_EQ(sa, json::parse(slurp(path("b") / "samples.json")));
    EXPECT_NE(sa.at("samples"), json::parse(slurp(path("c") / "samples.json")).at("samples"));
    EXPECT_EQ(sa.at("samples").size(), 20u);
    EXPECT_EQ(slurp(path("a") / "s000019_gt.emvol"), slurp(path("b") / "s000019_gt.emvol"));

    const CliRun d = run(common + "--seed 7 --discard-fg 0.5 --out-dir " + path("d").string());
    ASSERT_EQ(d.code, 0) << d.err;
    for (const auto& s : json::parse(slurp(path("d") / "samples.json")).at("samples"))
        EXPECT_GE(s.at("fg_fraction").get<double>(), 0.5);
    EXPECT_EQ(run("extract --in " + img + " --gt " + gt + " --patch 8x8 --n 5 --out-dir " + path("e").string()).code,
              2);
}

TEST_F(Cli, SampleConfigIsDeterministic) {
    const std::string space = std::string(EMSEG_CORPUS_DIR) + "/unet2d.sss";
    const CliRun a = run("sample-config --space " + space + " --seed 42");
    const CliRun b = run("sample-config --space " + space + " --seed 42");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_FALSE(a.out.empty());
    EXPECT_EQ(a.out, b.out);
}

TEST_F(Cli, GridLineCountIsProductOfCardinalities) {
    std::ofstream(path("s.sss")) << "# toy\nOptimizer = choice[Adam, SGD, RMSprop]\nEpochs = [10,300,10]\n"
                                    "Batch size = [1,8,x2]\nNormalization = -\n";
    // 3 optimizers, 30 epoch values, batch sizes 1 2 4 8, one not-selected marker
    const std::size_t expected = 3 * 30 * 4 * 1;
    const CliRun r = run("sample-config --grid --space " + path("s.sss").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(static_cast<std::size_t>(std::count(r.out.begin(), r.out.end(), '\n')), expected);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "Optimizer = Adam; Epochs = 10; Batch size = 1; Normalization = -");
}

TEST_F(Cli, GridOnInfiniteSpaceExitsTwo) {
    std::ofstream(path("s.sss")) << "Learning rate = [0.0001, 0.01]\n";
    const CliRun r = run("sample-config --grid --space " + path("s.sss").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("InfiniteSpace"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("eval --gt x.emvol").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    const CliRun r = run("eval --pred nope.emvol --gt nope.emvol");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("IoFailure"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace emseg
