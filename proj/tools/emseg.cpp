#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "emseg/emvol.hpp"
#include "emseg/metrics.hpp"
#include "emseg/patchkit.hpp"
#include "emseg/postproc.hpp"
#include "emseg/sweep.hpp"
#include "emseg/volcore.hpp"

namespace {

namespace fs = std::filesystem;
using emseg::Error;
using emseg::ErrorCode;
using nlohmann::json;

constexpr int kExitValidation = 2;
constexpr int kExitPredictor = 3;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_atomic(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const fs::path tmp = p.string() + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot rename into " + p.string());
    }
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty())
        std::cout << text;
    else
        write_text_atomic(out_path, text);
}

void require_distinct(const std::string& read, const std::string& write) {
    if (read.empty() || write.empty()) return;
    if (fs::weakly_canonical(read) == fs::weakly_canonical(write))
        invalid("output path " + write + " would overwrite input " + read);
}

std::string score_text(const emseg::Score& s) {
    if (!s) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *s);
    return buf;
}

json score_json(const emseg::Score& s) { return s ? json(*s) : json(nullptr); }

emseg::Dims parse_dims(const std::string& text) {
    std::vector<std::size_t> v;
    std::string cur;
    for (char c : text + "x") {
        if (c == 'x' || c == 'X' || c == ',') {
            if (cur.empty()) invalid("bad extent list '" + text + "'");
            try {
                v.push_back(std::stoul(cur));
            } catch (const std::exception&) {
                invalid("bad extent list '" + text + "'");
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (v.size() == 2) v.push_back(1);
    if (v.size() != 3) invalid("expected XxY or XxYxZ, got '" + text + "'");
    return {v[0], v[1], v[2]};
}

std::string patch_file_name(const emseg::Dims& o) {
    return std::to_string(o.x) + "_" + std::to_string(o.y) + "_" + std::to_string(o.z) + ".emvol";
}

std::vector<emseg::Volume> load_patches(const fs::path& dir, const emseg::PatchLayout& layout) {
    std::vector<emseg::Volume> patches;
    patches.reserve(layout.origins.size());
    for (const auto& o : layout.origins) {
        const fs::path p = dir / patch_file_name(o);
        if (!fs::exists(p)) throw Error(ErrorCode::WrongPatchCount, "missing patch file " + p.string());
        patches.push_back(emseg::load_volume(p));
    }
    return patches;
}

emseg::PatchLayout load_layout(const fs::path& p) { return emseg::layout_from_json(read_text(p)); }

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string pred, gt, layout, mode = "full", unit, out, format = "json";
    double threshold = 0.5;
};

int run_eval(const EvalArgs& a) {
    emseg::EvalOptions o;
    o.threshold = a.threshold;
    o.mode = emseg::parse_mode(a.mode);
    if (!a.unit.empty()) o.unit = emseg::parse_unit(a.unit);
    const emseg::Volume gt = emseg::load_volume(a.gt);

    emseg::IoUReport r;
    if (fs::is_directory(a.pred)) {
        const fs::path layout_path = a.layout.empty() ? fs::path(a.pred) / "layout.json" : fs::path(a.layout);
        const auto layout = load_layout(layout_path);
        const auto patches = load_patches(a.pred, layout);
        r = emseg::evaluate_patches(patches, layout, gt, o);
    } else {
        std::optional<emseg::PatchLayout> layout;
        if (!a.layout.empty()) layout = load_layout(a.layout);
        r = emseg::evaluate(emseg::load_volume(a.pred), gt, o, layout ? &*layout : nullptr);
    }

    if (a.format == "json") {
        emit(emseg::report_to_json(r) + "\n", a.out);
    } else {
        std::ostringstream s;
        s << "mode " << emseg::mode_name(r.mode) << ", unit " << emseg::unit_name(r.unit) << ", " << r.units.size()
          << " units\n";
        s << "tp " << r.counts.tp << "  fp " << r.counts.fp << "  fn " << r.counts.fn << "  tn " << r.counts.tn << "\n";
        s << "iou_fg      " << score_text(r.iou_fg) << "\n";
        s << "iou_bg      " << score_text(r.iou_bg) << "\n";
        s << "iou_overall " << score_text(r.iou_overall) << "\n";
        emit(s.str(), a.out);
    }
    return 0;
}

// ---------------------------------------------------------------- reconstruct

struct ReconstructArgs {
    std::string patches_dir, layout, mode = "mosaic", out, compare;
};

int run_reconstruct(const ReconstructArgs& a) {
    const fs::path layout_path = a.layout.empty() ? fs::path(a.patches_dir) / "layout.json" : fs::path(a.layout);
    const auto layout = load_layout(layout_path);
    const auto patches = load_patches(a.patches_dir, layout);
    emseg::Volume v;
    if (a.mode == "mosaic")
        v = emseg::reconstruct_mosaic(patches, layout);
    else if (a.mode == "overlap50")
        v = emseg::reconstruct_overlap_mean(patches, layout);
    else if (a.mode == "blend")
        v = emseg::reconstruct_blend(patches, layout);
    else
        invalid("unknown reconstruction mode '" + a.mode + "'");
    emseg::save_volume(v, a.out);

    json j;
    j["mode"] = a.mode;
    j["out"] = a.out;
    j["dims"] = {v.dims().x, v.dims().y, v.dims().z};
    j["patches"] = patches.size();
    if (!a.compare.empty()) {
        const emseg::Volume ref = emseg::load_volume(a.compare);
        if (!(ref.dims() == v.dims())) throw Error(ErrorCode::DimMismatch, "comparison volume dims differ");
        double worst = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v.value(i) - ref.value(i)));
        j["max_abs_diff"] = worst;
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- tta

struct TtaArgs {
    std::string in, cmd, out;
    int dim = 2;
    double timeout_s = 600.0;
};

int run_tta(const TtaArgs& a) {
    require_distinct(a.in, a.out);
    const emseg::Volume v = emseg::load_volume(a.in);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000.0));
    const auto r = emseg::tta_ensemble(emseg::subprocess_predictor(a.cmd, timeout), v, a.dim);
    std::cerr << "tta: " << r.branches << " branches\n";
    emseg::save_volume(r.prediction, a.out);
    json j;
    j["dim"] = a.dim;
    j["branches"] = r.branches;
    j["out"] = a.out;
    std::cout << j.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- medianz

struct MedianzArgs {
    std::string in, out, order = "binarize-first";
    int window = 3;
    double threshold = 0.5;
    bool keep_probabilities = false;
};

int run_medianz(const MedianzArgs& a) {
    require_distinct(a.in, a.out);
    const emseg::Volume v = emseg::load_volume(a.in);
    emseg::Volume out;
    if (v.dtype() == emseg::DType::U8 || a.keep_probabilities) {
        out = emseg::median_z_filter(v, a.window);
    } else {
        emseg::ZFilterOrder order;
        if (a.order == "binarize-first")
            order = emseg::ZFilterOrder::BinarizeThenFilter;
        else if (a.order == "filter-first")
            order = emseg::ZFilterOrder::FilterThenBinarize;
        else
            invalid("unknown order '" + a.order + "'");
        out = emseg::z_filtered_labels(v, a.threshold, a.window, order);
    }
    emseg::save_volume(out, a.out);
    return 0;
}

// ---------------------------------------------------------------- perturb-gt

struct PerturbArgs {
    std::string gt, footprint = "2d", format = "json";
    int radius = 1;
};

int run_perturb(const PerturbArgs& a) {
    const emseg::Volume gt = emseg::load_volume(a.gt);
    emseg::Footprint fp;
    if (a.footprint == "2d")
        fp = emseg::Footprint::Slice2D;
    else if (a.footprint == "3d")
        fp = emseg::Footprint::Volume3D;
    else
        invalid("footprint must be 2d or 3d");
    const auto r = emseg::gt_perturbation_check(gt, a.radius, fp);
    if (a.format == "json") {
        json j;
        j["radius"] = a.radius;
        j["footprint"] = a.footprint;
        j["iou_dilated"] = score_json(r.iou_dilated);
        j["iou_eroded"] = score_json(r.iou_eroded);
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << "iou_dilated " << score_text(r.iou_dilated) << "\niou_eroded  " << score_text(r.iou_eroded)
                  << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
    std::string in, gt, patch, overlap = "none", out_dir;
    std::optional<double> discard_fg, prob_fg;
    std::optional<std::size_t> n;
    std::uint64_t seed = 0;
};

int run_extract(const ExtractArgs& a) {
    const emseg::Volume img = emseg::load_volume(a.in);
    std::optional<emseg::Volume> gt;
    if (!a.gt.empty()) {
        gt = emseg::load_volume(a.gt);
        if (!(gt->dims() == img.dims())) throw Error(ErrorCode::DimMismatch, "image and ground truth dims differ");
    }
    const emseg::Dims patch = parse_dims(a.patch);
    const fs::path dir = a.out_dir;
    fs::create_directories(dir);
    json summary;

    if (!a.n) {
        if (a.discard_fg || a.prob_fg) invalid("--discard-fg and --prob-fg apply to sampled extraction (--n)");
        emseg::Overlap ov;
        if (a.overlap == "none")
            ov = emseg::Overlap::None;
        else if (a.overlap == "half")
            ov = emseg::Overlap::Half;
        else
            invalid("overlap must be none or half");
        const auto layout = emseg::plan_grid(img.dims(), patch, ov);
        const auto patches = emseg::extract(img, layout);
        for (std::size_t i = 0; i < patches.size(); ++i)
            emseg::save_volume(patches[i], dir / patch_file_name(layout.origins[i]));
        if (gt) {
            const auto gp = emseg::extract(*gt, layout);
            for (std::size_t i = 0; i < gp.size(); ++i)
                emseg::save_volume(gp[i], dir / "gt" / patch_file_name(layout.origins[i]));
        }
        write_text_atomic(dir / "layout.json", emseg::layout_to_json(layout));
        summary["kind"] = "grid";
        summary["patches"] = patches.size();
    } else {
        if (a.overlap != "none") invalid("--overlap applies to grid extraction");
        emseg::ProbabilityMap map;
        if (a.prob_fg) {
            if (!gt) invalid("--prob-fg needs --gt");
            map = emseg::build_probability_map(*gt, *a.prob_fg);
        } else {
            map = emseg::ProbabilityMap::from_weights(
                emseg::Volume::from_u8(img.dims(), std::vector<std::uint8_t>(img.size(), 1)));
        }
        const auto origins = emseg::sample_patch_origins(map, patch, *a.n, a.seed);
        json samples = json::array();
        std::size_t kept = 0;
        for (std::size_t i = 0; i < origins.size(); ++i) {
            const emseg::PatchLayout one{img.dims(), patch, patch, {0, 0, 0}, emseg::Overlap::None, {origins[i]}};
            emseg::Volume ip = emseg::extract(img, one).front();
            std::optional<emseg::Volume> gp;
            double fg = 0.0;
            if (gt) {
                gp = emseg::extract(*gt, one).front();
                fg = emseg::foreground_fraction(*gp);
            }
            if (a.discard_fg) {
                if (!gt) invalid("--discard-fg needs --gt");
                if (fg < *a.discard_fg) continue;
            }
            char stem[32];
            std::snprintf(stem, sizeof stem, "s%06zu", kept);
            emseg::save_volume(ip, dir / (std::string(stem) + "_img.emvol"));
            if (gp) emseg::save_volume(*gp, dir / (std::string(stem) + "_gt.emvol"));
            json s;
            s["file"] = std::string(stem) + "_img.emvol";
            s["origin"] = {origins[i].x, origins[i].y, origins[i].z};
            if (gt) s["fg_fraction"] = fg;
            samples.push_back(std::move(s));
            ++kept;
        }
        json index;
        index["patch"] = {patch.x, patch.y, patch.z};
        index["seed"] = a.seed;
        index["requested"] = *a.n;
        index["samples"] = std::move(samples);
        write_text_atomic(dir / "samples.json", index.dump(2) + "\n");
        summary["kind"] = "sampled";
        summary["patches"] = kept;
        summary["requested"] = *a.n;
        summary["seed"] = a.seed;
    }
    summary["out_dir"] = a.out_dir;
    std::cout << summary.dump(2) << "\n";
    return 0;
}

// ---------------------------------------------------------------- sample-config

struct SampleArgs {
    std::string space, out, format = "text";
    std::uint64_t seed = 0;
    bool grid = false;
};

std::string one_line(const emseg::sweep::ConfigAssignment& c) {
    std::string s;
    for (const auto& e : c.entries) {
        if (!s.empty()) s += "; ";
        s += e.label + " = " + emseg::sweep::render_expr(e.expr);
    }
    return s;
}

json config_json(const emseg::sweep::ConfigAssignment& c) {
    json j = json::object();
    for (const auto& e : c.entries) j[e.name] = emseg::sweep::render_expr(e.expr);
    return j;
}

int run_sample(const SampleArgs& a) {
    require_distinct(a.space, a.out);
    const auto space = emseg::sweep::parse_space(read_text(a.space));
    std::string text;
    if (a.grid) {
        auto it = emseg::sweep::enumerate_grid(space);
        json all = json::array();
        while (auto c = it.next()) {
            if (a.format == "json")
                all.push_back(config_json(*c));
            else
                text += one_line(*c) + "\n";
        }
        if (a.format == "json") text = all.dump(2) + "\n";
    } else {
        const auto c = emseg::sweep::sample(space, a.seed);
        text = a.format == "json" ? config_json(c).dump(2) + "\n" : emseg::sweep::render_config(c);
    }
    emit(text, a.out);
    return 0;
}

int exit_code_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::PredictorFailure:
        case ErrorCode::PredictorShapeMismatch:
        case ErrorCode::PredictorRangeViolation: return kExitPredictor;
        default: return kExitValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emseg: patch-based EM segmentation toolkit"};
    app.require_subcommand(1);

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "IoU report for a prediction against ground truth");
    eval->add_option("--pred", ev.pred, "probability EMVOL, or a patches directory")->required();
    eval->add_option("--gt", ev.gt, "binary ground-truth EMVOL")->required();
    eval->add_option("--threshold", ev.threshold)->check(CLI::Range(0.0, 1.0));
    eval->add_option("--mode", ev.mode)->check(CLI::IsMember({"full", "per_patch", "mosaic", "overlap50"}));
    eval->add_option("--unit", ev.unit)->check(CLI::IsMember({"slice", "volume"}));
    eval->add_option("--layout", ev.layout);
    eval->add_option("--out", ev.out);
    eval->add_option("--format", ev.format)->check(CLI::IsMember({"json", "text"}));

    ReconstructArgs rc;
    auto* rec = app.add_subcommand("reconstruct", "reassemble a patches directory");
    rec->add_option("--patches-dir", rc.patches_dir)->required();
    rec->add_option("--layout", rc.layout, "defaults to <patches-dir>/layout.json");
    rec->add_option("--mode", rc.mode)->check(CLI::IsMember({"mosaic", "overlap50", "blend"}));
    rec->add_option("--out", rc.out)->required();
    rec->add_option("--compare", rc.compare, "report max abs difference against this EMVOL");

    TtaArgs ta;
    auto* tta = app.add_subcommand("tta", "test-time augmentation through an external predictor");
    tta->add_option("--in", ta.in)->required();
    tta->add_option("--cmd", ta.cmd, "invoked as: <cmd> <input.emvol> <output.emvol>")->required();
    tta->add_option("--dim", ta.dim)->check(CLI::IsMember({2, 3}));
    tta->add_option("--out", ta.out)->required();
    tta->add_option("--timeout", ta.timeout_s, "seconds per predictor call")->check(CLI::PositiveNumber);

    MedianzArgs mz;
    auto* med = app.add_subcommand("medianz", "median filter along z");
    med->add_option("--in", mz.in)->required();
    med->add_option("--window", mz.window);
    med->add_option("--out", mz.out)->required();
    med->add_option("--threshold", mz.threshold)->check(CLI::Range(0.0, 1.0));
    med->add_option("--order", mz.order)->check(CLI::IsMember({"binarize-first", "filter-first"}));
    med->add_flag("--keep-probabilities", mz.keep_probabilities, "filter f32 input without binarizing");

    PerturbArgs pa;
    auto* per = app.add_subcommand("perturb-gt", "IoU of dilated and eroded ground truth");
    per->add_option("--gt", pa.gt)->required();
    per->add_option("--radius", pa.radius);
    per->add_option("--footprint", pa.footprint)->check(CLI::IsMember({"2d", "3d"}));
    per->add_option("--format", pa.format)->check(CLI::IsMember({"json", "text"}));

    ExtractArgs ex;
    auto* ext = app.add_subcommand("extract", "cut a volume into patches");
    ext->add_option("--in", ex.in)->required();
    ext->add_option("--gt", ex.gt);
    ext->add_option("--patch", ex.patch, "XxY or XxYxZ")->required();
    ext->add_option("--overlap", ex.overlap)->check(CLI::IsMember({"none", "half"}));
    ext->add_option("--discard-fg", ex.discard_fg, "minimum ground-truth foreground fraction")
        ->check(CLI::Range(0.0, 1.0));
    ext->add_option("--prob-fg", ex.prob_fg, "foreground mass of the sampling map")->check(CLI::Range(0.0, 1.0));
    ext->add_option("--n", ex.n, "number of sampled patches");
    ext->add_option("--seed", ex.seed);
    ext->add_option("--out-dir", ex.out_dir)->required();

    SampleArgs sa;
    auto* smp = app.add_subcommand("sample-config", "draw a configuration from a search space");
    smp->add_option("--space", sa.space)->required();
    smp->add_option("--seed", sa.seed);
    smp->add_flag("--grid", sa.grid, "print every configuration, one per line");
    smp->add_option("--out", sa.out);
    smp->add_option("--format", sa.format)->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "InvalidArgument: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (eval->parsed()) return run_eval(ev);
        if (rec->parsed()) return run_reconstruct(rc);
        if (tta->parsed()) return run_tta(ta);
        if (med->parsed()) return run_medianz(mz);
        if (per->parsed()) return run_perturb(pa);
        if (ext->parsed()) return run_extract(ex);
        if (smp->parsed()) return run_sample(sa);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "IoFailure: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "InvalidArgument: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
