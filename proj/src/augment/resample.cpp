#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "emseg/augment.hpp"
#include "emseg/parallel.hpp"
#include "emseg/patchkit.hpp"
#include "emseg/random.hpp"

namespace emseg {

namespace {

struct Point {
    double x;
    double y;
};

void check_interp(const Volume& v, Interpolation interp) {
    if (interp == Interpolation::Bilinear && v.dtype() == DType::U8)
        throw Error(ErrorCode::InterpolationOnMask, "u8 volumes are label data; use nearest-neighbour sampling");
}

// Resamples every slice through `src`, which maps output (x,y) to source (x,y).
template <class Map>
Volume resample(const Volume& v, Interpolation interp, Map&& src) {
    check_interp(v, interp);
    const Dims& d = v.dims();
    const auto nx = static_cast<std::ptrdiff_t>(d.x);
    const auto ny = static_cast<std::ptrdiff_t>(d.y);
    Volume out(d, v.dtype(), v.spacing());
    v.visit([&](auto in) {
        using T = std::remove_const_t<typename decltype(in)::element_type>;
        auto dst = out.typed<T>();
        parallel_for(d.z, [&](std::size_t z) {
            const std::size_t plane = z * d.x * d.y;
            auto sample = [&](std::ptrdiff_t x, std::ptrdiff_t y) {
                const auto rx = static_cast<std::size_t>(reflect_index(x, nx));
                const auto ry = static_cast<std::size_t>(reflect_index(y, ny));
                return in[plane + ry * d.x + rx];
            };
            for (std::size_t y = 0; y < d.y; ++y)
                for (std::size_t x = 0; x < d.x; ++x) {
                    const Point s = src(static_cast<double>(x), static_cast<double>(y));
                    T value;
                    if (interp == Interpolation::Nearest) {
                        value = sample(static_cast<std::ptrdiff_t>(std::floor(s.x + 0.5)),
                                       static_cast<std::ptrdiff_t>(std::floor(s.y + 0.5)));
                    } else {
                        const double fx = std::floor(s.x), fy = std::floor(s.y);
                        const double ax = s.x - fx, ay = s.y - fy;
                        const auto x0 = static_cast<std::ptrdiff_t>(fx), y0 = static_cast<std::ptrdiff_t>(fy);
                        const double top = (1.0 - ax) * sample(x0, y0) + ax * sample(x0 + 1, y0);
                        const double bottom = (1.0 - ax) * sample(x0, y0 + 1) + ax * sample(x0 + 1, y0 + 1);
                        value = static_cast<T>((1.0 - ay) * top + ay * bottom);
                    }
                    dst[plane + y * d.x + x] = value;
                }
        });
    });
    return out;
}

Point center_of(const Dims& d) {
    return {(static_cast<double>(d.x) - 1.0) / 2.0, (static_cast<double>(d.y) - 1.0) / 2.0};
}

// Exact values at multiples of 90 degrees keep nearest-neighbour rotation lossless there.
void exact_sincos(double degrees, double& s, double& c) {
    const double turns = degrees / 90.0;
    if (turns == std::floor(turns)) {
        const auto q = ((static_cast<long long>(turns) % 4) + 4) % 4;
        static constexpr double kSin[4] = {0.0, 1.0, 0.0, -1.0};
        static constexpr double kCos[4] = {1.0, 0.0, -1.0, 0.0};
        s = kSin[q];
        c = kCos[q];
        return;
    }
    const double rad = degrees * std::numbers::pi / 180.0;
    s = std::sin(rad);
    c = std::cos(rad);
}

std::vector<double> gaussian_kernel(double sigma) {
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

void smooth_2d(std::vector<double>& f, std::size_t nx, std::size_t ny, const std::vector<double>& k) {
    const auto r = static_cast<std::ptrdiff_t>(k.size() / 2);
    std::vector<double> tmp(f.size());
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                const auto xx = reflect_index(static_cast<std::ptrdiff_t>(x) + i, static_cast<std::ptrdiff_t>(nx));
                acc += k[static_cast<std::size_t>(i + r)] * f[y * nx + static_cast<std::size_t>(xx)];
            }
            tmp[y * nx + x] = acc;
        }
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -r; i <= r; ++i) {
                const auto yy = reflect_index(static_cast<std::ptrdiff_t>(y) + i, static_cast<std::ptrdiff_t>(ny));
                acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(yy) * nx + x];
            }
            f[y * nx + x] = acc;
        }
}

}  // namespace

Volume rotate_free(const Volume& v, double degrees, Interpolation interp) {
    double s = 0.0, c = 1.0;
    exact_sincos(degrees, s, c);
    const Point ctr = center_of(v.dims());
    // inverse map: output offset rotated back by -angle (y axis points down)
    return resample(v, interp, [&](double x, double y) {
        const double dx = x - ctr.x, dy = y - ctr.y;
        return Point{ctr.x + dx * c - dy * s, ctr.y + dx * s + dy * c};
    });
}

Volume shift(const Volume& v, double dx_frac, double dy_frac, Interpolation interp) {
    const double tx = dx_frac * static_cast<double>(v.dims().x);
    const double ty = dy_frac * static_cast<double>(v.dims().y);
    return resample(v, interp, [&](double x, double y) { return Point{x - tx, y - ty}; });
}

Volume shear(const Volume& v, double factor, Interpolation interp) {
    const Point ctr = center_of(v.dims());
    return resample(v, interp, [&](double x, double y) { return Point{x - factor * (y - ctr.y), y}; });
}

Volume zoom(const Volume& v, double factor, Interpolation interp) {
    if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "zoom factor must be > 0");
    const Point ctr = center_of(v.dims());
    return resample(v, interp, [&](double x, double y) {
        return Point{ctr.x + (x - ctr.x) / factor, ctr.y + (y - ctr.y) / factor};
    });
}

Volume brightness(const Volume& v, double factor) {
    if (v.dtype() != DType::F32) throw Error(ErrorCode::DtypeMismatch, "brightness applies to f32 intensities");
    if (!(factor >= 0.0)) throw Error(ErrorCode::InvalidArgument, "brightness factor must be >= 0");
    Volume out = v;
    for (auto& f : out.f32()) f = static_cast<float>(std::clamp(static_cast<double>(f) * factor, 0.0, 1.0));
    return out;
}

Volume median_filter_2d(const Volume& v, int size) {
    if (size < 1 || size % 2 == 0) throw Error(ErrorCode::BadKernelSize, "median size must be odd and >= 1");
    if (size == 1) return v;
    const Dims& d = v.dims();
    const std::ptrdiff_t r = size / 2;
    Volume out(d, v.dtype(), v.spacing());
    v.visit([&](auto in) {
        using T = std::remove_const_t<typename decltype(in)::element_type>;
        auto dst = out.typed<T>();
        parallel_for(d.z, [&](std::size_t z) {
            std::vector<T> window(static_cast<std::size_t>(size * size));
            for (std::size_t y = 0; y < d.y; ++y)
                for (std::size_t x = 0; x < d.x; ++x) {
                    std::size_t w = 0;
                    for (std::ptrdiff_t j = -r; j <= r; ++j)
                        for (std::ptrdiff_t i = -r; i <= r; ++i) {
                            const auto xx = reflect_index(static_cast<std::ptrdiff_t>(x) + i,
                                                          static_cast<std::ptrdiff_t>(d.x));
                            const auto yy = reflect_index(static_cast<std::ptrdiff_t>(y) + j,
                                                          static_cast<std::ptrdiff_t>(d.y));
                            window[w++] = in[v.index(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy), z)];
                        }
                    auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
                    std::nth_element(window.begin(), mid, window.end());
                    dst[v.index(x, y, z)] = *mid;
                }
        });
    });
    return out;
}

DisplacementField elastic_displacement_field(std::size_t nx, std::size_t ny, const ElasticParams& p) {
    if (!(p.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "elastic sigma must be > 0");
    if (!(p.alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "elastic alpha must be >= 0");
    DisplacementField f;
    f.nx = nx;
    f.ny = ny;
    f.dx.resize(nx * ny);
    f.dy.resize(nx * ny);
    Rng rng(p.seed);
    for (auto& u : f.dx) u = uniform_real(rng, -1.0, 1.0);
    for (auto& u : f.dy) u = uniform_real(rng, -1.0, 1.0);
    const auto k = gaussian_kernel(p.sigma);
    smooth_2d(f.dx, nx, ny, k);
    smooth_2d(f.dy, nx, ny, k);
    for (auto& u : f.dx) u *= p.alpha;
    for (auto& u : f.dy) u *= p.alpha;
    return f;
}

Volume elastic_deform(const Volume& v, const ElasticParams& p, Interpolation interp) {
    check_interp(v, interp);
    if (p.alpha == 0.0) {
        if (!(p.sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "elastic sigma must be > 0");
        return v;
    }
    const auto f = elastic_displacement_field(v.dims().x, v.dims().y, p);
    return resample(v, interp, [&](double x, double y) {
        const std::size_t i = static_cast<std::size_t>(y) * f.nx + static_cast<std::size_t>(x);
        return Point{x + f.dx[i], y + f.dy[i]};
    });
}

}  // namespace emseg
