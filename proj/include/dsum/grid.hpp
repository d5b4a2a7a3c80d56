#ifndef DSUM_GRID_HPP
#define DSUM_GRID_HPP

// Uniform cell-centered grids over a dyadic box, sampled complex fields,
// midpoint quadrature, norms, a radix-2 DFT, and the flat binary / CSV
// field formats.
//
// The box side is a power of two and the cell size h = side / N is a
// (possibly negative) power of two, so every grid cell is itself a dyadic
// cube and all cell/cube geometry is exact.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace dsum {

using cplx = std::complex<double>;

inline bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

struct Grid {
    int dim = 1;
    int log2_side = 4;              // box side = 2^log2_side on every axis
    int points_per_axis = 256;      // power of two
    std::array<double, kMaxDim> lo{};

    Grid() = default;
    Grid(int dim_, int log2_side_, int points_per_axis_, std::array<double, kMaxDim> lo_)
        : dim(dim_), log2_side(log2_side_), points_per_axis(points_per_axis_), lo(lo_) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Grid: bad dim");
        if (!is_pow2(points_per_axis)) throw std::invalid_argument("Grid: N must be a power of two");
        for (int j = 0; j < dim; ++j) {
            double cells = lo[j] / h();
            if (cells != std::floor(cells)) throw std::invalid_argument("Grid: lo must be a multiple of h");
        }
    }

    static Grid centered(int dim, int log2_side, int points_per_axis) {
        std::array<double, kMaxDim> lo{};
        for (int j = 0; j < dim; ++j) lo[j] = -pow2(log2_side - 1);
        return Grid(dim, log2_side, points_per_axis, lo);
    }

    int log2_n() const {
        int l = 0;
        while ((1 << l) < points_per_axis) ++l;
        return l;
    }
    int cell_scale() const { return log2_side - log2_n(); }
    double side() const { return pow2(log2_side); }
    double h() const { return pow2(cell_scale()); }
    double cell_volume() const { return pow2(cell_scale() * dim); }
    std::size_t cells() const {
        std::size_t c = 1;
        for (int j = 0; j < dim; ++j) c *= std::size_t(points_per_axis);
        return c;
    }

    // row-major, axis 0 slowest
    std::size_t index(const std::array<int, kMaxDim>& iv) const {
        std::size_t ix = 0;
        for (int j = 0; j < dim; ++j) ix = ix * points_per_axis + iv[j];
        return ix;
    }
    std::array<int, kMaxDim> coords(std::size_t ix) const {
        std::array<int, kMaxDim> iv{};
        for (int j = dim - 1; j >= 0; --j) {
            iv[j] = int(ix % points_per_axis);
            ix /= points_per_axis;
        }
        return iv;
    }
    double center(int axis, int i) const { return lo[axis] + (i + 0.5) * h(); }
    void cell_center(std::size_t ix, double* x) const {
        auto iv = coords(ix);
        for (int j = 0; j < dim; ++j) x[j] = center(j, iv[j]);
    }

    // the grid cell as a dyadic cube
    DyadicCube cell_cube(std::size_t ix) const {
        auto iv = coords(ix);
        DyadicCube c;
        c.dim = dim;
        c.scale = cell_scale();
        for (int j = 0; j < dim; ++j)
            c.idx[j] = std::int64_t(std::llround(lo[j] / h())) + iv[j];
        return c;
    }

    // cell index range [first, last) intersecting [a, b) on one axis,
    // clipped to the box
    std::pair<int, int> axis_range(int axis, double a, double b) const {
        double ha = (a - lo[axis]) / h();
        double hb = (b - lo[axis]) / h();
        int first = int(std::floor(ha));
        int last = int(std::ceil(hb));
        return {std::max(first, 0), std::min(last, points_per_axis)};
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        if (a.dim != b.dim || a.log2_side != b.log2_side || a.points_per_axis != b.points_per_axis)
            return false;
        for (int j = 0; j < a.dim; ++j)
            if (a.lo[j] != b.lo[j]) return false;
        return true;
    }
};

struct SampledField {
    Grid grid;
    std::vector<cplx> v;

    SampledField() = default;
    explicit SampledField(const Grid& g) : grid(g), v(g.cells(), cplx(0.0, 0.0)) {}
};

struct CellMask {
    Grid grid;
    std::vector<std::uint8_t> m;

    CellMask() = default;
    explicit CellMask(const Grid& g) : grid(g), m(g.cells(), 0) {}

    double measure() const {
        std::size_t c = 0;
        for (auto b : m) c += b;
        return double(c) * grid.cell_volume();
    }
};

struct ChoiceMap {
    Grid grid;
    std::vector<std::array<double, kMaxDim>> values;

    ChoiceMap() = default;
    explicit ChoiceMap(const Grid& g) : grid(g), values(g.cells()) {}
};

struct Box {
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
};

inline SampledField indicator(const Grid& g, const std::vector<Box>& boxes) {
    SampledField f(g);
    for (const Box& b : boxes)
        for (int j = 0; j < g.dim; ++j)
            if (b.lo[j] < g.lo[j] || b.hi[j] > g.lo[j] + g.side())
                throw std::invalid_argument("indicator: box outside grid");
    double x[kMaxDim];
    for (std::size_t ix = 0; ix < f.v.size(); ++ix) {
        g.cell_center(ix, x);
        for (const Box& b : boxes) {
            bool in = true;
            for (int j = 0; j < g.dim; ++j)
                if (!(x[j] >= b.lo[j] && x[j] < b.hi[j])) { in = false; break; }
            if (in) { f.v[ix] = 1.0; break; }
        }
    }
    return f;
}

inline SampledField indicator(const CellMask& mask) {
    SampledField f(mask.grid);
    for (std::size_t ix = 0; ix < f.v.size(); ++ix) f.v[ix] = mask.m[ix] ? 1.0 : 0.0;
    return f;
}

inline double lp_norm(const SampledField& f, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p < 1");
    if (std::isinf(p)) {
        double mx = 0.0;
        for (const cplx& z : f.v) mx = std::max(mx, std::abs(z));
        return mx;
    }
    double s = 0.0;
    for (const cplx& z : f.v) s += std::pow(std::abs(z), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline cplx inner(const SampledField& f, const SampledField& g) {
    if (!(f.grid == g.grid)) throw std::invalid_argument("inner: grid mismatch");
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < f.v.size(); ++i) s += f.v[i] * std::conj(g.v[i]);
    return s * f.grid.cell_volume();
}

inline double mask_integral(const SampledField& f, const CellMask& mask, cplx* out_complex = nullptr) {
    if (!(f.grid == mask.grid)) throw std::invalid_argument("mask_integral: grid mismatch");
    cplx s(0.0, 0.0);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        if (mask.m[i]) s += f.v[i];
    s *= f.grid.cell_volume();
    if (out_complex) *out_complex = s;
    return std::abs(s);
}

// ---- radix-2 DFT (power-of-two lengths only) ----

inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
    std::size_t n = a.size();
    if (!is_pow2(std::int64_t(n))) throw std::invalid_argument("fft: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * std::numbers::pi / double(len) * (inverse ? 1.0 : -1.0);
        cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                cplx u = a[i + j], t = a[i + j + len / 2] * w;
                a[i + j] = u + t;
                a[i + j + len / 2] = u - t;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (cplx& z : a) z /= double(n);
}

// unitary DFT along every axis; used for Parseval checks and the 1-D
// partial-sum operator
inline std::vector<cplx> dft_unitary(const SampledField& f, bool inverse = false) {
    const Grid& g = f.grid;
    std::vector<cplx> a = f.v;
    int N = g.points_per_axis;
    std::size_t total = a.size();
    for (int axis = 0; axis < g.dim; ++axis) {
        std::size_t stride = 1;
        for (int j = axis + 1; j < g.dim; ++j) stride *= std::size_t(N);
        std::vector<cplx> line(N);
        std::size_t outer = total / std::size_t(N);
        for (std::size_t o = 0; o < outer; ++o) {
            std::size_t base = (o / stride) * stride * std::size_t(N) + (o % stride);
            for (int i = 0; i < N; ++i) line[i] = a[base + std::size_t(i) * stride];
            fft_inplace(line, inverse);
            for (int i = 0; i < N; ++i) a[base + std::size_t(i) * stride] = line[i];
        }
    }
    double scale = std::pow(double(N), -0.5 * g.dim);
    if (inverse) scale = 1.0 / scale;
    for (cplx& z : a) z *= scale;
    return a;
}

// ---- flat binary format ----
// header: u64 dim, u64 points_per_axis, then per axis lo, hi as f64,
// then row-major samples (re, im as f64 pairs)

inline void write_field(const SampledField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_field: cannot open " + path);
    std::uint64_t dim = std::uint64_t(f.grid.dim), n = std::uint64_t(f.grid.points_per_axis);
    os.write(reinterpret_cast<const char*>(&dim), 8);
    os.write(reinterpret_cast<const char*>(&n), 8);
    for (int j = 0; j < f.grid.dim; ++j) {
        double lo = f.grid.lo[j], hi = f.grid.lo[j] + f.grid.side();
        os.write(reinterpret_cast<const char*>(&lo), 8);
        os.write(reinterpret_cast<const char*>(&hi), 8);
    }
    for (const cplx& z : f.v) {
        double re = z.real(), im = z.imag();
        os.write(reinterpret_cast<const char*>(&re), 8);
        os.write(reinterpret_cast<const char*>(&im), 8);
    }
}

inline Grid read_grid_header(std::ifstream& is) {
    std::uint64_t dim = 0, n = 0;
    is.read(reinterpret_cast<char*>(&dim), 8);
    is.read(reinterpret_cast<char*>(&n), 8);
    if (!is || dim < 1 || dim > kMaxDim) throw std::runtime_error("bad field header");
    std::array<double, kMaxDim> lo{};
    double side = 0;
    for (std::uint64_t j = 0; j < dim; ++j) {
        double a, b;
        is.read(reinterpret_cast<char*>(&a), 8);
        is.read(reinterpret_cast<char*>(&b), 8);
        lo[j] = a;
        side = b - a;
    }
    int ls = int(std::llround(std::log2(side)));
    if (pow2(ls) != side) throw std::runtime_error("bad field header: side not a power of two");
    return Grid(int(dim), ls, int(n), lo);
}

inline SampledField read_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_field: cannot open " + path);
    SampledField f(read_grid_header(is));
    for (cplx& z : f.v) {
        double re, im;
        is.read(reinterpret_cast<char*>(&re), 8);
        is.read(reinterpret_cast<char*>(&im), 8);
        z = cplx(re, im);
    }
    if (!is) throw std::runtime_error("read_field: truncated file");
    return f;
}

inline void write_choice(const ChoiceMap& c, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_choice: cannot open " + path);
    std::uint64_t dim = std::uint64_t(c.grid.dim), n = std::uint64_t(c.grid.points_per_axis);
    os.write(reinterpret_cast<const char*>(&dim), 8);
    os.write(reinterpret_cast<const char*>(&n), 8);
    for (int j = 0; j < c.grid.dim; ++j) {
        double lo = c.grid.lo[j], hi = c.grid.lo[j] + c.grid.side();
        os.write(reinterpret_cast<const char*>(&lo), 8);
        os.write(reinterpret_cast<const char*>(&hi), 8);
    }
    for (const auto& val : c.values)
        for (int j = 0; j < c.grid.dim; ++j)
            os.write(reinterpret_cast<const char*>(&val[j]), 8);
}

inline ChoiceMap read_choice(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_choice: cannot open " + path);
    ChoiceMap c(read_grid_header(is));
    for (auto& val : c.values)
        for (int j = 0; j < c.grid.dim; ++j)
            is.read(reinterpret_cast<char*>(&val[j]), 8);
    if (!is) throw std::runtime_error("read_choice: truncated file");
    return c;
}

inline void write_csv_1d(const SampledField& f, const std::string& path) {
    if (f.grid.dim != 1) throw std::invalid_argument("write_csv_1d: dim must be 1");
    std::ofstream os(path);
    os << "x,re,im\n";
    os.precision(17);
    for (std::size_t i = 0; i < f.v.size(); ++i)
        os << f.grid.center(0, int(i)) << "," << f.v[i].real() << "," << f.v[i].imag() << "\n";
}

}  // namespace dsum

#endif
