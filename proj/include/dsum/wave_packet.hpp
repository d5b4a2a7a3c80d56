#ifndef DSUM_WAVE_PACKET_HPP
#define DSUM_WAVE_PACKET_HPP

// The mother bump phi and the tile wave packets phi_s.
//
// phi-hat is the tensor cutoff prod_j rho(xi_j) with
// rho(u) = exp(-1/(1-(10u)^2)) on |u| < 1/10, zero outside, so phi is
// real, even and Schwartz.  The 1-D spatial profile phi1 (inverse
// Fourier transform of rho) is tabulated once on a dense grid and
// evaluated by cubic interpolation; packets are truncated beyond
// trunc_radius * |I_s|^{1/n} from the tile center.

#include <cmath>
#include <mutex>
#include <numbers>

#include "grid.hpp"

namespace dsum {

// default spatial truncation radius, in units of |I_s|^{1/n}; the
// discarded relative L^2 tail at 128 is ~1.1e-9
constexpr double kDefaultTruncRadius = 128.0;
constexpr double kTableRadius = 256.0;  // "truncation off" evaluates out to here

inline double bump_rho(double u) {
    double t = 10.0 * u;
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t));
}

inline double bump_hat(const double* xi, int dim) {
    double p = 1.0;
    for (int j = 0; j < dim; ++j) p *= bump_rho(xi[j]);
    return p;
}

namespace detail {

// dense table of phi1(u) = int rho(xi) e^{2 pi i u xi} dxi for |u| <= kTableRadius
class MotherTable {
  public:
    static const MotherTable& instance() {
        static MotherTable table;
        return table;
    }

    static constexpr int kLogStep = -8;  // table spacing 2^-8
    double step() const { return pow2(kLogStep); }

    // cubic (Catmull-Rom) interpolation; zero beyond the table
    double phi1(double u) const {
        double a = std::abs(u);
        double t = a / step();
        std::size_t i = std::size_t(t);
        if (i + 2 >= vals_.size()) return 0.0;
        double f = t - double(i);
        double pm1 = i == 0 ? vals_[1] : vals_[i - 1];  // even symmetry at u=0
        double p0 = vals_[i], p1 = vals_[i + 1], p2 = vals_[i + 2];
        double a0 = -0.5 * pm1 + 1.5 * p0 - 1.5 * p1 + 0.5 * p2;
        double a1 = pm1 - 2.5 * p0 + 2.0 * p1 - 0.5 * p2;
        double a2 = -0.5 * pm1 + 0.5 * p1;
        return ((a0 * f + a1) * f + a2) * f + p0;
    }

    // exact continuum L2 norm of phi1 via Plancherel
    double l2_per_axis() const { return l2_; }

    // relative L2 mass of phi1 beyond radius R (from the table)
    double l2_tail_fraction(double R) const {
        std::size_t i = std::min(vals_.size() - 1, std::size_t(R / step()));
        return tail_[i] / tail_[0];
    }

  private:
    MotherTable() {
        // periodized synthesis: span 2048 in space, frequency spacing 1/2048
        const int log_span = 11;
        const double span = pow2(log_span);
        const std::size_t np = std::size_t(1) << (log_span - kLogStep);  // 2^19
        const double dxi = 1.0 / span;
        std::vector<cplx> a(np, cplx(0.0, 0.0));
        int kmax = int(0.1 / dxi) + 1;
        for (int k = -kmax; k <= kmax; ++k) {
            double r = bump_rho(k * dxi);
            if (r == 0.0) continue;
            std::size_t slot = std::size_t((k + std::int64_t(np)) % std::int64_t(np));
            a[slot] += r * dxi;
        }
        fft_inplace(a, true);
        for (cplx& z : a) z *= double(np);
        std::size_t count = std::size_t(kTableRadius / step()) + 3;
        vals_.resize(count);
        for (std::size_t i = 0; i < count; ++i) vals_[i] = a[i].real();

        double s = 0.0;
        const int m = 100001;
        for (int i = 0; i < m; ++i) {
            double xi = -0.1 + 0.2 * (i + 0.5) / m;
            double r = bump_rho(xi);
            s += r * r;
        }
        l2_ = std::sqrt(s * 0.2 / m);

        // reverse cumulative sum of phi1^2 for tail fractions
        tail_.resize(count, 0.0);
        double acc = 0.0;
        for (std::size_t i = count; i-- > 0;) {
            acc += 2.0 * vals_[i] * vals_[i] * step();  // both signs of u
            tail_[i] = acc;
        }
    }

    std::vector<double> vals_;
    std::vector<double> tail_;
    double l2_ = 0.0;
};

}  // namespace detail

inline double mother_phi1(double u) { return detail::MotherTable::instance().phi1(u); }
inline double mother_l2_per_axis() { return detail::MotherTable::instance().l2_per_axis(); }
inline double mother_l2(int dim) { return std::pow(mother_l2_per_axis(), dim); }
inline double truncation_tail_fraction(double trunc_radius) {
    return detail::MotherTable::instance().l2_tail_fraction(trunc_radius);
}

// phi on a grid, synthesized from the frequency bins xi = k/side inside the
// bump support.  With this bin set the grid quadrature of phi equals
// bump_hat(0) exactly.
inline SampledField synthesize_mother(const Grid& g, int min_bins_per_axis = 64) {
    double dxi = 1.0 / g.side();
    int kmax = int(std::floor(0.1 / dxi));
    if (bump_rho(kmax * dxi) == 0.0) --kmax;
    int bins = 2 * kmax + 1;
    if (bins < min_bins_per_axis)
        throw std::invalid_argument("synthesize_mother: insufficient frequency resolution");
    int nyq = g.points_per_axis / 2;
    if (kmax >= nyq) throw std::invalid_argument("synthesize_mother: grid too coarse");

    std::vector<double> profile(g.points_per_axis, 0.0);
    for (int i = 0; i < g.points_per_axis; ++i) {
        double x = g.center(0, i);
        double s = bump_rho(0.0);
        for (int k = 1; k <= kmax; ++k)
            s += 2.0 * bump_rho(k * dxi) * std::cos(2.0 * std::numbers::pi * k * dxi * x);
        profile[i] = s * dxi;
    }
    // per-axis profiles coincide when the lo offsets do; recompute otherwise
    SampledField f(g);
    std::vector<std::vector<double>> axis_profiles(g.dim);
    for (int j = 0; j < g.dim; ++j) {
        if (g.lo[j] == g.lo[0]) {
            axis_profiles[j] = profile;
            continue;
        }
        axis_profiles[j].resize(g.points_per_axis);
        for (int i = 0; i < g.points_per_axis; ++i) {
            double x = g.lo[j] + (i + 0.5) * g.h();
            double s = bump_rho(0.0);
            for (int k = 1; k <= kmax; ++k)
                s += 2.0 * bump_rho(k * dxi) * std::cos(2.0 * std::numbers::pi * k * dxi * x);
            axis_profiles[j][i] = s * dxi;
        }
    }
    for (std::size_t ix = 0; ix < f.v.size(); ++ix) {
        auto iv = f.grid.coords(ix);
        double p = 1.0;
        for (int j = 0; j < g.dim; ++j) p *= axis_profiles[j][iv[j]];
        f.v[ix] = p;
    }
    return f;
}

struct WavePacket {
    Tile tile;
    std::array<double, kMaxDim> time_center{};
    std::array<double, kMaxDim> mod_freq{};  // c(omega_{s(1)})
    double scale_len = 1.0;                  // |I_s|^{1/n}
    double amp = 1.0;                        // |I_s|^{-1/2}
    double trunc_radius = kDefaultTruncRadius;

    WavePacket() = default;
    WavePacket(const Tile& s, double trunc = kDefaultTruncRadius) : tile(s), trunc_radius(trunc) {
        int n = s.dim();
        DyadicCube w1 = semitile_freq(s, 1);
        for (int j = 0; j < n; ++j) {
            time_center[j] = s.time.center(j);
            mod_freq[j] = w1.center(j);
        }
        scale_len = s.time.side();
        amp = std::pow(s.time.volume(), -0.5);
    }

    cplx value(const double* x) const {
        int n = tile.dim();
        double p = amp;
        double phase = 0.0;
        for (int j = 0; j < n; ++j) {
            double u = (x[j] - time_center[j]) / scale_len;
            if (std::abs(u) > trunc_radius) return cplx(0.0, 0.0);
            p *= mother_phi1(u);
            phase += mod_freq[j] * x[j];
        }
        phase *= 2.0 * std::numbers::pi;
        return p * cplx(std::cos(phase), std::sin(phase));
    }

    // cell index ranges of the (truncated) support on a grid
    std::array<std::pair<int, int>, kMaxDim> support(const Grid& g) const {
        std::array<std::pair<int, int>, kMaxDim> r{};
        for (int j = 0; j < g.dim; ++j)
            r[j] = g.axis_range(j, time_center[j] - trunc_radius * scale_len,
                                time_center[j] + trunc_radius * scale_len);
        return r;
    }
};

inline SampledField wave_packet_field(const Tile& s, const Grid& g,
                                      double trunc = kDefaultTruncRadius) {
    // Nyquist check on the modulation frequency
    WavePacket wp(s, trunc);
    for (int j = 0; j < g.dim; ++j)
        if (std::abs(wp.mod_freq[j]) >= 0.5 / g.h())
            throw std::invalid_argument("wave_packet: modulation beyond grid Nyquist");
    SampledField f(g);
    auto rng = wp.support(g);
    double x[kMaxDim];
    std::array<int, kMaxDim> iv{};
    // iterate the support box
    std::size_t total = 1;
    for (int j = 0; j < g.dim; ++j) {
        if (rng[j].second <= rng[j].first) return f;
        total *= std::size_t(rng[j].second - rng[j].first);
    }
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (int j = g.dim - 1; j >= 0; --j) {
            int w = rng[j].second - rng[j].first;
            iv[j] = rng[j].first + int(rem % std::size_t(w));
            rem /= std::size_t(w);
        }
        for (int j = 0; j < g.dim; ++j) x[j] = g.center(j, iv[j]);
        f.v[g.index(iv)] = wp.value(x);
    }
    return f;
}

// <f, phi_s> by midpoint quadrature over the truncated support
inline cplx packet_coeff(const SampledField& f, const Tile& s,
                         double trunc = kDefaultTruncRadius) {
    WavePacket wp(s, trunc);
    const Grid& g = f.grid;
    auto rng = wp.support(g);
    std::size_t total = 1;
    for (int j = 0; j < g.dim; ++j) {
        if (rng[j].second <= rng[j].first) return cplx(0.0, 0.0);
        total *= std::size_t(rng[j].second - rng[j].first);
    }
    cplx acc(0.0, 0.0);
    double x[kMaxDim];
    std::array<int, kMaxDim> iv{};
    for (std::size_t c = 0; c < total; ++c) {
        std::size_t rem = c;
        for (int j = g.dim - 1; j >= 0; --j) {
            int w = rng[j].second - rng[j].first;
            iv[j] = rng[j].first + int(rem % std::size_t(w));
            rem /= std::size_t(w);
        }
        for (int j = 0; j < g.dim; ++j) x[j] = g.center(j, iv[j]);
        acc += f.v[g.index(iv)] * std::conj(wp.value(x));
    }
    return acc * g.cell_volume();
}

}  // namespace dsum

#endif
