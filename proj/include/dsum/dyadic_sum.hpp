#ifndef DSUM_DYADIC_SUM_HPP
#define DSUM_DYADIC_SUM_HPP

// The maximal dyadic sum operator D_r, the restricted pairing of a tile
// system against (chi_F, E'), the inside/outside split along an
// exceptional set, and the 1-D sharp partial-sum comparison operator.

#include <map>
#include <vector>

#include "functionals.hpp"
#include "maximal.hpp"
#include "wave_packet.hpp"

namespace dsum {

struct TileSystem {
    std::vector<Tile> D;
    int r = 2;
    ChoiceMap N;
    Grid grid;

    TileSystem(std::vector<Tile> tiles, int r_, ChoiceMap N_, const Grid& g)
        : D(std::move(tiles)), r(r_), N(std::move(N_)), grid(g) {
        if (!(N.grid == grid)) throw std::invalid_argument("TileSystem: choice grid mismatch");
        if (r < 2 || r > (1 << grid.dim)) throw std::invalid_argument("TileSystem: r out of range");
        for (const Tile& s : D)
            if (s.dim() != grid.dim) throw std::invalid_argument("TileSystem: tile dim mismatch");
        // distinct tiles give, per time-cube class D_J, pairwise disjoint
        // frequency cubes, hence the at-most-one-active-tile property
        std::vector<Tile> sorted = D;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("TileSystem: duplicate tiles");
    }
};

// D_r(f)(x) = sum over s with N(x) in omega_{s(r)} of <f, phi_s> phi_s(x)
inline SampledField apply_Dr(const TileSystem& sys, const SampledField& f, bool oracle = false) {
    const Grid& g = sys.grid;
    if (!(f.grid == g)) throw std::invalid_argument("apply_Dr: field grid mismatch");
    const int n = g.dim;
    SampledField out(g);
    if (sys.D.empty()) return out;

    std::vector<cplx> coef(sys.D.size());
    std::vector<WavePacket> wp(sys.D.size());
    for (std::size_t i = 0; i < sys.D.size(); ++i) {
        coef[i] = packet_coeff(f, sys.D[i]);
        wp[i] = WavePacket(sys.D[i]);
    }

    if (oracle) {
        // direct full sum with the per-cell membership test
        double x[kMaxDim];
        for (std::size_t i = 0; i < sys.D.size(); ++i) {
            DyadicCube w = semitile_freq(sys.D[i], sys.r);
            auto rng = wp[i].support(g);
            std::size_t total = 1;
            bool empty = false;
            for (int j = 0; j < n; ++j) {
                if (rng[j].second <= rng[j].first) empty = true;
                total *= std::size_t(std::max(0, rng[j].second - rng[j].first));
            }
            if (empty) continue;
            std::array<int, kMaxDim> iv{};
            for (std::size_t c = 0; c < total; ++c) {
                std::size_t rem = c;
                for (int j = n - 1; j >= 0; --j) {
                    int wdt = rng[j].second - rng[j].first;
                    iv[j] = rng[j].first + int(rem % std::size_t(wdt));
                    rem /= std::size_t(wdt);
                }
                std::size_t ix = g.index(iv);
                if (!choice_in_cube(sys.N.values[ix], w)) continue;
                g.cell_center(ix, x);
                out.v[ix] += coef[i] * wp[i].value(x);
            }
        }
        return out;
    }

    // fast path: group by time scale; per cell the containing dyadic
    // frequency cube of N(x) at the child scale selects the unique
    // admissible omega_{s(r)}, then the tiles carrying that frequency cube
    std::map<int, std::map<std::array<std::int64_t, kMaxDim>, std::vector<std::size_t>>> by_scale;
    for (std::size_t i = 0; i < sys.D.size(); ++i) {
        std::array<std::int64_t, kMaxDim> key{};
        for (int j = 0; j < n; ++j) key[j] = sys.D[i].freq.idx[j];
        by_scale[sys.D[i].time.scale][key].push_back(i);
    }
    double x[kMaxDim];
    for (std::size_t ix = 0; ix < out.v.size(); ++ix) {
        const auto& nv = sys.N.values[ix];
        bool have_x = false;
        for (const auto& [k, groups] : by_scale) {
            // child cube of N(x) at scale -k-1 and its r-index
            std::array<std::int64_t, kMaxDim> pidx{};
            int ri = 1;
            for (int j = 0; j < n; ++j) {
                std::int64_t m = std::int64_t(std::floor(std::ldexp(nv[j], k + 1)));
                pidx[j] = shift_down(m, 1);
                ri += int(m - 2 * pidx[j]) << (n - 1 - j);
            }
            if (ri != sys.r) continue;
            auto it = groups.find(pidx);
            if (it == groups.end()) continue;
            if (!have_x) {
                g.cell_center(ix, x);
                have_x = true;
            }
            for (std::size_t i : it->second) out.v[ix] += coef[i] * wp[i].value(x);
        }
    }
    return out;
}

// integral of D_r(chi_F) over the cells of E'
inline cplx restricted_pairing(const TileSystem& sys, const SampledField& F, const CellMask& Eprime) {
    SampledField d = apply_Dr(sys, F);
    cplx acc(0.0, 0.0);
    for (std::size_t ix = 0; ix < d.v.size(); ++ix)
        if (Eprime.m[ix]) acc += d.v[ix];
    return acc * sys.grid.cell_volume();
}

// the absolute bilinear term for one tile
inline double bilinear_term(const TileSystem& sys, const SampledField& F, const CellMask& Eprime,
                            const Tile& s) {
    DyadicCube w = semitile_freq(s, sys.r);
    SampledField chi(sys.grid);
    for (std::size_t ix = 0; ix < chi.v.size(); ++ix)
        if (Eprime.m[ix] && choice_in_cube(sys.N.values[ix], w)) chi.v[ix] = 1.0;
    return std::abs(packet_coeff(F, s)) * std::abs(packet_coeff(chi, s));
}

struct SplitPairing {
    cplx inside_sum{0.0, 0.0};     // tiles with I_s inside Omega
    double outside_bilinear = 0.0;  // absolute bilinear sum over the rest
    std::size_t inside_count = 0, outside_count = 0;
};

inline SplitPairing split_pairing(const TileSystem& sys, const SampledField& F,
                                  const CellMask& Eprime, const ExceptionalSet& omega) {
    const Grid& g = sys.grid;
    detail::MaskCounts counts(omega.cells);
    auto inside_omega = [&](const DyadicCube& I) {
        double lo[kMaxDim], hi[kMaxDim];
        for (int j = 0; j < g.dim; ++j) { lo[j] = I.lower(j); hi[j] = I.upper(j); }
        std::array<int, kMaxDim> a{}, b{};
        if (!detail::cell_range(g, lo, hi, a, b)) return false;  // leaves the box
        double total = 1.0;
        for (int j = 0; j < g.dim; ++j) total *= double(b[j] - a[j]);
        return counts.count(a, b) == total;
    };

    std::vector<Tile> in, outt;
    for (const Tile& s : sys.D) (inside_omega(s.time) ? in : outt).push_back(s);
    SplitPairing sp;
    sp.inside_count = in.size();
    sp.outside_count = outt.size();
    if (!in.empty()) {
        TileSystem si(in, sys.r, sys.N, g);
        sp.inside_sum = restricted_pairing(si, F, Eprime);
    }
    for (const Tile& s : outt) sp.outside_bilinear += bilinear_term(sys, F, Eprime, s);
    return sp;
}

// ---- 1-D sharp partial-sum comparison operator ----

// S_N f: sharp Fourier cutoff to |xi| <= Ncut via the DFT
inline SampledField fft_partial_sum(const SampledField& f, double Ncut) {
    if (f.grid.dim != 1) throw std::invalid_argument("fft_partial_sum: dim must be 1");
    const int N = f.grid.points_per_axis;
    auto spec = dft_unitary(f);
    for (int k = 0; k < N; ++k) {
        int kk = k < N / 2 ? k : k - N;
        double xi = double(kk) / f.grid.side();
        if (std::abs(xi) > Ncut) spec[std::size_t(k)] = cplx(0.0, 0.0);
    }
    SampledField cut = f;
    cut.v = spec;
    SampledField out = f;
    out.v = dft_unitary(cut, true);
    return out;
}

// C f = max over the N-grid of |S_N f|; the default grid visits every DFT
// bin frequency, which is exact for band-limited discretizations
inline SampledField carleson_sup(const SampledField& f, std::vector<double> n_grid = {}) {
    if (f.grid.dim != 1) throw std::invalid_argument("carleson_sup: dim must be 1");
    if (n_grid.empty())
        for (int k = 0; k <= f.grid.points_per_axis / 2; ++k)
            n_grid.push_back(double(k) / f.grid.side());
    SampledField out(f.grid);
    for (double Ncut : n_grid) {
        SampledField s = fft_partial_sum(f, Ncut);
        for (std::size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = std::max(out.v[i].real(), std::abs(s.v[i]));
    }
    return out;
}

}  // namespace dsum

#endif
