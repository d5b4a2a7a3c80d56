#ifndef DSUM_MAXIMAL_HPP
#define DSUM_MAXIMAL_HPP

// Uncentered Hardy-Littlewood maximal function over all cell-aligned
// axis-parallel cubes, the exceptional set Omega with its Whitney cover,
// the q-selection rule, and the dilation shell families F_k.

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "grid.hpp"
#include "json.hpp"

namespace dsum {

namespace detail {

// out[i] = max of v[j] over window positions j in [i-w+1, i] clipped to
// [0, L-1], L = N-w+1; monotone-deque sliding maximum
inline void cover_max(const std::vector<double>& v, int w, int N, std::vector<double>& out) {
    const int L = N - w + 1;
    std::deque<int> dq;
    out.assign(std::size_t(N), 0.0);
    for (int i = 0; i < N; ++i) {
        if (i < L) {
            while (!dq.empty() && v[std::size_t(dq.back())] <= v[std::size_t(i)]) dq.pop_back();
            dq.push_back(i);
        }
        while (dq.front() < i - w + 1) dq.pop_front();
        out[std::size_t(i)] = v[std::size_t(dq.front())];
    }
}

}  // namespace detail

// Exact supremum of averages over every cube whose faces lie on grid
// lines and which fits inside the box. With zero extension of f, cubes
// leaving the box never beat a translate that stays inside, so this is
// the full uncentered cell-aligned maximal function.
inline SampledField hl_maximal(const SampledField& f) {
    const Grid& g = f.grid;
    const int N = g.points_per_axis;
    std::vector<double> val(f.v.size());
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        if (f.v[i].imag() != 0.0 || f.v[i].real() < 0.0)
            throw std::invalid_argument("hl_maximal: input must be real and nonnegative");
        val[i] = f.v[i].real();
    }
    SampledField out(g);
    // width-1 windows are the cell values themselves; seeding with them
    // avoids prefix-sum rounding and guarantees M f >= f exactly
    std::vector<double> best = val;

    if (g.dim == 1) {
        std::vector<double> pre(std::size_t(N) + 1, 0.0);
        for (int i = 0; i < N; ++i) pre[std::size_t(i) + 1] = pre[std::size_t(i)] + val[std::size_t(i)];
        std::vector<double> wsum, cov;
        for (int w = 1; w <= N; ++w) {
            const int L = N - w + 1;
            wsum.assign(std::size_t(L), 0.0);
            for (int j = 0; j < L; ++j) wsum[std::size_t(j)] = pre[std::size_t(j + w)] - pre[std::size_t(j)];
            detail::cover_max(wsum, w, N, cov);
            for (int i = 0; i < N; ++i)
                best[std::size_t(i)] = std::max(best[std::size_t(i)], cov[std::size_t(i)] / double(w));
        }
    } else if (g.dim == 2) {
        // summed-area table: sat[i][j] = sum over cells < (i, j)
        std::vector<double> sat(std::size_t(N + 1) * std::size_t(N + 1), 0.0);
        auto S = [&](int i, int j) -> double& { return sat[std::size_t(i) * std::size_t(N + 1) + std::size_t(j)]; };
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                S(i + 1, j + 1) = val[std::size_t(i) * std::size_t(N) + std::size_t(j)] + S(i, j + 1) + S(i + 1, j) - S(i, j);
        std::vector<double> wsum, row, cov;
        std::vector<double> stage(std::size_t(N) * std::size_t(N));
        for (int w = 1; w <= N; ++w) {
            const int L = N - w + 1;
            // window sums at top-left (j0, j1), then cover-max along axis 1
            row.assign(std::size_t(L), 0.0);
            for (int j0 = 0; j0 < L; ++j0) {
                for (int j1 = 0; j1 < L; ++j1)
                    row[std::size_t(j1)] = S(j0 + w, j1 + w) - S(j0, j1 + w) - S(j0 + w, j1) + S(j0, j1);
                detail::cover_max(row, w, N, cov);
                for (int i1 = 0; i1 < N; ++i1) stage[std::size_t(j0) * std::size_t(N) + std::size_t(i1)] = cov[std::size_t(i1)];
            }
            // cover-max along axis 0 per column
            wsum.assign(std::size_t(L), 0.0);
            for (int i1 = 0; i1 < N; ++i1) {
                for (int j0 = 0; j0 < L; ++j0) wsum[std::size_t(j0)] = stage[std::size_t(j0) * std::size_t(N) + std::size_t(i1)];
                detail::cover_max(wsum, w, N, cov);
                for (int i0 = 0; i0 < N; ++i0) {
                    std::size_t ix = std::size_t(i0) * std::size_t(N) + std::size_t(i1);
                    best[ix] = std::max(best[ix], cov[std::size_t(i0)] / (double(w) * double(w)));
                }
            }
        }
    } else {
        throw std::invalid_argument("hl_maximal: dim must be 1 or 2");
    }
    for (std::size_t i = 0; i < best.size(); ++i) out.v[i] = best[i];
    return out;
}

// q-selection: strictly inside [1, p) when |F| <= |E|, q = infinity when
// |F| > |E|
inline double choose_q(double p, double ratio) {
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("choose_q: need 1 < p < inf");
    if (!(ratio > 0.0)) throw std::invalid_argument("choose_q: ratio must be positive");
    if (ratio <= 1.0) return 0.5 * (1.0 + p);
    return std::numeric_limits<double>::infinity();
}

// ---- cell-count integral image ----

namespace detail {

struct MaskCounts {
    Grid grid;
    std::vector<double> sat;  // cumulative along every axis, size (N+1)^dim

    explicit MaskCounts(const CellMask& mask) : grid(mask.grid) {
        const int N = grid.points_per_axis;
        const int M = N + 1;
        if (grid.dim == 1) {
            sat.assign(std::size_t(M), 0.0);
            for (int i = 0; i < N; ++i) sat[std::size_t(i) + 1] = sat[std::size_t(i)] + double(mask.m[std::size_t(i)]);
        } else if (grid.dim == 2) {
            sat.assign(std::size_t(M) * std::size_t(M), 0.0);
            auto S = [&](int i, int j) -> double& { return sat[std::size_t(i) * std::size_t(M) + std::size_t(j)]; };
            for (int i = 0; i < N; ++i)
                for (int j = 0; j < N; ++j)
                    S(i + 1, j + 1) = double(mask.m[std::size_t(i) * std::size_t(N) + std::size_t(j)]) + S(i, j + 1) + S(i + 1, j) - S(i, j);
        } else {
            throw std::invalid_argument("MaskCounts: dim must be 1 or 2");
        }
    }

    // number of set cells with per-axis index in [a[j], b[j])
    double count(const std::array<int, kMaxDim>& a, const std::array<int, kMaxDim>& b) const {
        const int M = grid.points_per_axis + 1;
        if (grid.dim == 1) return sat[std::size_t(b[0])] - sat[std::size_t(a[0])];
        auto S = [&](int i, int j) { return sat[std::size_t(i) * std::size_t(M) + std::size_t(j)]; };
        return S(b[0], b[1]) - S(a[0], b[1]) - S(b[0], a[1]) + S(a[0], a[1]);
    }
};

// index range [a, b) of the cells meeting a half-open real box; returns
// false when the box leaves the grid (all coordinates here are dyadic,
// so the divisions are exact)
inline bool cell_range(const Grid& g, const double* lo, const double* hi,
                       std::array<int, kMaxDim>& a, std::array<int, kMaxDim>& b) {
    for (int j = 0; j < g.dim; ++j) {
        double fa = (lo[j] - g.lo[j]) / g.h();
        double fb = (hi[j] - g.lo[j]) / g.h();
        long ia = long(std::floor(fa)), ib = long(std::ceil(fb));
        if (ia < 0 || ib > g.points_per_axis) return false;
        a[j] = int(ia);
        b[j] = int(ib);
    }
    return true;
}

}  // namespace detail

// maximal dyadic cubes whose every cell lies in the mask, found top-down
// from the coarsest dyadic cubes tiling the box
inline std::vector<DyadicCube> maximal_dyadic_cubes(const CellMask& mask) {
    const Grid& g = mask.grid;
    detail::MaskCounts counts(mask);
    // coarsest scale whose aligned cubes tile the box
    int k_top = g.log2_side;
    for (int j = 0; j < g.dim; ++j)
        while (k_top > g.cell_scale() && std::floor(g.lo[j] / pow2(k_top)) * pow2(k_top) != g.lo[j]) --k_top;

    std::vector<DyadicCube> out;
    auto cells_of = [&](const DyadicCube& c, std::array<int, kMaxDim>& a, std::array<int, kMaxDim>& b) {
        double lo[kMaxDim], hi[kMaxDim];
        for (int j = 0; j < g.dim; ++j) { lo[j] = c.lower(j); hi[j] = c.upper(j); }
        return detail::cell_range(g, lo, hi, a, b);
    };
    std::vector<DyadicCube> stack;
    std::int64_t per_axis = std::int64_t(g.side() / pow2(k_top));
    std::array<std::int64_t, kMaxDim> base{};
    for (int j = 0; j < g.dim; ++j) base[j] = std::int64_t(std::floor(g.lo[j] / pow2(k_top)));
    std::array<std::int64_t, kMaxDim> off{};
    for (;;) {
        DyadicCube c;
        c.dim = g.dim;
        c.scale = k_top;
        for (int j = 0; j < g.dim; ++j) c.idx[j] = base[j] + off[j];
        stack.push_back(c);
        int j = g.dim - 1;
        while (j >= 0 && ++off[j] == per_axis) off[j--] = 0;
        if (j < 0) break;
    }
    while (!stack.empty()) {
        DyadicCube c = stack.back();
        stack.pop_back();
        std::array<int, kMaxDim> a{}, b{};
        if (!cells_of(c, a, b)) continue;
        double total = 1.0, set = counts.count(a, b);
        for (int j = 0; j < g.dim; ++j) total *= double(b[j] - a[j]);
        if (set == 0.0) continue;
        if (set == total) {
            out.push_back(c);
        } else if (c.scale > g.cell_scale()) {
            for (const DyadicCube& ch : children(c)) stack.push_back(ch);
        }
    }
    std::sort(out.begin(), out.end(), [](const DyadicCube& x, const DyadicCube& y) {
        if (x.scale != y.scale) return x.scale > y.scale;
        for (int j = 0; j < x.dim; ++j)
            if (x.idx[j] != y.idx[j]) return x.idx[j] < y.idx[j];
        return false;
    });
    return out;
}

struct ExceptionalSet {
    double q = 1.0;
    double threshold = 0.0;
    CellMask cells;
    std::vector<DyadicCube> whitney;

    double measure() const { return cells.measure(); }
};

// Omega = { M chi_F > kappa (2|F|/|E|)^{1/q} } with its Whitney cover
inline ExceptionalSet exceptional_set(const SampledField& F, double E_measure, double p, double kappa) {
    if (!(E_measure > 0.0)) throw std::invalid_argument("exceptional_set: |E| must be positive");
    for (const cplx& z : F.v)
        if (z != cplx(0.0, 0.0) && z != cplx(1.0, 0.0))
            throw std::invalid_argument("exceptional_set: F must be an indicator");
    double Fm = lp_norm(F, 1.0);
    ExceptionalSet omega;
    omega.cells = CellMask(F.grid);
    if (Fm == 0.0) {
        omega.q = 0.5 * (1.0 + p);
        omega.threshold = 0.0;
        return omega;
    }
    double ratio = Fm / E_measure;
    omega.q = choose_q(p, ratio);
    double inv_q = std::isinf(omega.q) ? 0.0 : 1.0 / omega.q;
    omega.threshold = kappa * std::pow(2.0 * ratio, inv_q);
    SampledField M = hl_maximal(F);
    for (std::size_t i = 0; i < M.v.size(); ++i)
        omega.cells.m[i] = M.v[i].real() > omega.threshold ? 1 : 0;
    omega.whitney = maximal_dyadic_cubes(omega.cells);
    return omega;
}

inline nlohmann::json to_json(const ExceptionalSet& omega) {
    nlohmann::json j;
    j["q"] = std::isfinite(omega.q) ? nlohmann::json(omega.q) : nlohmann::json("infinity");
    j["threshold"] = omega.threshold;
    j["measure"] = omega.measure();
    j["whitney"] = nlohmann::json::array();
    for (const DyadicCube& c : omega.whitney) j["whitney"].push_back(to_json(c));
    return j;
}

// ---- shell families ----

struct ShellFamily {
    int k = 0;
    std::vector<DyadicCube> cubes;    // F_k
    std::vector<DyadicCube> maximal;  // F_k^*: maximal under inclusion
};

// is 2^k J (dilated about the center of J) entirely inside the mask?
// cells outside the grid box count as not in Omega
inline bool dilate_in_mask(const DyadicCube& J, int k, const CellMask& mask,
                           const detail::MaskCounts& counts) {
    const Grid& g = mask.grid;
    double half = std::ldexp(J.side(), k - 1);
    double lo[kMaxDim], hi[kMaxDim];
    for (int j = 0; j < g.dim; ++j) {
        double c = J.center(j);
        lo[j] = c - half;
        hi[j] = c + half;
    }
    std::array<int, kMaxDim> a{}, b{};
    if (!detail::cell_range(g, lo, hi, a, b)) return false;
    double total = 1.0;
    for (int j = 0; j < g.dim; ++j) total *= double(b[j] - a[j]);
    return counts.count(a, b) == total;
}

// assign each candidate cube J <= Omega to its family F_k (the unique k
// with 2^k J inside Omega and 2^{k+1} J not), for k = 0..k_max
inline std::vector<ShellFamily> shell_families(const std::vector<DyadicCube>& candidates,
                                               const ExceptionalSet& omega, int k_max) {
    std::vector<ShellFamily> fams(std::size_t(k_max) + 1);
    for (int k = 0; k <= k_max; ++k) fams[std::size_t(k)].k = k;
    detail::MaskCounts counts(omega.cells);
    for (const DyadicCube& J : candidates) {
        if (!dilate_in_mask(J, 0, omega.cells, counts)) continue;  // J itself not inside Omega
        for (int k = 0; k <= k_max; ++k) {
            if (dilate_in_mask(J, k, omega.cells, counts) && !dilate_in_mask(J, k + 1, omega.cells, counts)) {
                fams[std::size_t(k)].cubes.push_back(J);
                break;
            }
        }
    }
    for (ShellFamily& f : fams)
        for (const DyadicCube& J : f.cubes) {
            bool dominated = false;
            for (const DyadicCube& K : f.cubes)
                if (!(K == J) && contains(K, J)) { dominated = true; break; }
            if (!dominated) f.maximal.push_back(J);
        }
    return fams;
}

}  // namespace dsum

#endif
