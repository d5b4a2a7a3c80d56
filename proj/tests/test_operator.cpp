#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dsum/dyadic_sum.hpp"

using namespace dsum;

namespace {
std::mt19937_64 rng(424242);
double runif() { return double(rng() >> 11) * 0x1.0p-53; }
std::int64_t rint(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

SampledField random_field(const Grid& g) {
    SampledField f(g);
    for (auto& z : f.v) z = cplx(2.0 * runif() - 1.0, 2.0 * runif() - 1.0);
    return f;
}

// tiles kept well inside the box and below the Nyquist frequency
std::vector<Tile> random_tiles(int dim, int count) {
    std::vector<Tile> D;
    while (int(D.size()) < count) {
        int k = int(rint(dim == 1 ? -1 : 0, 2));
        std::int64_t st = std::int64_t(4.0 / pow2(std::min(k, 2)));
        std::int64_t sf = std::int64_t(4.0 * pow2(k));
        DyadicCube time(dim, k, {0, 0, 0}), freq(dim, -k, {0, 0, 0});
        for (int j = 0; j < dim; ++j) {
            time.idx[j] = rint(-st, st - 1);
            freq.idx[j] = rint(-sf, sf - 1);
        }
        Tile s(time, freq);
        if (std::find(D.begin(), D.end(), s) == D.end()) D.push_back(s);
    }
    return D;
}

ChoiceMap random_choice(const Grid& g, double span) {
    ChoiceMap N(g);
    for (auto& v : N.values)
        for (int j = 0; j < g.dim; ++j) v[j] = span * (2.0 * runif() - 1.0);
    return N;
}

double sup_diff(const SampledField& a, const SampledField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}
}  // namespace

TEST_CASE("apply_Dr: empty tile set gives zero") {
    Grid g = Grid::centered(1, 4, 256);
    TileSystem sys({}, 2, random_choice(g, 8.0), g);
    SampledField out = apply_Dr(sys, random_field(g));
    for (const auto& z : out.v) CHECK(z == cplx(0.0, 0.0));
}

TEST_CASE("TileSystem validation") {
    Grid g = Grid::centered(1, 4, 256);
    ChoiceMap N = random_choice(g, 8.0);
    Tile s(DyadicCube(1, 0, {0, 0, 0}), DyadicCube(1, 0, {2, 0, 0}));
    CHECK_THROWS_AS(TileSystem({s}, 1, N, g), std::invalid_argument);
    CHECK_THROWS_AS(TileSystem({s}, 3, N, g), std::invalid_argument);
    CHECK_THROWS_AS(TileSystem({s, s}, 2, N, g), std::invalid_argument);
    CHECK_THROWS_AS(TileSystem({s}, 2, ChoiceMap(Grid::centered(1, 4, 128)), g),
                    std::invalid_argument);
}

TEST_CASE("apply_Dr: single tile with N on the semi-tile center") {
    Grid g = Grid::centered(1, 4, 512);
    Tile s(DyadicCube(1, 0, {0, 0, 0}), DyadicCube(1, 0, {2, 0, 0}));  // [0,1) x [2,3)
    ChoiceMap N(g);
    DyadicCube w = semitile_freq(s, 2);  // [2.5, 3)
    for (auto& v : N.values) v[0] = w.center(0);

    SampledField f = random_field(g);
    TileSystem sys({s}, 2, N, g);
    SampledField out = apply_Dr(sys, f);

    cplx c = packet_coeff(f, s);
    WavePacket wp(s);
    double x[kMaxDim];
    for (std::size_t ix = 0; ix < out.v.size(); ++ix) {
        g.cell_center(ix, x);
        CHECK(std::abs(out.v[ix] - c * wp.value(x)) < 1e-12);
    }

    // moving N outside the r-th semi-tile deactivates the tile everywhere
    ChoiceMap N2(g);
    for (auto& v : N2.values) v[0] = semitile_freq(s, 1).center(0);
    TileSystem sys2({s}, 2, N2, g);
    SampledField out2 = apply_Dr(sys2, f);
    for (const auto& z : out2.v) CHECK(z == cplx(0.0, 0.0));
}

TEST_CASE("apply_Dr: fast path matches the direct oracle, 1-D") {
    Grid g = Grid::centered(1, 4, 256);
    for (int it = 0; it < 8; ++it) {
        TileSystem sys(random_tiles(1, 25), 2, random_choice(g, 8.0), g);
        SampledField f = random_field(g);
        SampledField fast = apply_Dr(sys, f);
        SampledField slow = apply_Dr(sys, f, true);
        CHECK(sup_diff(fast, slow) < 1e-10);
    }
}

TEST_CASE("apply_Dr: fast path matches the direct oracle, 2-D, all r") {
    Grid g = Grid::centered(2, 3, 32);
    for (int r = 2; r <= 4; ++r) {
        TileSystem sys(random_tiles(2, 12), r, random_choice(g, 4.0), g);
        SampledField f = random_field(g);
        CHECK(sup_diff(apply_Dr(sys, f), apply_Dr(sys, f, true)) < 1e-10);
    }
}

TEST_CASE("apply_Dr is linear in f") {
    Grid g = Grid::centered(1, 4, 256);
    TileSystem sys(random_tiles(1, 15), 2, random_choice(g, 8.0), g);
    SampledField f = random_field(g), h = random_field(g);
    cplx a(0.7, -1.3);
    SampledField comb(g);
    for (std::size_t i = 0; i < comb.v.size(); ++i) comb.v[i] = a * f.v[i] + h.v[i];

    SampledField lhs = apply_Dr(sys, comb);
    SampledField df = apply_Dr(sys, f), dh = apply_Dr(sys, h);
    double m = 0.0;
    for (std::size_t i = 0; i < lhs.v.size(); ++i)
        m = std::max(m, std::abs(lhs.v[i] - (a * df.v[i] + dh.v[i])));
    CHECK(m < 1e-12);
}

TEST_CASE("restricted pairing: tile-by-tile form and triangle inequality") {
    Grid g = Grid::centered(1, 4, 256);
    TileSystem sys(random_tiles(1, 20), 2, random_choice(g, 8.0), g);
    SampledField F = random_field(g);
    CellMask Eprime(g);
    for (auto& b : Eprime.m) b = (runif() < 0.4);

    CHECK(restricted_pairing(sys, F, CellMask(g)) == cplx(0.0, 0.0));

    // the pairing equals sum_s <F,phi_s> conj<chi_s, phi_s> with
    // chi_s = indicator of E' intersect N^{-1}(omega_{s(r)})
    cplx pair = restricted_pairing(sys, F, Eprime);
    cplx direct(0.0, 0.0);
    double tri = 0.0;
    for (const Tile& s : sys.D) {
        DyadicCube w = semitile_freq(s, sys.r);
        SampledField chi(g);
        for (std::size_t ix = 0; ix < chi.v.size(); ++ix)
            if (Eprime.m[ix] && choice_in_cube(sys.N.values[ix], w)) chi.v[ix] = 1.0;
        direct += packet_coeff(F, s) * std::conj(packet_coeff(chi, s));
        tri += bilinear_term(sys, F, Eprime, s);
    }
    CHECK(std::abs(pair - direct) < 1e-10);
    CHECK(std::abs(pair) <= tri * (1.0 + 1e-12) + 1e-12);
}

TEST_CASE("split pairing along an exceptional set") {
    Grid g = Grid::centered(1, 4, 256);
    TileSystem sys(random_tiles(1, 20), 2, random_choice(g, 8.0), g);
    SampledField F = random_field(g);
    CellMask Eprime(g);
    for (auto& b : Eprime.m) b = (runif() < 0.5);

    ExceptionalSet empty_om;
    empty_om.cells = CellMask(g);
    SplitPairing a = split_pairing(sys, F, Eprime, empty_om);
    CHECK(a.inside_count == 0);
    CHECK(a.outside_count == sys.D.size());
    CHECK(a.inside_sum == cplx(0.0, 0.0));

    ExceptionalSet full_om;
    full_om.cells = CellMask(g);
    for (auto& b : full_om.cells.m) b = true;
    SplitPairing b = split_pairing(sys, F, Eprime, full_om);
    CHECK(b.outside_count == 0);
    CHECK(b.outside_bilinear == 0.0);
    CHECK(std::abs(b.inside_sum - restricted_pairing(sys, F, Eprime)) < 1e-12);

    ExceptionalSet half_om;
    half_om.cells = CellMask(g);
    for (std::size_t i = 0; i < half_om.cells.m.size() / 2; ++i) half_om.cells.m[i] = true;
    SplitPairing c = split_pairing(sys, F, Eprime, half_om);
    CHECK(c.inside_count + c.outside_count == sys.D.size());
    CHECK(std::abs(restricted_pairing(sys, F, Eprime)) <=
          std::abs(c.inside_sum) + c.outside_bilinear + 1e-10);
}

TEST_CASE("fft_partial_sum: identity past Nyquist, mean at zero, monotone error") {
    Grid g = Grid::centered(1, 3, 128);  // [-4,4), bin spacing 1/8
    SampledField f = random_field(g);

    SampledField all = fft_partial_sum(f, 0.5 / g.h());
    CHECK(sup_diff(all, f) < 1e-12);

    SampledField dc = fft_partial_sum(f, 0.0);
    cplx mean(0.0, 0.0);
    for (const auto& z : f.v) mean += z;
    mean /= double(f.v.size());
    for (const auto& z : dc.v) CHECK(std::abs(z - mean) < 1e-12);

    // the squared truncation error is a tail sum of |f-hat|^2: non-increasing
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= g.points_per_axis / 2; ++k) {
        SampledField s = fft_partial_sum(f, double(k) / g.side());
        SampledField d = f;
        for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] -= s.v[i];
        double err = lp_norm(d, 2.0);
        CHECK(err <= prev * (1.0 + 1e-12));
        prev = err;
    }
    CHECK(prev < 1e-12);
}

TEST_CASE("carleson_sup dominates every partial sum and |f|") {
    Grid g = Grid::centered(1, 3, 128);
    SampledField f = random_field(g);
    SampledField C = carleson_sup(f);
    for (std::size_t i = 0; i < C.v.size(); ++i)
        CHECK(C.v[i].real() >= std::abs(f.v[i]) - 1e-12);
    for (double Ncut : {0.0, 0.25, 1.0, 3.5}) {
        SampledField s = fft_partial_sum(f, Ncut);
        for (std::size_t i = 0; i < C.v.size(); ++i)
            CHECK(C.v[i].real() >= std::abs(s.v[i]) - 1e-10);
    }
}
