#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dsum/cz.hpp"

using namespace dsum;

namespace {
std::mt19937_64 rng(5150);
double runif() { return double(rng() >> 11) * 0x1.0p-53; }
std::int64_t rint(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

// random union of dyadic-aligned boxes well inside [-8, 8)
SampledField random_indicator(const Grid& g) {
    std::vector<Box> boxes;
    int nb = 1 + int(rint(0, 3));
    for (int i = 0; i < nb; ++i) {
        double a = -6.0 + 0.125 * double(rint(0, 80));
        double len = 0.125 * double(rint(1, 16));
        boxes.push_back(Box{{a}, {std::min(a + len, 6.0)}});
    }
    return indicator(g, boxes);
}

// a 2-tree chain with frequencies near 0 (top [0,8) x [3/8,1/2))
std::vector<Tile> chain_tree() {
    Tile t(DyadicCube(1, 3, {0, 0, 0}), DyadicCube(1, -3, {3, 0, 0}));
    Tile s2(DyadicCube(1, 2, {0, 0, 0}), DyadicCube(1, -2, {1, 0, 0}));
    Tile s1(DyadicCube(1, 1, {0, 0, 0}), DyadicCube(1, -1, {0, 0, 0}));
    return {s1, s2, t};
}
}  // namespace

TEST_CASE("whitney_split: sizes, parent escape, vacuous sentinel") {
    Grid g = Grid::centered(1, 4, 1024);
    SampledField F = indicator(g, {Box{{-4.0}, {-1.0}}, Box{{1.0}, {1.25}}});
    ExceptionalSet om = exceptional_set(F, 6.5, 2.0, 0.8);
    REQUIRE_FALSE(om.whitney.empty());

    DyadicCube I_t(1, 1, {2, 0, 0});  // [4, 6): away from Omega
    WhitneyCubes W = whitney_split(om, I_t);
    REQUIRE_FALSE(W.vacuous);
    REQUIRE_FALSE(W.cubes.empty());
    double covered = 0.0;
    for (const DyadicCube& J : W.cubes) {
        CHECK(J.volume() <= I_t.volume());
        covered += J.volume();
    }
    CHECK_THAT(covered, Catch::Matchers::WithinRel(om.measure(), 1e-12));

    // a top buried inside Omega has no admissible x0
    DyadicCube inside(1, -2, {-12, 0, 0});  // [-3, -2.75)
    bool all_in = true;
    auto r = g.axis_range(0, inside.lower(0), inside.upper(0));
    for (int i = r.first; i < r.second; ++i) all_in = all_in && om.cells.m[std::size_t(i)];
    if (all_in) CHECK(whitney_split(om, inside).vacuous);
}

TEST_CASE("cz_split: reconstruction, mean zero, support, bounds") {
    Grid g = Grid::centered(1, 4, 2048);
    for (int it = 0; it < 8; ++it) {
        SampledField F = random_indicator(g);
        double Fm = lp_norm(F, 1.0);
        if (Fm == 0.0) continue;
        DyadicCube I_t(1, 0, {int(rint(4, 6)), 0, 0});
        double q = 1.5, c = 0.45;
        CZOutput out = cz_split(F, I_t, q, c);
        if (out.vacuous) continue;

        // chi_{F cap 3I_t} reference
        SampledField chi3(g);
        double x[1];
        for (std::size_t ix = 0; ix < F.v.size(); ++ix) {
            g.cell_center(ix, x);
            if (F.v[ix].real() != 0.0 && std::abs(x[0] - I_t.center(0)) < 1.5 * I_t.side())
                chi3.v[ix] = 1.0;
        }
        // g + sum b_k reconstructs exactly
        SampledField recon = out.good;
        for (const SampledField& b : out.bad)
            for (std::size_t ix = 0; ix < recon.v.size(); ++ix) recon.v[ix] += b.v[ix];
        double err = 0.0;
        for (std::size_t ix = 0; ix < recon.v.size(); ++ix)
            err = std::max(err, std::abs(recon.v[ix] - chi3.v[ix]));
        CHECK(err <= 1e-12);

        for (std::size_t k = 0; k < out.bad.size(); ++k) {
            const DyadicCube& J = out.cubes[k];
            // support inside J_k
            for (std::size_t ix = 0; ix < out.bad[k].v.size(); ++ix) {
                if (out.bad[k].v[ix] == cplx(0.0, 0.0)) continue;
                g.cell_center(ix, x);
                CHECK((x[0] >= J.lower(0) && x[0] < J.upper(0)));
            }
            // mean zero
            CHECK(out.bounds[k].mean <= 1e-10 * std::sqrt(J.volume()));
            // capture and L1 bounds
            CHECK(out.bounds[k].cap_measure <= out.bounds[k].cap_bound * (1.0 + 1e-12));
            CHECK(out.bounds[k].b1_norm <= out.bounds[k].b1_bound * (1.0 + 1e-12));
            if (out.bounds[k].small) CHECK(out.bounds[k].parent_escape);
        }
        // good part bounds (n = 1 constants from the capture bound)
        CHECK(out.g_inf <= 4.0 * out.level + 1e-12);
        CHECK(out.g_l1 <= 6.0 * out.level * I_t.volume() + 1e-12);

        // off union of J_k the good part equals chi_{F cap 3I_t}
        for (std::size_t ix = 0; ix < recon.v.size(); ++ix) {
            g.cell_center(ix, x);
            bool in_cube = false;
            for (const DyadicCube& J : out.cubes)
                if (x[0] >= J.lower(0) && x[0] < J.upper(0)) { in_cube = true; break; }
            if (!in_cube) CHECK(out.good.v[ix] == chi3.v[ix]);
        }
    }
}

TEST_CASE("cz_split: empty Omega and empty F degenerate routes") {
    Grid g = Grid::centered(1, 4, 1024);
    SampledField F = indicator(g, {Box{{0.0}, {1.0}}});
    DyadicCube I_t(1, 0, {2, 0, 0});
    // c large: level >= 1 >= sup M, Omega empty
    CZOutput out = cz_split(F, I_t, 2.0, 2.0);
    CHECK_FALSE(out.vacuous);
    CHECK(out.cubes.empty());
    double x[1];
    for (std::size_t ix = 0; ix < out.good.v.size(); ++ix) {
        g.cell_center(ix, x);
        double want = (F.v[ix].real() != 0.0 && std::abs(x[0] - I_t.center(0)) < 1.5) ? 1.0 : 0.0;
        CHECK(out.good.v[ix].real() == want);
    }

    SampledField none = indicator(g, {});
    CZOutput z = cz_split(none, I_t, 2.0, 0.5);
    CHECK(z.cubes.empty());
    CHECK(lp_norm(z.good, 1.0) == 0.0);

    // top inside F: every cell of I_t has M = 1 > level, vacuous
    DyadicCube inside(1, -1, {0, 0, 0});  // [0, 1/2) inside F
    CZOutput v = cz_split(F, inside, 1.5, 0.2);
    CHECK(v.vacuous);
}

TEST_CASE("bad_packet_bounds: identities and measured constant") {
    Grid g = Grid::centered(1, 4, 2048);
    auto tiles = chain_tree();
    SampledField F = random_indicator(g);
    if (lp_norm(F, 1.0) == 0.0) F = indicator(g, {Box{{-2.0}, {-1.0}}});
    DyadicCube I_t = tiles.back().time;
    CZOutput out = cz_split(F, I_t, 1.5, 0.45);
    if (out.vacuous || out.cubes.empty()) {
        SUCCEED("degenerate CZ, covered elsewhere");
        return;
    }
    double Fq = std::pow(lp_norm(F, 1.0), 1.0 / 1.5);
    int gamma = 10;
    double Cg = 0.0;
    for (std::size_t k = 0; k < out.cubes.size(); ++k)
        for (const Tile& s : tiles) {
            PacketBounds pb = bad_packet_bounds(out.bad[k], out.cubes[k], s, Fq, gamma);
            // geometric-mean identity
            if (pb.bound_j2 > 0.0)
                CHECK_THAT(pb.bound_gm * pb.bound_gm, Catch::Matchers::WithinRel(pb.bound_j2 * pb.bound_flat, 1e-12));
            // d = 0 reduces the flat bound to Fq |I_s|^{1/2}
            if (pb.d == 0.0) CHECK_THAT(pb.bound_flat, Catch::Matchers::WithinRel(Fq * std::sqrt(s.time.volume()), 1e-13));
            double m = std::min(pb.bound_j2, pb.bound_flat);
            if (m > 0.0) Cg = std::max(Cg, pb.actual / m);
        }
    CHECK(std::isfinite(Cg));
    CHECK(Cg < 100.0);  // measured C_gamma stays O(1)-O(10) on tree tiles
}

TEST_CASE("case_classify: examples, equivalence, counting") {
    DyadicCube I_s(1, 0, {0, 0, 0});  // [0,1)
    CHECK(case_classify(I_s, I_s) == CZCase::A);
    CHECK(case_classify(DyadicCube(1, -1, {1, 0, 0}), I_s) == CZCase::A);   // [1/2,1)
    CHECK(case_classify(DyadicCube(1, 0, {1, 0, 0}), I_s) == CZCase::A);    // [1,2) in 3I_s
    CHECK(case_classify(DyadicCube(1, 2, {1, 0, 0}), I_s) == CZCase::B);    // [4,8)
    CHECK(case_classify(DyadicCube(1, 1, {-1, 0, 0}), I_s) == CZCase::C);   // [-2,0)
    CHECK_THROWS_AS(case_classify(DyadicCube(1, 1, {0, 0, 0}), I_s), std::logic_error);  // [0,2) contains I_s

    // at most 2^n - 1 = 1 case-(c) cube can exist in a disjoint family
    int c_count = 0;
    for (int k = 1; k <= 3; ++k)
        for (std::int64_t m = -6; m <= 6; ++m) {
            DyadicCube J(1, k, {m, 0, 0});
            if (contains(J, I_s) || contains(I_s, J)) continue;
            if (case_classify(J, I_s) == CZCase::C && J.lower(0) == 0.0) ++c_count;  // right side
        }
    CHECK(c_count == 0);  // no right-side case (c) for [0,1): dyadic alignment forbids it
    c_count = 0;
    for (int k = 1; k <= 3; ++k)
        for (std::int64_t m = -6; m <= 6; ++m) {
            DyadicCube J(1, k, {m, 0, 0});
            if (contains(J, I_s) || contains(I_s, J)) continue;
            if (case_classify(J, I_s) == CZCase::C) ++c_count;
        }
    // the case-(c) cubes all touch at 0 from the left; any disjoint
    // (Whitney) family contains at most one of them
    CHECK(c_count >= 1);
    double touch = 0.0;
    for (int k = 1; k <= 3; ++k)
        for (std::int64_t m = -6; m <= 6; ++m) {
            DyadicCube J(1, k, {m, 0, 0});
            if (contains(J, I_s) || contains(I_s, J)) continue;
            if (case_classify(J, I_s) == CZCase::C) {
                CHECK(J.upper(0) == 0.0);
                touch += 1.0;
            }
        }
    CHECK(touch == double(c_count));
}

TEST_CASE("shell count fact: near cubes sit inside the dilated top") {
    Grid g = Grid::centered(1, 4, 2048);
    SampledField F = random_indicator(g);
    if (lp_norm(F, 1.0) == 0.0) F = indicator(g, {Box{{-3.0}, {-2.0}}});
    DyadicCube I_t(1, 0, {5, 0, 0});
    CZOutput out = cz_split(F, I_t, 1.5, 0.45);
    if (out.vacuous) return;
    double lt = I_t.side();
    for (int l = 1; l <= 4; ++l) {
        double half = std::ldexp(lt, l + 1);  // half-width of 2^{l+2} I_t
        for (std::size_t k = 0; k < out.cubes.size(); ++k) {
            if (out.bounds[k].dist > std::ldexp(lt, l)) continue;
            const DyadicCube& J = out.cubes[k];
            CHECK(J.lower(0) >= I_t.center(0) - half);
            CHECK(J.upper(0) <= I_t.center(0) + half);
        }
    }
}

TEST_CASE("aggregate tree bounds: cases, far part, good-part Bessel") {
    Grid g = Grid::centered(1, 4, 2048);
    auto tiles = chain_tree();
    DyadicCube I_t = tiles.back().time;
    SampledField F = indicator(g, {Box{{-5.0}, {-3.5}}, Box{{1.0}, {1.5}}});
    double q = 1.5, c = 0.45;
    CZOutput out = cz_split(F, I_t, q, c);
    REQUIRE_FALSE(out.vacuous);
    double F2q = std::pow(lp_norm(F, 1.0), 2.0 / q);

    // per-case aggregate
    for (CZCase tag : {CZCase::A, CZCase::B, CZCase::C}) {
        double sum = 0.0;
        for (const Tile& s : tiles) {
            cplx acc(0.0, 0.0);
            for (std::size_t k = 0; k < out.cubes.size(); ++k)
                if (case_classify(out.cubes[k], s.time) == tag) acc += packet_coeff(out.bad[k], s);
            sum += std::norm(acc);
        }
        double C = sum / (F2q * I_t.volume());
        CHECK(std::isfinite(C));
        CHECK(C < 50.0);
    }

    // far part
    SampledField far(g);
    double x[1];
    for (std::size_t ix = 0; ix < F.v.size(); ++ix) {
        g.cell_center(ix, x);
        if (F.v[ix].real() != 0.0 && !(std::abs(x[0] - I_t.center(0)) < 1.5 * I_t.side()))
            far.v[ix] = 1.0;
    }
    double far_sum = 0.0;
    for (const Tile& s : tiles) far_sum += std::norm(packet_coeff(far, s));
    CHECK(far_sum <= 50.0 * I_t.volume() * F2q);

    // good-part Bessel
    double bessel = 0.0;
    for (const Tile& s : tiles) bessel += std::norm(packet_coeff(out.good, s));
    double g2 = lp_norm(out.good, 2.0);
    if (g2 > 0.0) CHECK(bessel <= 5.0 * g2 * g2);

    // JSON export sanity
    auto j = to_json(out);
    CHECK(j["cubes"].size() == out.cubes.size());
    CHECK(j["level"].get<double>() == out.level);
}
