#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dsum/selection.hpp"

using namespace dsum;

namespace {
std::mt19937_64 rng(90210);
double runif() { return double(rng() >> 11) * 0x1.0p-53; }
std::int64_t rint(std::int64_t lo, std::int64_t hi) {
    return lo + std::int64_t(rng() % std::uint64_t(hi - lo + 1));
}

Tile random_tile_1d() {
    int k = int(rint(-2, 2));
    std::int64_t span_t = std::int64_t(8.0 / pow2(k));
    DyadicCube time(1, k, {rint(-span_t, span_t - 1), 0, 0});
    std::int64_t span_f = std::int64_t(16.0 * pow2(k));
    DyadicCube freq(1, -k, {rint(-span_f, span_f - 1), 0, 0});
    return Tile(time, freq);
}

std::vector<Tile> random_tiles(int count) {
    std::vector<Tile> Q;
    while (int(Q.size()) < count) {
        Tile s = random_tile_1d();
        if (std::find(Q.begin(), Q.end(), s) == Q.end()) Q.push_back(s);
    }
    return Q;
}

SampledField random_field(const Grid& g) {
    SampledField f(g);
    for (auto& z : f.v) z = cplx(2.0 * runif() - 1.0, 2.0 * runif() - 1.0);
    return f;
}

struct Scene {
    Grid g = Grid::centered(1, 4, 1024);
    SampledField f;
    CellMask Eprime;
    ChoiceMap N;

    Scene() : f(g), Eprime(g), N(g) {
        f = random_field(g);
        for (auto& b : Eprime.m) b = (runif() < 0.4);
        for (auto& v : N.values) v[0] = 64.0 * (runif() - 0.5);
    }
};
}  // namespace

TEST_CASE("decompose: empty input") {
    Scene sc;
    LayerDecomposition D = decompose({}, sc.f, sc.Eprime, sc.N, 2, 10);
    CHECK(D.layers.empty());
    CHECK(D.all_tiles().empty());
    CHECK(certify(D, {}, sc.f, sc.Eprime, sc.N, 2, 10));
}

TEST_CASE("select_layer: nothing to remove / single heavy tile") {
    Scene sc;
    Tile s(DyadicCube(1, 0, {0, 0, 0}), DyadicCube(1, 0, {2, 0, 0}));
    detail::SelectionContext ctx(sc.f, sc.Eprime, sc.N, 2, 10);

    // thresholds far above the actual values: nothing removed
    std::vector<Tile> P{s};
    double e = ctx.energy_set(P, std::numeric_limits<double>::infinity(), nullptr);
    double m = ctx.mass_set(P, nullptr);
    REQUIRE(e > 0.0);
    int j_hi = 40;
    auto none = select_layer(P, ctx, j_hi);
    CHECK(none.empty());
    CHECK(P.size() == 1);

    // threshold below the energy: the tile leaves as a singleton tree
    int j_lo = int(std::floor(std::log2(e))) - 2;
    auto trees = select_layer(P, ctx, j_lo);
    REQUIRE(trees.size() == 1);
    CHECK(trees[0].top == s);
    CHECK(trees[0].tiles.size() == 1);
    CHECK(P.empty());
    (void)m;
}

TEST_CASE("decompose: random sets satisfy (a)-(e) and certify") {
    for (int it = 0; it < 6; ++it) {
        Scene sc;
        std::vector<Tile> P = random_tiles(10 + int(rint(0, 30)));
        LayerDecomposition D = decompose(P, sc.f, sc.Eprime, sc.N, 2, 10);

        // exact partition into pairwise disjoint layers
        std::vector<Tile> all = D.all_tiles(), want = P;
        std::sort(all.begin(), all.end());
        std::sort(want.begin(), want.end());
        CHECK(all == want);

        const int n = sc.g.dim;
        for (const Layer& L : D.layers) {
            CHECK(L.j <= D.m0);
            auto tiles = L.tiles();
            REQUIRE_FALSE(tiles.empty());
            // (a), (b) with fresh functional evaluations
            CHECK(energy(sc.f, tiles, 2).value <= pow2((L.j + 1) * n) * (1.0 + 1e-12));
            CHECK(mass(tiles, sc.Eprime, sc.N, 2, 10).value <= pow2((2 * L.j + 2) * n) * (1.0 + 1e-12));
            // recorded certificates agree and hold
            CHECK(L.cert.holds());
            CHECK_THAT(L.cert.energy_layer,
                       Catch::Matchers::WithinRel(energy(sc.f, tiles, 2).value, 1e-12));
            // (e): the recorded constant reproduces the top-length sum
            double tops = 0.0;
            for (const Tree& T : L.trees) {
                CHECK(T.valid());
                tops += T.top.time.volume();
            }
            CHECK_THAT(tops, Catch::Matchers::WithinRel(L.cert.tops_length, 1e-12));
            CHECK(tops <= L.cert.C0 * pow2(-2 * L.j * n) * (1.0 + 1e-12));
        }
        CHECK(certify(D, P, sc.f, sc.Eprime, sc.N, 2, 10));
    }
}

TEST_CASE("certify rejects a corrupted decomposition") {
    Scene sc;
    std::vector<Tile> P = random_tiles(20);
    LayerDecomposition D = decompose(P, sc.f, sc.Eprime, sc.N, 2, 10);
    REQUIRE(certify(D, P, sc.f, sc.Eprime, sc.N, 2, 10));

    // drop one tile from one tree: no longer a partition of P
    LayerDecomposition bad = D;
    for (Layer& L : bad.layers)
        for (Tree& T : L.trees)
            if (!T.tiles.empty()) {
                T.tiles.pop_back();
                goto corrupted;
            }
corrupted:
    CHECK_FALSE(certify(bad, P, sc.f, sc.Eprime, sc.N, 2, 10));
}

TEST_CASE("decompose: nested chain lands in the expected first layer") {
    Grid g = Grid::centered(1, 4, 1024);
    Tile s1(DyadicCube(1, 0, {0, 0, 0}), DyadicCube(1, 0, {0, 0, 0}));   // [0,1) x [0,1)
    Tile s2(DyadicCube(1, 1, {0, 0, 0}), DyadicCube(1, -1, {0, 0, 0}));  // [0,2) x [0,1/2)
    Tile s3(DyadicCube(1, 2, {0, 0, 0}), DyadicCube(1, -2, {1, 0, 0}));  // [0,4) x [1/4,1/2)
    REQUIRE(tile_leq(s1, s2));
    REQUIRE(tile_leq(s2, s3));
    std::vector<Tile> P{s1, s2, s3};

    SampledField f = wave_packet_field(s3, g);
    CellMask Eprime(g);  // empty: mass vanishes, energy drives the selection
    ChoiceMap N(g);
    for (auto& v : N.values) v[0] = 0.0;
    LayerDecomposition D = decompose(P, f, Eprime, N, 2, 10);

    double e0 = energy(f, P, 2).value;
    // m0 is the first j with e0 <= 2^{(j+1)n}, i.e. energy exceeds 2^{m0 n}
    CHECK(e0 <= pow2(D.m0 + 1));
    CHECK(e0 > pow2(D.m0));
    REQUIRE_FALSE(D.layers.empty());
    CHECK(D.layers.front().j == D.m0);
    CHECK(certify(D, P, f, Eprime, N, 2, 10));
}

TEST_CASE("tree_sum_estimate: empty E', singleton formula") {
    Scene sc;
    Tile s(DyadicCube(1, 0, {1, 0, 0}), DyadicCube(1, 0, {2, 0, 0}));
    Tree T{{s}, s};

    CellMask empty(sc.g);
    TreeEstimate z = tree_sum_estimate(T, sc.f, empty, sc.N, 2, 10);
    CHECK(z.lhs == 0.0);
    CHECK(z.ratio == 0.0);

    TreeEstimate est = tree_sum_estimate(T, sc.f, sc.Eprime, sc.N, 2, 10);
    DyadicCube w = semitile_freq(s, 2);
    SampledField chi(sc.g);
    for (std::size_t ix = 0; ix < chi.v.size(); ++ix)
        if (sc.Eprime.m[ix] && choice_in_cube(sc.N.values[ix], w)) chi.v[ix] = 1.0;
    double lhs = std::abs(packet_coeff(sc.f, s)) * std::abs(packet_coeff(chi, s));
    CHECK_THAT(est.lhs, Catch::Matchers::WithinRel(lhs, 1e-13));
    double rhs = s.time.volume() * energy(sc.f, {s}, 2).value *
                 mass({s}, sc.Eprime, sc.N, 2, 10).value * lp_norm(sc.f, 2.0);
    CHECK_THAT(est.rhs, Catch::Matchers::WithinRel(rhs, 1e-13));
    if (est.rhs > 0.0) CHECK_THAT(est.ratio, Catch::Matchers::WithinRel(est.lhs / est.rhs, 1e-13));
}

TEST_CASE("layer decomposition JSON export") {
    Scene sc;
    std::vector<Tile> P = random_tiles(12);
    LayerDecomposition D = decompose(P, sc.f, sc.Eprime, sc.N, 2, 10);
    auto j = to_json(D);
    CHECK(j["m0"].get<int>() == D.m0);
    CHECK(j["layers"].size() == D.layers.size());
    if (!D.layers.empty()) {
        CHECK(j["layers"][0]["trees"].size() == D.layers[0].trees.size());
        CHECK(j["layers"][0]["certificates"].contains("C0"));
    }
}
