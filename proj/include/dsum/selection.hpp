#ifndef DSUM_SELECTION_HPP
#define DSUM_SELECTION_HPP

// Greedy layer selection P = union_{j <= m0} P_j with the certificate
// set (a)-(e): per-layer energy/mass bounds, residual bounds, and the
// top-length count.

#include <map>
#include <vector>

#include "functionals.hpp"

namespace dsum {

namespace detail {

// deterministic tie-break for tree tops: frequency center in coordinate
// lex order, then time center, then scale
inline bool top_less(const Tile& a, const Tile& b) {
    for (int j = 0; j < a.dim(); ++j) {
        if (a.freq.center(j) != b.freq.center(j)) return a.freq.center(j) < b.freq.center(j);
    }
    for (int j = 0; j < a.dim(); ++j) {
        if (a.time.center(j) != b.time.center(j)) return a.time.center(j) < b.time.center(j);
    }
    return a.time.scale < b.time.scale;
}

// caches the per-tile quantities that selection re-evaluates many times
struct SelectionContext {
    const SampledField& f;
    const CellMask& Eprime;
    const ChoiceMap& N;
    int r;
    int gamma;
    double nf;
    std::map<Tile, double> c2;
    std::map<Tile, double> mint;

    SelectionContext(const SampledField& f_, const CellMask& E_, const ChoiceMap& N_, int r_, int g_)
        : f(f_), Eprime(E_), N(N_), r(r_), gamma(g_), nf(lp_norm(f_, 2.0)) {
        if (nf == 0.0) throw std::invalid_argument("selection: f must be nonzero");
    }

    double coeff2(const Tile& s) {
        auto it = c2.find(s);
        if (it == c2.end()) it = c2.emplace(s, std::norm(packet_coeff(f, s))).first;
        return it->second;
    }
    double mass_int(const Tile& u) {
        auto it = mint.find(u);
        if (it == mint.end()) it = mint.emplace(u, mass_integral(u, Eprime, N, r, gamma)).first;
        return it->second;
    }

    // energy over Q with the cached coefficients; also reports every top
    // whose r-tree value exceeds `thresh`
    double energy_set(const std::vector<Tile>& Q, double thresh, std::vector<Tile>* over) {
        double best = 0.0;
        for (const Tile& t : Q) {
            DyadicCube wt = semitile_freq(t, r);
            double sum = 0.0;
            for (const Tile& s : Q)
                if (tile_leq(s, t) && contains(semitile_freq(s, r), wt)) sum += coeff2(s);
            double val = std::sqrt(sum / t.time.volume()) / nf;
            best = std::max(best, val);
            if (over && val > thresh) over->push_back(t);
        }
        return best;
    }

    double mass_set(const std::vector<Tile>& Q, Tile* witness) {
        double best = 0.0;
        for (const Tile& u : Q) {
            double v = mass_int(u);
            if (v > best) {
                best = v;
                if (witness) *witness = u;
            }
        }
        return best;
    }
};

// remove every tile <= top from Q and return them as a tree
inline Tree extract_tree(std::vector<Tile>& Q, const Tile& top) {
    Tree T;
    T.top = top;
    std::vector<Tile> keep;
    for (const Tile& s : Q)
        (tile_leq(s, top) ? T.tiles : keep).push_back(s);
    Q.swap(keep);
    return T;
}

}  // namespace detail

struct LayerCertificate {
    double energy_layer = 0.0, energy_bound = 0.0;      // (a)
    double mass_layer = 0.0, mass_bound = 0.0;          // (b)
    double residual_energy = 0.0, residual_energy_bound = 0.0;  // (c)
    double residual_mass = 0.0, residual_mass_bound = 0.0;      // (d)
    double tops_length = 0.0, C0 = 0.0;                 // (e): tops_length <= C0 2^{-2jn}

    bool holds() const {
        return energy_layer <= energy_bound && mass_layer <= mass_bound &&
               residual_energy <= residual_energy_bound && residual_mass <= residual_mass_bound;
    }
};

struct Layer {
    int j = 0;
    std::vector<Tree> trees;
    LayerCertificate cert;

    std::vector<Tile> tiles() const {
        std::vector<Tile> out;
        for (const Tree& T : trees) out.insert(out.end(), T.tiles.begin(), T.tiles.end());
        return out;
    }
};

struct LayerDecomposition {
    int m0 = 0;
    std::vector<Layer> layers;  // descending j starting at m0

    std::vector<Tile> all_tiles() const {
        std::vector<Tile> out;
        for (const Layer& L : layers) {
            auto t = L.tiles();
            out.insert(out.end(), t.begin(), t.end());
        }
        return out;
    }
};

// one induction step: mass pass then energy pass, leaving the remainder
// with energy <= 2^{jn} and mass <= 2^{2jn}
inline std::vector<Tree> select_layer(std::vector<Tile>& P_rem, detail::SelectionContext& ctx, int j) {
    const int n = ctx.f.grid.dim;
    const double e_thresh = pow2(j * n);
    const double m_thresh = pow2(2 * j * n);
    std::vector<Tree> trees;
    std::size_t guard = P_rem.size() + 1;

    while (!P_rem.empty()) {
        Tile u;
        if (!(ctx.mass_set(P_rem, &u) > m_thresh)) break;
        if (guard-- == 0) throw std::logic_error("select_layer: mass pass failed to terminate");
        trees.push_back(detail::extract_tree(P_rem, u));
    }
    guard = P_rem.size() + 1;
    while (!P_rem.empty()) {
        std::vector<Tile> over;
        ctx.energy_set(P_rem, e_thresh, &over);
        if (over.empty()) break;
        if (guard-- == 0) throw std::logic_error("select_layer: energy pass failed to terminate");
        Tile top = *std::min_element(over.begin(), over.end(), detail::top_less);
        trees.push_back(detail::extract_tree(P_rem, top));
    }
    return trees;
}

inline LayerDecomposition decompose(const std::vector<Tile>& P, const SampledField& f,
                                    const CellMask& Eprime, const ChoiceMap& N, int r, int gamma) {
    detail::SelectionContext ctx(f, Eprime, N, r, gamma);
    const int n = f.grid.dim;
    LayerDecomposition out;
    std::vector<Tile> rem = P;
    if (rem.empty()) return out;

    double e0 = ctx.energy_set(rem, std::numeric_limits<double>::infinity(), nullptr);
    double m0val = ctx.mass_set(rem, nullptr);
    int j = -64;
    while (j < 64 && !(e0 <= pow2((j + 1) * n) && m0val <= pow2((2 * j + 2) * n))) ++j;
    out.m0 = j;

    // enough headroom to descend past denormal-scale functional values
    const int layer_cap = 1500;
    for (int step = 0; !rem.empty(); --j, ++step) {
        if (step >= layer_cap) throw std::logic_error("decompose: layer cap exceeded");
        Layer L;
        L.j = j;
        double e_before = ctx.energy_set(rem, std::numeric_limits<double>::infinity(), nullptr);
        double m_before = ctx.mass_set(rem, nullptr);
        if (e_before == 0.0 && m_before == 0.0) {
            // zero-functional remainder: every tile is its own tree
            for (const Tile& s : rem) L.trees.push_back(Tree{{s}, s});
            rem.clear();
        } else {
            L.trees = select_layer(rem, ctx, j);
        }
        if (L.trees.empty()) continue;

        auto tiles = L.tiles();
        L.cert.energy_layer = ctx.energy_set(tiles, std::numeric_limits<double>::infinity(), nullptr);
        L.cert.energy_bound = pow2((j + 1) * n);
        L.cert.mass_layer = ctx.mass_set(tiles, nullptr);
        L.cert.mass_bound = pow2((2 * j + 2) * n);
        L.cert.residual_energy =
            rem.empty() ? 0.0 : ctx.energy_set(rem, std::numeric_limits<double>::infinity(), nullptr);
        L.cert.residual_energy_bound = pow2(j * n);
        L.cert.residual_mass = rem.empty() ? 0.0 : ctx.mass_set(rem, nullptr);
        L.cert.residual_mass_bound = pow2(2 * j * n);
        for (const Tree& T : L.trees) L.cert.tops_length += T.top.time.volume();
        L.cert.C0 = L.cert.tops_length * pow2(2 * j * n);
        out.layers.push_back(std::move(L));
    }
    return out;
}

// re-verify every certificate from scratch (fresh functional evaluations)
inline bool certify(const LayerDecomposition& D, const std::vector<Tile>& P, const SampledField& f,
                    const CellMask& Eprime, const ChoiceMap& N, int r, int gamma) {
    // exact partition: the multiset union of the layers is P
    std::vector<Tile> got = D.all_tiles(), want = P;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got != want) return false;

    const int n = f.grid.dim;
    std::vector<Tile> rem = P;
    for (const Layer& L : D.layers) {
        auto tiles = L.tiles();
        // every tree is valid and downward closed within its layer... the
        // structural requirement is validity under the recorded top
        for (const Tree& T : L.trees)
            if (!T.valid()) return false;
        if (!tiles.empty()) {
            if (energy(f, tiles, r).value > pow2((L.j + 1) * n) * (1.0 + 1e-12)) return false;
            if (mass(tiles, Eprime, N, r, gamma).value > pow2((2 * L.j + 2) * n) * (1.0 + 1e-12)) return false;
        }
        // remove the layer and test the residual thresholds
        std::vector<Tile> next;
        std::vector<Tile> sorted = tiles;
        std::sort(sorted.begin(), sorted.end());
        for (const Tile& s : rem)
            if (!std::binary_search(sorted.begin(), sorted.end(), s)) next.push_back(s);
        rem.swap(next);
        if (!rem.empty()) {
            double re = energy(f, rem, r).value;
            double rm = mass(rem, Eprime, N, r, gamma).value;
            bool zero_tail = re == 0.0 && rm == 0.0;
            if (!zero_tail) {
                if (re > pow2(L.j * n) * (1.0 + 1e-12)) return false;
                if (rm > pow2(2 * L.j * n) * (1.0 + 1e-12)) return false;
            }
        }
    }
    return rem.empty();
}

// Lemma-2-style single-tree estimate: lhs, rhs and their ratio
struct TreeEstimate {
    double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

inline TreeEstimate tree_sum_estimate(const Tree& T, const SampledField& f, const CellMask& Eprime,
                                      const ChoiceMap& N, int r, int gamma) {
    TreeEstimate est;
    const Grid& g = f.grid;
    for (const Tile& s : T.tiles) {
        DyadicCube w = semitile_freq(s, r);
        SampledField chi(g);
        for (std::size_t ix = 0; ix < chi.v.size(); ++ix)
            if (Eprime.m[ix] && choice_in_cube(N.values[ix], w)) chi.v[ix] = 1.0;
        est.lhs += std::abs(packet_coeff(f, s)) * std::abs(packet_coeff(chi, s));
    }
    double e = energy(f, T.tiles, r).value;
    double m = mass(T.tiles, Eprime, N, r, gamma).value;
    est.rhs = T.top.time.volume() * e * m * lp_norm(f, 2.0);
    est.ratio = est.rhs == 0.0 ? 0.0 : est.lhs / est.rhs;
    return est;
}

inline nlohmann::json to_json(const LayerCertificate& c) {
    return {{"energy_layer", c.energy_layer},       {"energy_bound", c.energy_bound},
            {"mass_layer", c.mass_layer},           {"mass_bound", c.mass_bound},
            {"residual_energy", c.residual_energy}, {"residual_energy_bound", c.residual_energy_bound},
            {"residual_mass", c.residual_mass},     {"residual_mass_bound", c.residual_mass_bound},
            {"tops_length", c.tops_length},         {"C0", c.C0}};
}

inline nlohmann::json to_json(const LayerDecomposition& D) {
    nlohmann::json j;
    j["m0"] = D.m0;
    j["layers"] = nlohmann::json::array();
    for (const Layer& L : D.layers) {
        nlohmann::json jl;
        jl["j"] = L.j;
        jl["certificates"] = to_json(L.cert);
        jl["trees"] = nlohmann::json::array();
        for (const Tree& T : L.trees) jl["trees"].push_back(to_json(T));
        j["layers"].push_back(jl);
    }
    return j;
}

}  // namespace dsum

#endif
