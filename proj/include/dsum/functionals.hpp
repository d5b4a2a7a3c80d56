#ifndef DSUM_FUNCTIONALS_HPP
#define DSUM_FUNCTIONALS_HPP

// The psi_J weight, the energy of a function over the r-trees inside a
// tile set, and the mass of a tile set relative to (E', N).

#include <cmath>
#include <vector>

#include "wave_packet.hpp"

namespace dsum {

// psi_J(x) = |J|^{-1/2} (1 + |x - c(J)| / |J|^{1/n})^{-gamma}
inline double psi_weight(const DyadicCube& J, const double* x, int gamma) {
    if (gamma < 1) throw std::invalid_argument("psi_weight: gamma >= 1");
    double d2 = 0.0;
    for (int j = 0; j < J.dim; ++j) {
        double dj = x[j] - J.center(j);
        d2 += dj * dj;
    }
    double scale = J.side();  // |J|^{1/n}
    return std::pow(J.volume(), -0.5) * std::pow(1.0 + std::sqrt(d2) / scale, -double(gamma));
}

struct EnergyReport {
    double value = 0.0;
    Tree witness;                                 // empty tiles when Q is empty
    std::vector<std::pair<Tile, double>> table;   // per candidate top
    double trunc_budget = 0.0;
};

// energy(f; Q) = (1/||f||_2) sup over r-trees T in Q of
// ( |I_top|^{-1} sum_{s in T} |<f, phi_s>|^2 )^{1/2}; per candidate top
// the maximal admissible r-tree realizes the sup
inline EnergyReport energy(const SampledField& f, const std::vector<Tile>& Q, int r) {
    double nf = lp_norm(f, 2.0);
    if (nf == 0.0) throw std::invalid_argument("energy: f must be nonzero");
    EnergyReport rep;
    rep.trunc_budget = truncation_tail_fraction(kDefaultTruncRadius);
    if (Q.empty()) return rep;

    std::vector<double> c2(Q.size());
    for (std::size_t i = 0; i < Q.size(); ++i) c2[i] = std::norm(packet_coeff(f, Q[i]));

    for (std::size_t ti = 0; ti < Q.size(); ++ti) {
        const Tile& t = Q[ti];
        DyadicCube wt = semitile_freq(t, r);
        double sum = 0.0;
        std::vector<Tile> members;
        for (std::size_t si = 0; si < Q.size(); ++si)
            if (tile_leq(Q[si], t) && contains(semitile_freq(Q[si], r), wt)) {
                sum += c2[si];
                members.push_back(Q[si]);
            }
        double val = std::sqrt(sum / t.time.volume()) / nf;
        rep.table.emplace_back(t, val);
        if (val > rep.value) {
            rep.value = val;
            rep.witness = Tree{members, t};
        }
    }
    return rep;
}

struct MassReport {
    double value = 0.0;
    Tile witness_s, witness_u;  // valid only when value > 0
    bool has_witness = false;
};

// does the choice value N(x) land in the cube w?
inline bool choice_in_cube(const std::array<double, kMaxDim>& nx, const DyadicCube& w) {
    for (int j = 0; j < w.dim; ++j)
        if (!(nx[j] >= w.lower(j) && nx[j] < w.upper(j))) return false;
    return true;
}

// integral over E' cap N^{-1}[omega_{u(r)}] of
// |I_u|^{-1} (1 + |x - c(I_u)| / |I_u|^{1/n})^{-gamma} dx
inline double mass_integral(const Tile& u, const CellMask& Eprime, const ChoiceMap& N,
                            int r, int gamma) {
    const Grid& g = Eprime.grid;
    if (!(N.grid == g)) throw std::invalid_argument("mass_integral: grid mismatch");
    DyadicCube w = semitile_freq(u, r);
    double inv_vol = 1.0 / u.time.volume();
    double len = u.time.side();
    double acc = 0.0;
    double x[kMaxDim];
    for (std::size_t ix = 0; ix < Eprime.m.size(); ++ix) {
        if (!Eprime.m[ix]) continue;
        if (!choice_in_cube(N.values[ix], w)) continue;
        g.cell_center(ix, x);
        double d2 = 0.0;
        for (int j = 0; j < g.dim; ++j) {
            double dj = x[j] - u.time.center(j);
            d2 += dj * dj;
        }
        acc += std::pow(1.0 + std::sqrt(d2) / len, -double(gamma));
    }
    return inv_vol * acc * g.cell_volume();
}

// mass(Q) = sup over s <= u in Q of the u-integral; the order is
// reflexive, so every u in Q is admissible with witness s = u
inline MassReport mass(const std::vector<Tile>& Q, const CellMask& Eprime, const ChoiceMap& N,
                       int r, int gamma) {
    MassReport rep;
    for (const Tile& u : Q) {
        double v = mass_integral(u, Eprime, N, r, gamma);
        if (v > rep.value) {
            rep.value = v;
            rep.witness_s = u;
            rep.witness_u = u;
            rep.has_witness = true;
        }
    }
    return rep;
}

inline nlohmann::json to_json(const EnergyReport& rep) {
    nlohmann::json j;
    j["value"] = rep.value;
    j["trunc_budget"] = rep.trunc_budget;
    j["witness_tree"] = rep.witness.tiles.empty() ? nlohmann::json(nullptr) : to_json(rep.witness);
    j["table"] = nlohmann::json::array();
    for (const auto& [t, v] : rep.table) j["table"].push_back({{"top", to_json(t)}, {"value", v}});
    return j;
}

inline nlohmann::json to_json(const MassReport& rep) {
    nlohmann::json j;
    j["value"] = rep.value;
    if (rep.has_witness) {
        j["witness_s"] = to_json(rep.witness_s);
        j["witness_u"] = to_json(rep.witness_u);
    } else {
        j["witness_s"] = nullptr;
        j["witness_u"] = nullptr;
    }
    return j;
}

}  // namespace dsum

#endif
