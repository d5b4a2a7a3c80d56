#ifndef DSUM_GEOMETRY_HPP
#define DSUM_GEOMETRY_HPP

// Dyadic cubes, tiles, semi-tiles and trees, all in exact integer
// arithmetic.  A cube of scale k and index m covers
// prod_j [m_j 2^k, (m_j+1) 2^k); a tile pairs a time cube with a
// frequency cube of opposite scale so that |I| |omega| = 1.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace dsum {

constexpr int kMaxDim = 3;

inline double pow2(int e) { return std::ldexp(1.0, e); }

struct DyadicCube {
    int dim = 1;
    int scale = 0;
    std::array<std::int64_t, kMaxDim> idx{};

    DyadicCube() = default;
    DyadicCube(int dim_, int scale_, std::array<std::int64_t, kMaxDim> idx_)
        : dim(dim_), scale(scale_), idx(idx_) {
        if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("DyadicCube: bad dim");
    }

    double side() const { return pow2(scale); }
    double volume() const { return pow2(scale * dim); }
    double lower(int axis) const { return std::ldexp(double(idx[axis]), scale); }
    double upper(int axis) const { return std::ldexp(double(idx[axis] + 1), scale); }
    double center(int axis) const { return std::ldexp(double(2 * idx[axis] + 1), scale - 1); }

    friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
        if (a.dim != b.dim || a.scale != b.scale) return false;
        for (int j = 0; j < a.dim; ++j)
            if (a.idx[j] != b.idx[j]) return false;
        return true;
    }
    friend bool operator!=(const DyadicCube& a, const DyadicCube& b) { return !(a == b); }

    // strict-weak order usable as a deterministic sort key
    friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
        if (a.scale != b.scale) return a.scale < b.scale;
        for (int j = 0; j < a.dim; ++j)
            if (a.idx[j] != b.idx[j]) return a.idx[j] < b.idx[j];
        return false;
    }
};

// floor(v / 2^d) for d >= 0
inline std::int64_t shift_down(std::int64_t v, int d) { return d >= 63 ? (v < 0 ? -1 : 0) : (v >> d); }

inline bool contains(const DyadicCube& outer, const DyadicCube& inner) {
    if (outer.dim != inner.dim) throw std::invalid_argument("contains: dim mismatch");
    if (inner.scale > outer.scale) return false;
    int d = outer.scale - inner.scale;
    for (int j = 0; j < outer.dim; ++j)
        if (shift_down(inner.idx[j], d) != outer.idx[j]) return false;
    return true;
}

inline bool disjoint(const DyadicCube& a, const DyadicCube& b) {
    return !contains(a, b) && !contains(b, a);
}

inline DyadicCube parent(const DyadicCube& c) {
    DyadicCube p = c;
    p.scale = c.scale + 1;
    for (int j = 0; j < c.dim; ++j) p.idx[j] = shift_down(c.idx[j], 1);
    return p;
}

inline std::vector<DyadicCube> children(const DyadicCube& c) {
    std::vector<DyadicCube> out;
    int count = 1 << c.dim;
    out.reserve(count);
    for (int b = 0; b < count; ++b) {
        DyadicCube ch = c;
        ch.scale = c.scale - 1;
        // axis 0 carries the most significant bit so children come out in
        // lexicographic order of their centers
        for (int j = 0; j < c.dim; ++j)
            ch.idx[j] = 2 * c.idx[j] + ((b >> (c.dim - 1 - j)) & 1);
        out.push_back(ch);
    }
    return out;
}

// Euclidean distance between the closed cubes (0 when they touch or overlap).
inline double cube_dist(const DyadicCube& a, const DyadicCube& b) {
    double s2 = 0.0;
    for (int j = 0; j < a.dim; ++j) {
        double gap = 0.0;
        if (a.upper(j) < b.lower(j)) gap = b.lower(j) - a.upper(j);
        else if (b.upper(j) < a.lower(j)) gap = a.lower(j) - b.upper(j);
        s2 += gap * gap;
    }
    return std::sqrt(s2);
}

// dist(point, cube) in Euclidean norm
inline double point_cube_dist(const double* x, const DyadicCube& c) {
    double s2 = 0.0;
    for (int j = 0; j < c.dim; ++j) {
        double gap = 0.0;
        if (x[j] < c.lower(j)) gap = c.lower(j) - x[j];
        else if (x[j] > c.upper(j)) gap = x[j] - c.upper(j);
        s2 += gap * gap;
    }
    return std::sqrt(s2);
}

struct Tile {
    DyadicCube time;
    DyadicCube freq;

    Tile() = default;
    Tile(DyadicCube t, DyadicCube f) : time(t), freq(f) {
        if (t.dim != f.dim) throw std::invalid_argument("Tile: dim mismatch");
        if (f.scale != -t.scale) throw std::invalid_argument("Tile: |I||omega| != 1");
    }

    int dim() const { return time.dim; }

    friend bool operator==(const Tile& a, const Tile& b) { return a.time == b.time && a.freq == b.freq; }
    friend bool operator!=(const Tile& a, const Tile& b) { return !(a == b); }
    friend bool operator<(const Tile& a, const Tile& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.freq < b.freq;
    }
};

struct SemiTile {
    Tile parent;
    int i = 1;  // 1-based, lexicographic on subcube centers
    DyadicCube freq;
};

inline SemiTile semitile(const Tile& s, int i) {
    int count = 1 << s.dim();
    if (i < 1 || i > count) throw std::out_of_range("semitile: index out of range");
    SemiTile st;
    st.parent = s;
    st.i = i;
    st.freq = children(s.freq)[i - 1];
    return st;
}

inline DyadicCube semitile_freq(const Tile& s, int i) { return semitile(s, i).freq; }

// s <= t in the tile order: I_s inside I_t and omega_t inside omega_s.
// Reflexive by convention.
inline bool tile_leq(const Tile& s, const Tile& t) {
    if (s.dim() != t.dim()) throw std::invalid_argument("tile_leq: dim mismatch");
    return contains(t.time, s.time) && contains(s.freq, t.freq);
}

struct Tree {
    std::vector<Tile> tiles;
    Tile top;

    bool valid() const {
        bool top_in = false;
        for (const Tile& s : tiles) {
            if (!tile_leq(s, top)) return false;
            if (s == top) top_in = true;
        }
        return top_in;
    }
};

inline bool is_rtree(const Tree& T, int r) {
    int count = 1 << T.top.dim();
    if (r < 2 || r > count) throw std::out_of_range("is_rtree: r out of range");
    DyadicCube wt = semitile_freq(T.top, r);
    for (const Tile& s : T.tiles)
        if (!contains(semitile_freq(s, r), wt)) return false;
    return true;
}

// ---- JSON serialization: {dim, time:{k,m[]}, freq:{k,m[]}} ----

inline nlohmann::json to_json(const DyadicCube& c) {
    nlohmann::json m = nlohmann::json::array();
    for (int j = 0; j < c.dim; ++j) m.push_back(c.idx[j]);
    return {{"k", c.scale}, {"m", m}};
}

inline DyadicCube cube_from_json(const nlohmann::json& j, int dim) {
    DyadicCube c;
    c.dim = dim;
    c.scale = j.at("k").get<int>();
    auto m = j.at("m");
    if (int(m.size()) != dim) throw std::invalid_argument("cube_from_json: bad index arity");
    for (int a = 0; a < dim; ++a) c.idx[a] = m[a].get<std::int64_t>();
    return c;
}

inline nlohmann::json to_json(const Tile& s) {
    return {{"dim", s.dim()}, {"time", to_json(s.time)}, {"freq", to_json(s.freq)}};
}

inline Tile tile_from_json(const nlohmann::json& j) {
    int dim = j.at("dim").get<int>();
    return Tile(cube_from_json(j.at("time"), dim), cube_from_json(j.at("freq"), dim));
}

inline nlohmann::json to_json(const std::vector<Tile>& tiles) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Tile& s : tiles) arr.push_back(to_json(s));
    return arr;
}

inline std::vector<Tile> tiles_from_json(const nlohmann::json& arr) {
    std::vector<Tile> out;
    out.reserve(arr.size());
    for (const auto& j : arr) out.push_back(tile_from_json(j));
    return out;
}

inline nlohmann::json to_json(const Tree& T) {
    return {{"top", to_json(T.top)}, {"tiles", to_json(T.tiles)}};
}

}  // namespace dsum

#endif
