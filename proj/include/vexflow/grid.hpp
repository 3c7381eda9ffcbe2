#ifndef VEXFLOW_GRID_HPP
#define VEXFLOW_GRID_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vexflow {

// Uniform cell-centered grid over a box [0,ext0] x [0,ext1] (x [0,ext2]).
// d = 2 stores nz = 1 so all loops can run over three indices.
struct GridLayout {
    int d = 2;
    int n[3] = {1, 1, 1};
    double h = 0.0;
    double ext[3] = {0.0, 0.0, 0.0};

    std::size_t cells() const {
        return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
    }
    std::size_t idx(int i, int j, int k = 0) const {
        return (std::size_t(k) * n[1] + j) * n[0] + i;
    }
    double center(int axis, int i) const { return (i + 0.5) * h; }
    bool same_shape(const GridLayout& o) const {
        return d == o.d && n[0] == o.n[0] && n[1] == o.n[1] && n[2] == o.n[2];
    }
};

GridLayout make_layout(int d, const std::array<double, 3>& extents, int resolution);

inline double dist_sq(const GridLayout& g, const std::array<double, 3>& c, int i, int j,
                      int k) {
    double dx = g.center(0, i) - c[0];
    double dy = g.center(1, j) - c[1];
    double dz = g.d == 3 ? g.center(2, k) - c[2] : 0.0;
    return dx * dx + dy * dy + dz * dz;
}

struct ScalarField {
    GridLayout g;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridLayout& layout) : g(layout), v(layout.cells(), 0.0) {}

    double& at(int i, int j, int k = 0) { return v[g.idx(i, j, k)]; }
    double at(int i, int j, int k = 0) const { return v[g.idx(i, j, k)]; }
    std::size_t size() const { return v.size(); }
};

// A field on the space-time cylinder: one spatial slice per time sample.
// Slices carry their own quadrature weight so both uniform sampling and
// per-slab sampling integrate with the midpoint rule.
struct SpaceTimeField {
    std::vector<ScalarField> slices;
    std::vector<double> times;    // slice midpoint times
    std::vector<double> weights;  // slice durations

    std::size_t num_slices() const { return slices.size(); }
    double total_time() const {
        double s = 0;
        for (double w : weights) s += w;
        return s;
    }
};

SpaceTimeField uniform_spacetime(const GridLayout& g, double T, int nt);

// Deterministic RNG. std::mt19937_64 is fully specified by the standard;
// the distributions below are hand-rolled because the std ones are not.
struct Rng {
    explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    std::uint64_t next_u64() {
        // xorshift* variant; fixed algorithm so streams are identical everywhere
        std::uint64_t x = state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state = x;
        return x * 0x2545F4914F6CDD1Dull;
    }
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal() {
        // Box-Muller, cached second value
        if (has_cache) {
            has_cache = false;
            return cache;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cache = r * std::sin(a);
        has_cache = true;
        return r * std::cos(a);
    }
    std::uint64_t state;
    double cache = 0;
    bool has_cache = false;
};

// Errors carry a category so the CLI can map them to exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_text_file(const std::string& path, const std::string& contents);
std::string format_double(double x);  // fixed %.17g formatting for deterministic CSVs
std::uint64_t fnv1a_file(const std::string& path);

}  // namespace vexflow

#endif
