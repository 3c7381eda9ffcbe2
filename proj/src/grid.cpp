#include "vexflow/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace vexflow {

GridLayout make_layout(int d, const std::array<double, 3>& extents, int resolution) {
    if (d != 2 && d != 3) throw ConfigError("dimension must be 2 or 3");
    if (resolution <= 0) throw ConfigError("resolution must be positive");
    for (int a = 0; a < d; ++a)
        if (!(extents[a] > 0)) throw ConfigError("box extents must be positive");
    GridLayout g;
    g.d = d;
    g.h = extents[0] / resolution;
    for (int a = 0; a < 3; ++a) {
        if (a < d) {
            g.ext[a] = extents[a];
            double cells = extents[a] / g.h;
            g.n[a] = int(std::lround(cells));
            if (std::fabs(cells - g.n[a]) > 1e-9)
                throw ConfigError("box extents must be integer multiples of the grid spacing");
        } else {
            g.ext[a] = 0.0;
            g.n[a] = 1;
        }
    }
    return g;
}

SpaceTimeField uniform_spacetime(const GridLayout& g, double T, int nt) {
    if (nt <= 0 || !(T > 0)) throw ConfigError("space-time sampling needs T > 0 and nt >= 1");
    SpaceTimeField f;
    double dt = T / nt;
    f.slices.assign(nt, ScalarField(g));
    for (int m = 0; m < nt; ++m) {
        f.times.push_back((m + 0.5) * dt);
        f.weights.push_back(dt);
    }
    return f;
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericError("cannot open for writing: " + path);
    out << contents;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NumericError("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= std::uint8_t(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    return h;
}

}  // namespace vexflow
