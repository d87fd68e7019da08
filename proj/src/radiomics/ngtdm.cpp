#include "fibro/radiomics.hpp"

#include <cmath>

namespace fibro::radiomics {

namespace {
constexpr double kCoarsenessCap = 1e6;
constexpr double kCoarsenessFloor = 1e-6;
}  // namespace

Ngtdm ngtdm_table(const GrayLevelVolume& g) {
    const Dims& d = g.dims;
    Ngtdm t{std::vector<std::int64_t>(static_cast<std::size_t>(g.bin_count), 0),
            std::vector<double>(static_cast<std::size_t>(g.bin_count), 0.0)};
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const int level = g.at(x, y, z);
                if (level == 0) continue;
                int count = 0, sum = 0;
                for (const Offset3& o : kNeighbors26) {
                    const int nb = g.level_or_zero(x + o[0], y + o[1], z + o[2]);
                    if (nb == 0) continue;
                    ++count;
                    sum += nb;
                }
                if (count == 0) continue;
                const auto k = static_cast<std::size_t>(level - 1);
                t.n[k] += 1;
                t.s[k] += std::abs(level - static_cast<double>(sum) / count);
            }
        }
    }
    return t;
}

NamedValues ngtdm_features(const Ngtdm& t) {
    const std::size_t ng = t.n.size();
    double nvp = 0.0, s_total = 0.0;
    for (std::size_t k = 0; k < ng; ++k) {
        nvp += static_cast<double>(t.n[k]);
        s_total += t.s[k];
    }
    if (nvp == 0.0)
        return {{"Coarseness", kCoarsenessCap}, {"Contrast", 0.0}, {"Busyness", 0.0}, {"Complexity", 0.0},
                {"Strength", 0.0}};

    std::vector<double> p(ng);
    int present = 0;
    double weighted_s = 0.0;
    for (std::size_t k = 0; k < ng; ++k) {
        p[k] = static_cast<double>(t.n[k]) / nvp;
        if (p[k] > 0.0) ++present;
        weighted_s += p[k] * t.s[k];
    }

    double contrast_sum = 0.0, busy_den = 0.0, complexity = 0.0, strength_num = 0.0;
    for (std::size_t a = 0; a < ng; ++a) {
        if (p[a] == 0.0) continue;
        const double i = static_cast<double>(a + 1);
        for (std::size_t b = 0; b < ng; ++b) {
            if (p[b] == 0.0) continue;
            const double j = static_cast<double>(b + 1);
            contrast_sum += p[a] * p[b] * (i - j) * (i - j);
            busy_den += std::abs(i * p[a] - j * p[b]);
            complexity += std::abs(i - j) * (p[a] * t.s[a] + p[b] * t.s[b]) / (p[a] + p[b]);
            strength_num += (p[a] + p[b]) * (i - j) * (i - j);
        }
    }

    const double coarseness = weighted_s < kCoarsenessFloor ? kCoarsenessCap : 1.0 / weighted_s;
    const double contrast =
        present <= 1 ? 0.0 : contrast_sum / (static_cast<double>(present) * (present - 1)) * s_total / nvp;
    const double busyness = busy_den < kGuard ? 0.0 : weighted_s / busy_den;
    const double strength = s_total < kGuard ? 0.0 : strength_num / s_total;
    return {{"Coarseness", coarseness}, {"Contrast", contrast}, {"Busyness", busyness},
            {"Complexity", complexity / nvp}, {"Strength", strength}};
}

NgtdmResult build_ngtdm(const GrayLevelVolume& g) {
    NgtdmResult out;
    out.table = ngtdm_table(g);
    out.features = ngtdm_features(out.table);
    return out;
}

}  // namespace fibro::radiomics
