#include "fibro/radiomics.hpp"

#include <cmath>
#include <cstdlib>

namespace fibro::radiomics {

Eigen::MatrixXd gldm_counts(const GrayLevelVolume& g, int alpha) {
    const Dims& d = g.dims;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.bin_count, kMaxDependence);
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const int level = g.at(x, y, z);
                if (level == 0) continue;
                int dep = 1;
                for (const Offset3& o : kNeighbors26) {
                    const int nb = g.level_or_zero(x + o[0], y + o[1], z + o[2]);
                    if (nb != 0 && std::abs(nb - level) <= alpha) ++dep;
                }
                c(level - 1, dep - 1) += 1.0;
            }
        }
    }
    return c;
}

NamedValues gldm_features(const Eigen::MatrixXd& counts) {
    const double total = counts.sum();
    double sde = 0.0, lde = 0.0, dn = 0.0, dv = 0.0, de = 0.0;
    if (total > 0.0) {
        const Eigen::VectorXd by_dep = counts.colwise().sum().transpose();
        double mu = 0.0;
        for (int b = 0; b < by_dep.size(); ++b) mu += (b + 1) * by_dep(b) / total;
        for (int a = 0; a < counts.rows(); ++a) {
            for (int b = 0; b < counts.cols(); ++b) {
                const double c = counts(a, b);
                if (c == 0.0) continue;
                const double j = b + 1;
                const double p = c / total;
                sde += p / (j * j);
                lde += p * j * j;
                dv += p * (j - mu) * (j - mu);
                de -= p * std::log2(p);
            }
        }
        dn = by_dep.squaredNorm() / total;
    }
    return {{"SmallDependenceEmphasis", sde}, {"LargeDependenceEmphasis", lde}, {"DependenceNonUniformity", dn},
            {"DependenceVariance", dv}, {"DependenceEntropy", de}};
}

GldmResult build_gldm(const GrayLevelVolume& g, int alpha) {
    GldmResult out;
    out.counts = gldm_counts(g, alpha);
    out.features = gldm_features(out.counts);
    return out;
}

}  // namespace fibro::radiomics
