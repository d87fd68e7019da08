#include "fibro/radiomics.hpp"
#include "size_matrix.hpp"

#include <algorithm>

namespace fibro::radiomics {

namespace {

const std::array<std::string, 16> kGlrlmNames{
    "ShortRunEmphasis", "LongRunEmphasis", "GrayLevelNonUniformity", "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity", "RunLengthNonUniformityNormalized", "RunPercentage", "GrayLevelVariance",
    "RunVariance", "RunEntropy", "LowGrayLevelRunEmphasis", "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis", "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
};

}  // namespace

Eigen::MatrixXd glrlm_counts(const GrayLevelVolume& g, const Offset3& dir) {
    const Dims& d = g.dims;
    const int max_run = std::max({d.nx, d.ny, d.nz});
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.bin_count, max_run);
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const int level = g.at(x, y, z);
                if (level == 0) continue;
                // Only run starts are counted: the predecessor must differ.
                if (g.level_or_zero(x - dir[0], y - dir[1], z - dir[2]) == level) continue;
                int len = 1;
                while (g.level_or_zero(x + len * dir[0], y + len * dir[1], z + len * dir[2]) == level) ++len;
                c(level - 1, len - 1) += 1.0;
            }
        }
    }
    return c;
}

NamedValues glrlm_features(const Eigen::MatrixXd& counts, std::size_t voxel_count) {
    return detail::size_matrix_features(counts, voxel_count, kGlrlmNames);
}

GlrlmResult build_glrlm(const GrayLevelVolume& g) {
    GlrlmResult out;
    const std::size_t np = g.roi_count();
    std::vector<double> sums(kGlrlmNames.size(), 0.0);
    for (const Offset3& dir : kLatticeDirections) {
        out.direction_counts.push_back(glrlm_counts(g, dir));
        const NamedValues f = glrlm_features(out.direction_counts.back(), np);
        for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += f[k].second;
    }
    for (std::size_t k = 0; k < sums.size(); ++k)
        out.features.emplace_back(kGlrlmNames[k], sums[k] / static_cast<double>(kLatticeDirections.size()));
    return out;
}

}  // namespace fibro::radiomics
