#include "fibro/radiomics.hpp"
#include "size_matrix.hpp"

#include <map>

namespace fibro::radiomics {

namespace {

const std::array<std::string, 16> kGlszmNames{
    "SmallAreaEmphasis", "LargeAreaEmphasis", "GrayLevelNonUniformity", "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity", "SizeZoneNonUniformityNormalized", "ZonePercentage", "GrayLevelVariance",
    "ZoneVariance", "ZoneEntropy", "LowGrayLevelZoneEmphasis", "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis", "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
};

}  // namespace

Eigen::MatrixXd glszm_counts(const GrayLevelVolume& g) {
    const Dims& d = g.dims;
    std::vector<std::uint8_t> visited(d.count(), 0);
    std::map<std::pair<int, int>, double> zones;  // (level, size) -> count
    int max_size = 1;
    std::vector<std::array<int, 3>> stack;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const int level = g.at(x, y, z);
                if (level == 0 || visited[d.index(x, y, z)]) continue;
                int size = 0;
                stack.push_back({x, y, z});
                visited[d.index(x, y, z)] = 1;
                while (!stack.empty()) {
                    const auto p = stack.back();
                    stack.pop_back();
                    ++size;
                    for (const Offset3& o : kNeighbors26) {
                        const int qx = p[0] + o[0], qy = p[1] + o[1], qz = p[2] + o[2];
                        if (g.level_or_zero(qx, qy, qz) != level) continue;
                        const std::size_t qi = d.index(qx, qy, qz);
                        if (visited[qi]) continue;
                        visited[qi] = 1;
                        stack.push_back({qx, qy, qz});
                    }
                }
                zones[{level, size}] += 1.0;
                max_size = std::max(max_size, size);
            }
        }
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(g.bin_count, max_size);
    for (const auto& [key, count] : zones) c(key.first - 1, key.second - 1) = count;
    return c;
}

NamedValues glszm_features(const Eigen::MatrixXd& counts, std::size_t voxel_count) {
    return detail::size_matrix_features(counts, voxel_count, kGlszmNames);
}

GlszmResult build_glszm(const GrayLevelVolume& g) {
    GlszmResult out;
    out.counts = glszm_counts(g);
    out.features = glszm_features(out.counts, g.roi_count());
    return out;
}

}  // namespace fibro::radiomics
