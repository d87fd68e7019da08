#include "fibro/error.hpp"
#include "fibro/radiomics.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::radiomics {

std::size_t GrayLevelVolume::roi_count() const noexcept {
    return static_cast<std::size_t>(std::count_if(levels.begin(), levels.end(), [](int l) { return l > 0; }));
}

GrayLevelVolume discretize(const Volume& v, const Mask& m, int bin_count) {
    require_aligned(v, m);
    require_nonempty(m);
    if (bin_count < 2) throw Error(ErrorKind::InvalidSpec, "bin count must be >= 2");
    const auto vox = v.voxels();
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < vox.size(); ++i) {
        if (!m[i]) continue;
        if (first) {
            lo = hi = vox[i];
            first = false;
        }
        lo = std::min(lo, vox[i]);
        hi = std::max(hi, vox[i]);
    }
    GrayLevelVolume g{v.dims(), bin_count, std::vector<int>(vox.size(), 0)};
    const double range = hi - lo;
    for (std::size_t i = 0; i < vox.size(); ++i) {
        if (!m[i]) continue;
        if (range == 0.0) {
            g.levels[i] = 1;
            continue;
        }
        const double scaled = std::floor(bin_count * (vox[i] - lo) / range);
        g.levels[i] = std::min(bin_count, static_cast<int>(scaled) + 1);
    }
    return g;
}

GrayLevelVolume make_gray_levels(Dims dims, int bin_count, std::vector<int> levels) {
    if (bin_count < 2) throw Error(ErrorKind::InvalidSpec, "bin count must be >= 2");
    if (levels.size() != dims.count()) throw Error(ErrorKind::ShapeMismatch, "level count does not match dims");
    for (int l : levels)
        if (l < 0 || l > bin_count) throw Error(ErrorKind::InvalidSpec, "level outside [0, bin_count]");
    return GrayLevelVolume{dims, bin_count, std::move(levels)};
}

}  // namespace fibro::radiomics
