#include "fibro/error.hpp"
#include "fibro/radiomics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace fibro::radiomics {

namespace {

using Point = std::array<double, 3>;

double max_pairwise_distance(const std::vector<Point>& pts) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1], dz = pts[i][2] - pts[j][2];
            best = std::max(best, dx * dx + dy * dy + dz * dz);
        }
    }
    return std::sqrt(best);
}

// A voxel strictly between two mask voxels on an axis line is never a convex
// hull vertex, and the diameter is attained between hull vertices. Keeping
// only the voxels that are extreme along each of the listed axes therefore
// preserves the maximum distance exactly.
class ExtremeFilter {
public:
    explicit ExtremeFilter(const Mask& m) : m_(m), d_(m.dims()) {
        for (int axis = 0; axis < 3; ++axis) {
            lo_[axis].assign(d_.count(), 0);
            hi_[axis].assign(d_.count(), 0);
        }
        // For every line along each axis, record the first and last set voxel.
        for (int z = 0; z < d_.nz; ++z)
            for (int y = 0; y < d_.ny; ++y) mark_line(0, {0, y, z});
        for (int z = 0; z < d_.nz; ++z)
            for (int x = 0; x < d_.nx; ++x) mark_line(1, {x, 0, z});
        for (int y = 0; y < d_.ny; ++y)
            for (int x = 0; x < d_.nx; ++x) mark_line(2, {x, y, 0});
    }

    bool extreme(int axis, std::size_t idx) const { return lo_[axis][idx] || hi_[axis][idx]; }

private:
    void mark_line(int axis, std::array<int, 3> start) {
        const int len = axis == 0 ? d_.nx : axis == 1 ? d_.ny : d_.nz;
        int first = -1, last = -1;
        auto at = [&](int t) {
            std::array<int, 3> p = start;
            p[axis] = t;
            return d_.index(p[0], p[1], p[2]);
        };
        for (int t = 0; t < len; ++t) {
            if (m_[at(t)]) {
                if (first < 0) first = t;
                last = t;
            }
        }
        if (first >= 0) {
            lo_[axis][at(first)] = 1;
            hi_[axis][at(last)] = 1;
        }
    }

    const Mask& m_;
    Dims d_;
    std::array<std::vector<std::uint8_t>, 3> lo_, hi_;
};

struct AxisStats {
    std::vector<double> eigenvalues;  // descending, clamped at 0
    bool degenerate = false;
};

AxisStats principal_axes(const std::vector<Point>& pts, int dimension) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dimension);
    for (const auto& p : pts)
        for (int k = 0; k < dimension; ++k) mean(k) += p[static_cast<std::size_t>(k)];
    mean /= static_cast<double>(pts.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dimension, dimension);
    for (const auto& p : pts) {
        Eigen::VectorXd d(dimension);
        for (int k = 0; k < dimension; ++k) d(k) = p[static_cast<std::size_t>(k)] - mean(k);
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(pts.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov, Eigen::EigenvaluesOnly);
    AxisStats out;
    for (int k = dimension - 1; k >= 0; --k) {
        double ev = std::max(0.0, solver.eigenvalues()(k));
        if (ev < kGuard) {
            out.degenerate = true;
            ev = 0.0;
        }
        out.eigenvalues.push_back(ev);
    }
    return out;
}

double ratio_sqrt(double num, double den) { return den < kGuard ? 0.0 : std::sqrt(num / den); }

}  // namespace

ShapeResult shape_features_3d(const Mask& m, Spacing sp) {
    require_nonempty(m);
    const Dims d = m.dims();
    const double face_x = sp.sy * sp.sz, face_y = sp.sx * sp.sz, face_z = sp.sx * sp.sy;

    std::size_t n = 0;
    double area = 0.0;
    std::vector<Point> all;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                ++n;
                all.push_back({x * sp.sx, y * sp.sy, z * sp.sz});
                auto open = [&](int xx, int yy, int zz) { return !d.contains(xx, yy, zz) || !m.at(xx, yy, zz); };
                area += face_x * (open(x - 1, y, z) + open(x + 1, y, z));
                area += face_y * (open(x, y - 1, z) + open(x, y + 1, z));
                area += face_z * (open(x, y, z - 1) + open(x, y, z + 1));
            }
        }
    }
    const double volume = static_cast<double>(n) * sp.voxel_volume();

    const ExtremeFilter filter(m);
    std::vector<Point> hull3;
    std::vector<std::vector<Point>> by_z(static_cast<std::size_t>(d.nz)), by_y(static_cast<std::size_t>(d.ny)),
        by_x(static_cast<std::size_t>(d.nx));
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t idx = d.index(x, y, z);
                if (!m[idx]) continue;
                const Point p{x * sp.sx, y * sp.sy, z * sp.sz};
                const bool ex = filter.extreme(0, idx), ey = filter.extreme(1, idx), ez = filter.extreme(2, idx);
                if (ex && ey && ez) hull3.push_back(p);
                if (ex && ey) by_z[static_cast<std::size_t>(z)].push_back(p);
                if (ex && ez) by_y[static_cast<std::size_t>(y)].push_back(p);
                if (ey && ez) by_x[static_cast<std::size_t>(x)].push_back(p);
            }
        }
    }
    auto plane_max = [](const std::vector<std::vector<Point>>& planes) {
        double best = 0.0;
        for (const auto& pts : planes) best = std::max(best, max_pairwise_distance(pts));
        return best;
    };

    const AxisStats axes = principal_axes(all, 3);
    const double l1 = axes.eigenvalues[0], l2 = axes.eigenvalues[1], l3 = axes.eigenvalues[2];
    const double sphericity = std::cbrt(36.0 * std::numbers::pi * volume * volume) / area;

    ShapeResult out;
    out.degenerate_axes = axes.degenerate;
    out.values = {
        {"VoxelVolume", volume},
        {"SurfaceArea", area},
        {"SurfaceVolumeRatio", area / volume},
        {"Sphericity", sphericity},
        {"Compactness1", volume / (std::sqrt(std::numbers::pi) * std::pow(area, 1.5))},
        {"Compactness2", 36.0 * std::numbers::pi * volume * volume / (area * area * area)},
        {"SphericalDisproportion", 1.0 / sphericity},
        {"Maximum3DDiameter", max_pairwise_distance(hull3)},
        {"Maximum2DDiameterSlice", plane_max(by_z)},
        {"Maximum2DDiameterColumn", plane_max(by_y)},
        {"Maximum2DDiameterRow", plane_max(by_x)},
        {"MajorAxisLength", 4.0 * std::sqrt(l1)},
        {"MinorAxisLength", 4.0 * std::sqrt(l2)},
        {"LeastAxisLength", 4.0 * std::sqrt(l3)},
        {"Elongation", ratio_sqrt(l2, l1)},
        {"Flatness", ratio_sqrt(l3, l1)},
    };
    return out;
}

int largest_axial_slice(const Mask& m) {
    require_nonempty(m);
    const Dims d = m.dims();
    int best = 0;
    std::size_t best_area = 0;
    for (int z = 0; z < d.nz; ++z) {
        std::size_t area = 0;
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) area += m.at(x, y, z);
        if (area > best_area) {
            best_area = area;
            best = z;
        }
    }
    return best;
}

ShapeResult shape_features_2d(const Mask& m, Spacing sp) {
    const int z = largest_axial_slice(m);
    const Dims d = m.dims();
    std::size_t n = 0;
    double perimeter = 0.0;
    std::vector<Point> pts;
    for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
            if (!m.at(x, y, z)) continue;
            ++n;
            pts.push_back({x * sp.sx, y * sp.sy, 0.0});
            auto open = [&](int xx, int yy) { return !d.contains(xx, yy, z) || !m.at(xx, yy, z); };
            perimeter += sp.sy * (open(x - 1, y) + open(x + 1, y));
            perimeter += sp.sx * (open(x, y - 1) + open(x, y + 1));
        }
    }
    const double area = static_cast<double>(n) * sp.sx * sp.sy;

    // Same hull argument as in 3D, restricted to the slice.
    std::vector<int> row_lo(static_cast<std::size_t>(d.ny), d.nx), row_hi(static_cast<std::size_t>(d.ny), -1);
    std::vector<int> col_lo(static_cast<std::size_t>(d.nx), d.ny), col_hi(static_cast<std::size_t>(d.nx), -1);
    for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
            if (!m.at(x, y, z)) continue;
            const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
            row_lo[uy] = std::min(row_lo[uy], x);
            row_hi[uy] = std::max(row_hi[uy], x);
            col_lo[ux] = std::min(col_lo[ux], y);
            col_hi[ux] = std::max(col_hi[ux], y);
        }
    }
    std::vector<Point> hull;
    for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
            if (!m.at(x, y, z)) continue;
            const auto ux = static_cast<std::size_t>(x), uy = static_cast<std::size_t>(y);
            const bool row_end = x == row_lo[uy] || x == row_hi[uy];
            const bool col_end = y == col_lo[ux] || y == col_hi[ux];
            if (row_end && col_end) hull.push_back({x * sp.sx, y * sp.sy, 0.0});
        }
    }

    const AxisStats axes = principal_axes(pts, 2);
    const double l1 = axes.eigenvalues[0], l2 = axes.eigenvalues[1];
    const double sphericity = 2.0 * std::sqrt(std::numbers::pi * area) / perimeter;

    ShapeResult out;
    out.degenerate_axes = axes.degenerate;
    out.values = {
        {"PixelSurface", area},
        {"Perimeter", perimeter},
        {"PerimeterSurfaceRatio", perimeter / area},
        {"Sphericity2D", sphericity},
        {"SphericalDisproportion2D", 1.0 / sphericity},
        {"MaximumDiameter", max_pairwise_distance(hull)},
        {"MajorAxisLength", 4.0 * std::sqrt(l1)},
        {"MinorAxisLength", 4.0 * std::sqrt(l2)},
        {"Elongation", ratio_sqrt(l2, l1)},
        {"Eccentricity", l1 < kGuard ? 0.0 : std::sqrt(std::max(0.0, 1.0 - l2 / l1))},
    };
    return out;
}

}  // namespace fibro::radiomics
