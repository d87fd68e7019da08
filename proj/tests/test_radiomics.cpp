#include "doctest.h"
#include "oracles/texture_oracle.hpp"

#include "fibro/error.hpp"
#include "fibro/phantom.hpp"
#include "fibro/radiomics.hpp"
#include "fibro/random.hpp"

#include <cmath>
#include <numbers>

using namespace fibro;
using namespace fibro::radiomics;

namespace {

double value(const NamedValues& nv, const std::string& name) {
    for (const auto& [k, v] : nv)
        if (k == name) return v;
    FAIL("missing feature " << name);
    return 0.0;
}

Volume row_volume(std::vector<double> vals, Dims d) { return Volume(d, Spacing{}, std::move(vals)); }

GrayLevelVolume random_levels(Rng& rng) {
    const Dims d{static_cast<int>(uniform_int(rng, 1, 8)), static_cast<int>(uniform_int(rng, 1, 8)),
                 static_cast<int>(uniform_int(rng, 1, 8))};
    const int ng = std::array{2, 4, 8}[static_cast<std::size_t>(uniform_int(rng, 0, 2))];
    std::vector<int> levels(d.count());
    for (int& l : levels) l = uniform01(rng) < 0.8 ? static_cast<int>(uniform_int(rng, 1, ng)) : 0;
    levels[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(levels.size()) - 1))] = 1;
    return make_gray_levels(d, ng, std::move(levels));
}

Mask random_mask(Rng& rng, Dims d, double p) {
    Mask m(d);
    for (std::size_t i = 0; i < d.count(); ++i) m.set(i, uniform01(rng) < p);
    m.set(0, 0, 0);
    return m;
}

}  // namespace

TEST_CASE("discretize examples") {
    SUBCASE("endpoints") {
        const Volume v = row_volume({0, 10}, Dims{2, 1, 1});
        CHECK(discretize(v, Mask(v.dims(), true), 2).levels == std::vector<int>{1, 2});
    }
    SUBCASE("constant roi") {
        const Volume v = row_volume({5, 5, 5}, Dims{3, 1, 1});
        CHECK(discretize(v, Mask(v.dims(), true), 8).levels == std::vector<int>{1, 1, 1});
    }
    SUBCASE("quarter steps") {
        const Volume v = row_volume({0, 2.5, 5, 7.5, 10}, Dims{5, 1, 1});
        CHECK(discretize(v, Mask(v.dims(), true), 4).levels == std::vector<int>{1, 2, 3, 4, 4});
    }
    SUBCASE("outside roi is 0") {
        const Volume v = row_volume({0, 100, 10}, Dims{3, 1, 1});
        Mask m(v.dims(), true);
        m.set(1, 0, 0, false);
        CHECK(discretize(v, m, 2).levels == std::vector<int>{1, 0, 2});
    }
    SUBCASE("errors") {
        const Volume v = row_volume({0, 1}, Dims{2, 1, 1});
        CHECK_THROWS_AS(discretize(v, Mask(v.dims(), false), 4), Error);
        CHECK_THROWS_AS(discretize(v, Mask(Dims{1, 1, 1}, true), 4), Error);
    }
}

TEST_CASE("first-order closed forms") {
    const Volume v = row_volume({1, 2, 3}, Dims{3, 1, 1});
    const NamedValues f = first_order_features(v, Mask(v.dims(), true), 32);
    CHECK(f.size() == 19);
    CHECK(value(f, "Mean") == 2.0);
    CHECK(value(f, "Energy") == 14.0);
    CHECK(value(f, "Variance") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(value(f, "Median") == 2.0);
    CHECK(value(f, "Range") == 2.0);

    const Volume c = row_volume({7, 7, 7, 7}, Dims{2, 2, 1});
    const NamedValues fc = first_order_features(c, Mask(c.dims(), true), 32);
    CHECK(value(fc, "Entropy") == 0.0);
    CHECK(value(fc, "Uniformity") == 1.0);
    CHECK(value(fc, "Range") == 0.0);
    CHECK(value(fc, "Skewness") == 0.0);
    CHECK(value(fc, "Kurtosis") == 0.0);
}

TEST_CASE("first-order features match the numpy/scipy reference") {
    // Expected values produced by tests/oracles/first_order_reference.py.
    const NamedValues expected{
        {"Energy", 251953699.15334803},
        {"TotalEnergy", 503907398.30669606},
        {"Entropy", 4.98786320249507},
        {"Minimum", -999.5178142249894},
        {"Percentile10", -861.0598029085548},
        {"Percentile90", 255.47993141983198},
        {"Maximum", 399.26410524223115},
        {"Mean", -302.4326779941159},
        {"Median", -295.10939208975554},
        {"InterquartileRange", 680.4996584698113},
        {"Range", 1398.7819194672206},
        {"MeanAbsoluteDeviation", 346.18751237621683},
        {"RobustMeanAbsoluteDeviation", 275.2834912626518},
        {"RootMeanSquared", 501.9498970548236},
        {"StandardDeviation", 400.6097532944691},
        {"Skewness", -0.015068117472308209},
        {"Kurtosis", 1.8294923162771195},
        {"Variance", 160488.1744346554},
        {"Uniformity", 0.031782000000000005},
    };
    std::vector<double> xs(1000);
    for (std::uint64_t k = 0; k < xs.size(); ++k)
        xs[k] = -1000.0 + 1400.0 * (static_cast<double>(splitmix64(k) >> 11) * 0x1.0p-53);
    const Volume v(Dims{10, 10, 10}, Spacing{1, 1, 2}, xs);
    const NamedValues got = first_order_features(v, Mask(v.dims(), true), 32);
    REQUIRE(got.size() == expected.size());
    for (std::size_t k = 0; k < got.size(); ++k) {
        CAPTURE(got[k].first);
        CHECK(got[k].first == expected[k].first);
        // Relative for large magnitudes (Energy ~ 2.5e8), absolute 1e-9 otherwise.
        CHECK(std::abs(got[k].second - expected[k].second) <= 1e-9 * std::max(1.0, std::abs(expected[k].second)));
    }
}

TEST_CASE("3D shape closed forms") {
    SUBCASE("single voxel") {
        const ShapeResult s = shape_features_3d(Mask(Dims{1, 1, 1}, true), Spacing{});
        CHECK(value(s.values, "VoxelVolume") == 1.0);
        CHECK(value(s.values, "SurfaceArea") == 6.0);
        CHECK(value(s.values, "SurfaceVolumeRatio") == 6.0);
        CHECK(value(s.values, "Maximum3DDiameter") == 0.0);
        CHECK(value(s.values, "Elongation") == 0.0);
        CHECK(s.degenerate_axes);
    }
    SUBCASE("2x2x2 cube") {
        const ShapeResult s = shape_features_3d(Mask(Dims{2, 2, 2}, true), Spacing{});
        CHECK(value(s.values, "VoxelVolume") == 8.0);
        CHECK(value(s.values, "SurfaceArea") == 24.0);
        CHECK(std::abs(value(s.values, "Sphericity") - std::cbrt(36.0 * std::numbers::pi * 64.0) / 24.0) < 1e-9);
        CHECK(std::abs(value(s.values, "Maximum3DDiameter") - std::sqrt(3.0)) < 1e-12);
        CHECK(std::abs(value(s.values, "Maximum2DDiameterSlice") - std::sqrt(2.0)) < 1e-12);
        // Covariance of {0,1}^3 is I/4: every axis 4 * sqrt(1/4) = 2.
        CHECK(std::abs(value(s.values, "MajorAxisLength") - 2.0) < 1e-12);
        CHECK(std::abs(value(s.values, "Flatness") - 1.0) < 1e-12);
        CHECK_FALSE(s.degenerate_axes);
    }
    SUBCASE("anisotropic spacing scales faces") {
        const ShapeResult s = shape_features_3d(Mask(Dims{1, 1, 1}, true), Spacing{1, 2, 3});
        CHECK(value(s.values, "VoxelVolume") == 6.0);
        CHECK(value(s.values, "SurfaceArea") == 2.0 * (6 + 3 + 2));
    }
}

TEST_CASE("3D shape properties on random masks") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const Dims d{static_cast<int>(uniform_int(rng, 1, 7)), static_cast<int>(uniform_int(rng, 1, 7)),
                     static_cast<int>(uniform_int(rng, 1, 7))};
        const Mask m = random_mask(rng, d, 0.5);
        const Spacing sp{uniform_real(rng, 0.5, 2), uniform_real(rng, 0.5, 2), uniform_real(rng, 0.5, 2)};
        const ShapeResult s = shape_features_3d(m, sp);
        const double el = value(s.values, "Elongation"), fl = value(s.values, "Flatness");
        CHECK((el >= 0.0 && el <= 1.0 + 1e-12));
        CHECK((fl >= 0.0 && fl <= 1.0 + 1e-12));
        CHECK(value(s.values, "Maximum3DDiameter") >= value(s.values, "Maximum2DDiameterSlice"));

        // Brute-force diameter over every pair of set voxels.
        double best = 0.0, best_slice = 0.0;
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x)
                    for (int z2 = 0; z2 < d.nz; ++z2)
                        for (int y2 = 0; y2 < d.ny; ++y2)
                            for (int x2 = 0; x2 < d.nx; ++x2) {
                                if (!m.at(x, y, z) || !m.at(x2, y2, z2)) continue;
                                const double dist = std::hypot((x - x2) * sp.sx, (y - y2) * sp.sy, (z - z2) * sp.sz);
                                best = std::max(best, dist);
                                if (z == z2) best_slice = std::max(best_slice, dist);
                            }
        CHECK(std::abs(value(s.values, "Maximum3DDiameter") - best) < 1e-12);
        CHECK(std::abs(value(s.values, "Maximum2DDiameterSlice") - best_slice) < 1e-12);
    }
}

TEST_CASE("2D shape") {
    SUBCASE("single pixel") {
        const ShapeResult s = shape_features_2d(Mask(Dims{1, 1, 1}, true), Spacing{});
        CHECK(value(s.values, "PixelSurface") == 1.0);
        CHECK(value(s.values, "Perimeter") == 4.0);
        CHECK(std::abs(value(s.values, "Sphericity2D") - 2.0 * std::sqrt(std::numbers::pi) / 4.0) < 1e-12);
        CHECK(value(s.values, "Eccentricity") == 0.0);
    }
    SUBCASE("2x2 square") {
        const ShapeResult s = shape_features_2d(Mask(Dims{2, 2, 1}, true), Spacing{});
        CHECK(value(s.values, "Perimeter") == 8.0);
        CHECK(value(s.values, "PixelSurface") == 4.0);
        CHECK(std::abs(value(s.values, "MaximumDiameter") - std::sqrt(2.0)) < 1e-12);
    }
    SUBCASE("largest slice, ties to the lowest index") {
        Mask m(Dims{3, 3, 4});
        m.set(0, 0, 0);
        for (int z : {1, 3})
            for (int x = 0; x < 3; ++x) m.set(x, 1, z);
        CHECK(largest_axial_slice(m) == 1);
    }
    SUBCASE("rasterized disk radius 10") {
        // Exposed-edge perimeter of a convex digital shape is 2 (width + height),
        // so Sphericity2D of a digital disk stays near pi/4 instead of reaching 1.
        Mask m(Dims{25, 25, 1});
        for (int y = 0; y < 25; ++y)
            for (int x = 0; x < 25; ++x)
                if ((x - 12) * (x - 12) + (y - 12) * (y - 12) <= 100) m.set(x, y, 0);
        const ShapeResult s = shape_features_2d(m, Spacing{});
        CHECK(m.count() == 317);
        CHECK(value(s.values, "Perimeter") == 84.0);
        CHECK(std::abs(value(s.values, "Sphericity2D") - 2.0 * std::sqrt(std::numbers::pi * 317.0) / 84.0) < 1e-12);
        CHECK(value(s.values, "Eccentricity") < 1e-9);
    }
}

TEST_CASE("GLCM examples") {
    SUBCASE("constant image") {
        const Volume v(Dims{3, 3, 3}, Spacing{}, 4.0);
        const GlcmResult r = build_glcm(discretize(v, Mask(v.dims(), true), 8));
        CHECK(value(r.features, "MaximumProbability") == 1.0);
        CHECK(value(r.features, "JointEntropy") == 0.0);
        CHECK(value(r.features, "Contrast") == 0.0);
        CHECK(value(r.features, "Correlation") == 0.0);
    }
    SUBCASE("two rows, row-offset direction") {
        const GrayLevelVolume g = make_gray_levels(Dims{2, 2, 1}, 2, {1, 1, 2, 2});
        const Eigen::MatrixXd c = glcm_counts(g, kLatticeDirections[0]);
        const Eigen::MatrixXd sym = c + c.transpose();
        const Eigen::MatrixXd p = sym / sym.sum();
        CHECK(p(0, 0) == 0.5);
        CHECK(p(1, 1) == 0.5);
        CHECK(p(0, 1) == 0.0);
        const NamedValues f = glcm_features(p);
        CHECK(value(f, "Contrast") == 0.0);
        CHECK(value(f, "JointEnergy") == 0.5);
    }
    SUBCASE("averaged matrix is symmetric with unit mass") {
        Rng rng(5);
        for (int t = 0; t < 10; ++t) {
            const GlcmResult r = build_glcm(random_levels(rng));
            if (r.matrix.sum() == 0.0) continue;
            CHECK(std::abs(r.matrix.sum() - 1.0) < 1e-9);
            CHECK((r.matrix - r.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("GLRLM examples") {
    SUBCASE("row [1,1,2]") {
        const GrayLevelVolume g = make_gray_levels(Dims{3, 1, 1}, 2, {1, 1, 2});
        const Eigen::MatrixXd c = glrlm_counts(g, kLatticeDirections[0]);
        CHECK(c(0, 1) == 1.0);
        CHECK(c(1, 0) == 1.0);
        CHECK(c.sum() == 2.0);
        CHECK(value(glrlm_features(c, 3), "ShortRunEmphasis") == 0.625);
    }
    SUBCASE("constant row of 4") {
        const GrayLevelVolume g = make_gray_levels(Dims{4, 1, 1}, 2, {1, 1, 1, 1});
        const Eigen::MatrixXd c = glrlm_counts(g, kLatticeDirections[0]);
        CHECK(c(0, 3) == 1.0);
        const NamedValues f = glrlm_features(c, 4);
        CHECK(value(f, "LongRunEmphasis") == 16.0);
        CHECK(value(f, "RunPercentage") == 0.25);
    }
}

TEST_CASE("GLSZM examples") {
    SUBCASE("L-shaped zone") {
        const GrayLevelVolume g = make_gray_levels(Dims{2, 2, 1}, 2, {1, 1, 1, 2});
        const GlszmResult r = build_glszm(g);
        CHECK(r.counts(0, 2) == 1.0);
        CHECK(r.counts(1, 0) == 1.0);
        CHECK(std::abs(value(r.features, "SmallAreaEmphasis") - (1.0 / 9.0 + 1.0) / 2.0) < 1e-15);
    }
    SUBCASE("constant volume is one zone") {
        const GrayLevelVolume g = make_gray_levels(Dims{3, 2, 2}, 4, std::vector<int>(12, 3));
        const GlszmResult r = build_glszm(g);
        CHECK(r.counts.sum() == 1.0);
        CHECK(r.counts(2, 11) == 1.0);
        CHECK(value(r.features, "ZoneEntropy") == 0.0);
    }
    SUBCASE("diagonal voxels connect") {
        const GrayLevelVolume g = make_gray_levels(Dims{2, 2, 2}, 2, {1, 0, 0, 0, 0, 0, 0, 1});
        CHECK(build_glszm(g).counts(0, 1) == 1.0);
    }
}

TEST_CASE("NGTDM examples") {
    SUBCASE("constant volume") {
        const GrayLevelVolume g = make_gray_levels(Dims{3, 3, 1}, 4, std::vector<int>(9, 2));
        const NgtdmResult r = build_ngtdm(g);
        for (double s : r.table.s) CHECK(s == 0.0);
        CHECK(value(r.features, "Contrast") == 0.0);
        CHECK(value(r.features, "Coarseness") == 1e6);
    }
    SUBCASE("row [1,2,1]") {
        // n = (2, 1), s = (2, 1), p = (2/3, 1/3), sum p s = 5/3.
        const GrayLevelVolume g = make_gray_levels(Dims{3, 1, 1}, 2, {1, 2, 1});
        const NgtdmResult r = build_ngtdm(g);
        CHECK(r.table.n == std::vector<std::int64_t>{2, 1});
        CHECK(r.table.s[0] == 2.0);
        CHECK(r.table.s[1] == 1.0);
        CHECK(value(r.features, "Coarseness") == doctest::Approx(0.6).epsilon(1e-14));
        CHECK(value(r.features, "Contrast") == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
        CHECK(value(r.features, "Busyness") == 0.0);  // |1 p1 - 2 p2| = 0
        CHECK(value(r.features, "Complexity") == doctest::Approx(10.0 / 9.0).epsilon(1e-14));
        CHECK(value(r.features, "Strength") == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    }
    SUBCASE("isolated voxel is excluded") {
        const GrayLevelVolume g = make_gray_levels(Dims{3, 1, 1}, 2, {1, 0, 2});
        const NgtdmResult r = build_ngtdm(g);
        CHECK(r.table.n == std::vector<std::int64_t>{0, 0});
        CHECK(value(r.features, "Coarseness") == 1e6);
    }
}

TEST_CASE("GLDM examples") {
    SUBCASE("single voxel") {
        const GldmResult r = build_gldm(make_gray_levels(Dims{1, 1, 1}, 2, {1}));
        CHECK(r.counts(0, 0) == 1.0);
        CHECK(value(r.features, "DependenceEntropy") == 0.0);
    }
    SUBCASE("constant 3x3") {
        const GldmResult r = build_gldm(make_gray_levels(Dims{3, 3, 1}, 2, std::vector<int>(9, 1)));
        CHECK(r.counts(0, 3) == 4.0);
        CHECK(r.counts(0, 5) == 4.0);
        CHECK(r.counts(0, 8) == 1.0);
        CHECK(r.counts.sum() == 9.0);
    }
}

TEST_CASE("texture matrices and features match the brute-force oracle") {
    Rng rng(777);
    for (int trial = 0; trial < 50; ++trial) {
        const GrayLevelVolume g = random_levels(rng);
        CAPTURE(trial);
        const GlcmResult glcm = build_glcm(g);
        for (std::size_t d = 0; d < kLatticeDirections.size(); ++d)
            CHECK(glcm.direction_counts[d] == oracle::glcm(g, kLatticeDirections[d]));

        const GlrlmResult glrlm = build_glrlm(g);
        for (std::size_t d = 0; d < kLatticeDirections.size(); ++d) {
            const Eigen::MatrixXd& c = glrlm.direction_counts[d];
            CHECK(c == oracle::dense(oracle::glrlm(g, kLatticeDirections[d]), g.bin_count, static_cast<int>(c.cols())));
        }
        const GlszmResult glszm = build_glszm(g);
        CHECK(glszm.counts == oracle::dense(oracle::glszm(g), g.bin_count, static_cast<int>(glszm.counts.cols())));
        const NgtdmResult ngtdm = build_ngtdm(g);
        const oracle::NgtdmTable nt = oracle::ngtdm(g);
        for (std::size_t k = 0; k < nt.n.size(); ++k) {
            CHECK(static_cast<double>(ngtdm.table.n[k]) == nt.n[k]);
            CHECK(std::abs(ngtdm.table.s[k] - nt.s[k]) <= 1e-9);
        }
        const GldmResult gldm = build_gldm(g);
        CHECK(gldm.counts == oracle::dense(oracle::gldm(g, 0), g.bin_count, kMaxDependence));

        auto compare = [](const NamedValues& got, const std::vector<double>& want) {
            REQUIRE(got.size() == want.size());
            for (std::size_t k = 0; k < want.size(); ++k) {
                CAPTURE(got[k].first);
                CHECK(std::abs(got[k].second - want[k]) <= 1e-9);
            }
        };
        compare(glcm.features, oracle::glcm_features_averaged(g));
        compare(glrlm.features, oracle::glrlm_features_averaged(g));
        compare(glszm.features, oracle::size_features(oracle::glszm(g), static_cast<double>(g.roi_count())));
        compare(ngtdm.features, oracle::ngtdm_features(nt));
        compare(gldm.features, oracle::gldm_features(oracle::gldm(g, 0)));
    }
}

TEST_CASE("extract_all registry, determinism and degenerate inputs") {
    CHECK(feature_names().size() == 111);
    CHECK(feature_names().front() == "firstorder_Energy");
    CHECK(feature_names().back() == "gldm_DependenceEntropy");

    Rng rng(9);
    std::vector<double> vals(6 * 5 * 4);
    for (double& x : vals) x = uniform_real(rng, -900, 100);
    const Volume v(Dims{6, 5, 4}, Spacing{1, 1, 1.5}, vals);
    const Mask m = random_mask(rng, v.dims(), 0.7);
    const FeatureVector a = extract_all(v, m);
    CHECK(a.names == feature_names());
    CHECK(a.values == extract_all(v, m).values);

    SUBCASE("single voxel") {
        Mask one(v.dims());
        one.set(2, 2, 2);
        for (double x : extract_all(v, one).values) CHECK(std::isfinite(x));
    }
    SUBCASE("constant roi") {
        const Volume c(Dims{4, 4, 4}, Spacing{}, -500.0);
        for (double x : extract_all(c, Mask(c.dims(), true)).values) CHECK(std::isfinite(x));
    }
    SUBCASE("one-voxel-thick roi") {
        Mask sheet(v.dims());
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 6; ++x) sheet.set(x, y, 1);
        for (double x : extract_all(v, sheet).values) CHECK(std::isfinite(x));
    }
}

TEST_CASE("texture invariances") {
    Rng rng(31);
    const Dims d{6, 6, 6};
    std::vector<double> vals(d.count());
    for (double& x : vals) x = normal(rng, -800, 40);
    const Volume v(d, Spacing{}, vals);
    Mask m(d);
    for (int z = 1; z < 4; ++z)
        for (int y = 1; y < 5; ++y)
            for (int x = 0; x < 4; ++x) m.set(x, y, z);
    const FeatureVector base = extract_all(v, m);

    SUBCASE("translation by a lattice vector") {
        const Dims big{9, 8, 7};
        Volume shifted(big, Spacing{}, 0.0);
        Mask sm(big);
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x) {
                    shifted.at(x + 2, y + 1, z + 1) = v.at(x, y, z);
                    if (m.at(x, y, z)) sm.set(x + 2, y + 1, z + 1);
                }
        const FeatureVector moved = extract_all(shifted, sm);
        for (std::size_t k = 0; k < base.values.size(); ++k) {
            CAPTURE(base.names[k]);
            CHECK(std::abs(moved.values[k] - base.values[k]) <= 1e-9 * std::max(1.0, std::abs(base.values[k])));
        }
    }
    SUBCASE("monotone affine intensity map") {
        std::vector<double> mapped(vals);
        for (double& x : mapped) x = 2.5 * x + 300.0;
        const FeatureVector f = extract_all(Volume(d, Spacing{}, mapped), m);
        for (std::size_t k = 0; k < base.values.size(); ++k) {
            const std::string& name = base.names[k];
            if (name.rfind("firstorder_", 0) == 0 || name.rfind("shape", 0) == 0) continue;
            CAPTURE(name);
            CHECK(std::abs(f.values[k] - base.values[k]) <= 1e-9 * std::max(1.0, std::abs(base.values[k])));
        }
    }
}

TEST_CASE("reticulation raises GLCM contrast inside the lesion (seed 7)") {
    const PhantomCase pos = generate_phantom(PhantomSpec{}, 1, 7);
    const PhantomCase neg = generate_phantom(PhantomSpec{}, 0, 7);
    REQUIRE_FALSE(pos.lesion.empty());
    const double cp = extract_all(pos.volume, pos.lesion).get("glcm_Contrast");
    const double cn = extract_all(neg.volume, pos.lesion).get("glcm_Contrast");
    CHECK(cp > cn);
}
