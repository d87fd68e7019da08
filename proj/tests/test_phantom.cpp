#include "doctest.h"
#include "test_helpers.hpp"

#include "fibro/error.hpp"
#include "fibro/phantom.hpp"

#include <numeric>

using namespace fibro;

TEST_CASE("generate_phantom is deterministic in (spec, label, seed)") {
    const PhantomSpec spec = testing::small_spec();
    const PhantomCase a = generate_phantom(spec, 1, 99);
    const PhantomCase b = generate_phantom(spec, 1, 99);
    CHECK(a.volume == b.volume);
    CHECK(a.roi == b.roi);
    CHECK(a.lesion == b.lesion);
    CHECK_FALSE(generate_phantom(spec, 1, 100).volume == a.volume);
}

TEST_CASE("negative phantoms have no lesion voxels") {
    const PhantomCase c = generate_phantom(PhantomSpec{}, 0, 3);
    CHECK(c.lesion.count() == 0);
    CHECK(c.roi.count() > 0);
}

TEST_CASE("lesions are brighter than parenchyma by at least 100 HU (seed 7)") {
    const PhantomCase c = generate_phantom(PhantomSpec{}, 1, 7);
    double in = 0, out = 0;
    std::size_t n_in = 0, n_out = 0;
    const auto vox = c.volume.voxels();
    for (std::size_t i = 0; i < vox.size(); ++i) {
        if (!c.roi[i]) continue;
        if (c.lesion[i]) {
            in += vox[i];
            ++n_in;
        } else {
            out += vox[i];
            ++n_out;
        }
    }
    REQUIRE(n_in > 0);
    CHECK(in / n_in - out / n_out >= 100.0);
}

TEST_CASE("lesion mask is inside the roi and matches the label") {
    const PhantomSpec spec = testing::small_spec();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int label = static_cast<int>(seed % 2);
        const PhantomCase c = generate_phantom(spec, label, seed);
        for (std::size_t i = 0; i < c.lesion.bits().size(); ++i)
            if (c.lesion[i]) REQUIRE(c.roi[i]);
        CHECK((c.lesion.count() > 0) == (label == 1));
    }
}

TEST_CASE("invalid specs are rejected") {
    PhantomSpec s;
    s.dims = Dims{8, 64, 64};
    CHECK_THROWS_AS(generate_phantom(s, 0, 1), Error);
    s = PhantomSpec{};
    s.lesion_radius_max = 40;
    CHECK_THROWS_AS(generate_phantom(s, 1, 1), Error);
    s = PhantomSpec{};
    s.lesion_count_min = 3;
    s.lesion_count_max = 2;
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("cohort plan prevalence rounding") {
    auto positives = [](const CohortPlan& p) { return std::accumulate(p.labels.begin(), p.labels.end(), 0); };
    CHECK(positives(plan_cohort(10, 0.5, 1)) == 5);
    CHECK(positives(plan_cohort(347, 0.449, 42)) == 156);
    CHECK(plan_cohort(347, 0.449, 42).labels == plan_cohort(347, 0.449, 42).labels);
    CHECK_THROWS_AS(plan_cohort(1, 0.5, 1), Error);
    CHECK_THROWS_AS(plan_cohort(10, 1.0, 1), Error);
}

TEST_CASE("generate_cohort writes identical files for identical seeds") {
    const PhantomSpec spec = testing::small_spec();
    testing::TempDir a("cohort_a"), b("cohort_b");
    const CohortManifest ma = generate_cohort(6, 0.5, spec, 5, a.path(), 2);
    const CohortManifest mb = generate_cohort(6, 0.5, spec, 5, b.path(), 1);
    CHECK(ma.rows == mb.rows);
    CHECK(read_file(a.path() / "manifest.csv") == read_file(b.path() / "manifest.csv"));
    for (const auto& row : ma.rows) {
        CHECK(read_file(a.path() / row.volume) == read_file(b.path() / row.volume));
        const Mask lesion = load_mask(a.path() / row.lesion);
        CHECK((lesion.count() > 0) == (row.label == 1));
    }
    CHECK(CohortManifest::load(a.path() / "manifest.csv").rows == ma.rows);
}

TEST_CASE("manifest parsing rejects malformed rows") {
    CHECK_THROWS_AS(CohortManifest::from_csv("bad header\n"), Error);
    CHECK_THROWS_AS(CohortManifest::from_csv("case_id,label,volume,roi,lesion,seed\na,2,v,r,l,1\n"), Error);
    CHECK_THROWS_AS(CohortManifest::from_csv("case_id,label,volume,roi,lesion,seed\na,1,v,r,l,1\na,0,v,r,l,2\n"), Error);
}
