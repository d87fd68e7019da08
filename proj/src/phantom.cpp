#include "fibro/phantom.hpp"
#include "fibro/error.hpp"
#include "fibro/lattice.hpp"
#include "fibro/parallel.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace fibro {

namespace {

struct Ellipsoid {
    double cx, cy, cz;
    double a, b, c;
};

Ellipsoid lung_ellipsoid(const PhantomSpec& spec) {
    const Dims& d = spec.dims;
    return {(d.nx - 1) / 2.0, (d.ny - 1) / 2.0, (d.nz - 1) / 2.0,
            spec.semi_axis_x * d.nx, spec.semi_axis_y * d.ny, spec.semi_axis_z * d.nz};
}

struct Lesion {
    double cx, cy, cz, radius;
    std::array<double, 3> band_dir;  // unit vector
    double phase;
};

}  // namespace

void PhantomSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidSpec, msg); };
    if (dims.nx < 16 || dims.ny < 16 || dims.nz < 16) fail("dims must be >= 16 per axis");
    for (double s : {spacing.sx, spacing.sy, spacing.sz})
        if (!(s > 0.0) || !std::isfinite(s)) fail("spacing must be positive");
    for (double f : {semi_axis_x, semi_axis_y, semi_axis_z})
        if (!(f > 0.0 && f <= 0.5)) fail("semi-axis fractions must lie in (0, 0.5]");
    if (!(noise_sd >= 0.0)) fail("noise_sd must be nonnegative");
    if (lesion_count_min < 1 || lesion_count_max < lesion_count_min) fail("lesion count range is empty");
    if (!(lesion_radius_min > 0.0) || lesion_radius_max < lesion_radius_min) fail("lesion radius range is empty");
    if (!(lesion_axial_band >= 0.0)) fail("lesion_axial_band must be nonnegative");
    if (!(reticulation_period > 0.0)) fail("reticulation_period must be positive");
    const Ellipsoid e = lung_ellipsoid(*this);
    const double shortest = std::min({e.a, e.b, e.c});
    if (!(lesion_radius_max + lesion_axial_band < shortest))
        fail("lesion radius does not fit inside the lung ellipsoid");
    for (double v : {background_hu, tissue_hu, ground_glass_hu, reticulation_amplitude})
        if (!std::isfinite(v)) fail("HU parameters must be finite");
}

PhantomCase generate_phantom(const PhantomSpec& spec, int label, std::uint64_t seed) {
    spec.validate();
    if (label != 0 && label != 1) throw Error(ErrorKind::InvalidSpec, "label must be 0 or 1");
    Rng rng(seed);
    const Dims d = spec.dims;
    const Ellipsoid e = lung_ellipsoid(spec);

    std::vector<Lesion> lesions;
    if (label == 1) {
        const auto count = uniform_int(rng, spec.lesion_count_min, spec.lesion_count_max);
        for (std::int64_t k = 0; k < count; ++k) {
            Lesion l{};
            l.radius = uniform_real(rng, spec.lesion_radius_min, spec.lesion_radius_max);
            // Rejection-sample a centre inside the ellipsoid shrunk by the radius.
            const double ra = e.a - l.radius, rb = e.b - l.radius, rc = e.c - l.radius;
            for (;;) {
                const double ux = uniform_real(rng, -1.0, 1.0);
                const double uy = uniform_real(rng, -1.0, 1.0);
                const double dz = uniform_real(rng, -spec.lesion_axial_band, spec.lesion_axial_band);
                const double q = ux * ux + uy * uy + (dz / rc) * (dz / rc);
                if (q <= 1.0) {
                    l.cx = e.cx + ux * ra;
                    l.cy = e.cy + uy * rb;
                    l.cz = e.cz + dz;
                    break;
                }
            }
            const Offset3& dir = kLatticeDirections[static_cast<std::size_t>(uniform_int(rng, 0, 12))];
            const double norm = std::sqrt(double(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]));
            l.band_dir = {dir[0] / norm, dir[1] / norm, dir[2] / norm};
            l.phase = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
            lesions.push_back(l);
        }
    }

    Volume vol(d, spec.spacing, 0.0);
    Mask roi(d), lesion(d);
    const double offset = spec.ground_glass_hu - spec.background_hu;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const double qx = (x - e.cx) / e.a, qy = (y - e.cy) / e.b, qz = (z - e.cz) / e.c;
                const bool inside = qx * qx + qy * qy + qz * qz <= 1.0;
                double v = normal(rng, inside ? spec.background_hu : spec.tissue_hu, spec.noise_sd);
                if (inside) {
                    roi.set(x, y, z);
                    for (const Lesion& l : lesions) {
                        const double px = x - l.cx, py = y - l.cy, pz = z - l.cz;
                        if (px * px + py * py + pz * pz > l.radius * l.radius) continue;
                        const double t = x * l.band_dir[0] + y * l.band_dir[1] + z * l.band_dir[2];
                        v += offset + spec.reticulation_amplitude *
                                          std::sin(2.0 * std::numbers::pi * t / spec.reticulation_period + l.phase);
                        lesion.set(x, y, z);
                        break;  // first covering lesion wins
                    }
                }
                vol.at(x, y, z) = v;
            }
        }
    }
    return {std::move(vol), std::move(roi), std::move(lesion)};
}

CohortPlan plan_cohort(int n, double prevalence, std::uint64_t master_seed) {
    if (n < 2) throw Error(ErrorKind::InvalidSpec, "cohort size must be >= 2");
    if (!(prevalence > 0.0 && prevalence < 1.0)) throw Error(ErrorKind::InvalidSpec, "prevalence must lie in (0,1)");
    const auto positives = static_cast<std::size_t>(std::round(n * prevalence));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(splitmix64(master_seed));
    shuffle(order, rng);
    CohortPlan plan;
    plan.labels.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < positives; ++k) plan.labels[static_cast<std::size_t>(order[k])] = 1;
    for (int i = 0; i < n; ++i) plan.seeds.push_back(derive_seed(master_seed, static_cast<std::uint64_t>(i)));
    return plan;
}

std::string case_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "case_%04d", index);
    return buf;
}

CohortManifest generate_cohort(int n, double prevalence, const PhantomSpec& spec, std::uint64_t master_seed,
                               const std::filesystem::path& dir, int jobs) {
    spec.validate();
    const CohortPlan plan = plan_cohort(n, prevalence, master_seed);
    CohortManifest manifest;
    manifest.rows.resize(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t i) {
        const int label = plan.labels[i];
        const PhantomCase c = generate_phantom(spec, label, plan.seeds[i]);
        ManifestRow row;
        row.case_id = case_id(static_cast<int>(i));
        row.label = label;
        row.volume = "cases/" + row.case_id + "_vol.nii";
        row.roi = "cases/" + row.case_id + "_roi.nii";
        row.lesion = "cases/" + row.case_id + "_lesion.nii";
        row.seed = plan.seeds[i];
        write_file_atomic(dir / row.volume, write_nifti(c.volume));
        write_file_atomic(dir / row.roi, write_mask_nifti(c.roi, spec.spacing));
        write_file_atomic(dir / row.lesion, write_mask_nifti(c.lesion, spec.spacing));
        manifest.rows[i] = std::move(row);
    });
    write_text_atomic(dir / "manifest.csv", manifest.to_csv());
    return manifest;
}

std::string CohortManifest::to_csv() const {
    std::ostringstream out;
    out << "case_id,label,volume,roi,lesion,seed\n";
    for (const auto& r : rows)
        out << r.case_id << ',' << r.label << ',' << r.volume << ',' << r.roi << ',' << r.lesion << ',' << r.seed << '\n';
    return out.str();
}

CohortManifest CohortManifest::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "case_id,label,volume,roi,lesion,seed")
        throw Error(ErrorKind::SchemaError, "manifest header mismatch");
    CohortManifest m;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 6) throw Error(ErrorKind::SchemaError, "manifest row must have 6 fields: " + line);
        ManifestRow r;
        r.case_id = f[0];
        if (f[1] != "0" && f[1] != "1") throw Error(ErrorKind::SchemaError, "label must be 0 or 1: " + line);
        r.label = f[1] == "1";
        r.volume = f[2];
        r.roi = f[3];
        r.lesion = f[4];
        try {
            std::size_t used = 0;
            r.seed = std::stoull(f[5], &used);
            if (used != f[5].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorKind::SchemaError, "bad seed: " + line);
        }
        if (!seen.insert(r.case_id).second) throw Error(ErrorKind::SchemaError, "duplicate case_id " + r.case_id);
        m.rows.push_back(std::move(r));
    }
    return m;
}

CohortManifest CohortManifest::load(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return from_csv(std::string(bytes.begin(), bytes.end()));
}

}  // namespace fibro
