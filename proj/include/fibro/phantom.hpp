#pragma once

#include "fibro/volume_io.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fibro {

/// Parameters of the synthetic lung phantom. HU targets are engineering
/// choices: ground-glass lesions sit well above the parenchyma and carry an
/// oriented sinusoidal band pattern standing in for reticulation.
struct PhantomSpec {
    Dims dims{64, 64, 64};
    Spacing spacing{1.0, 1.0, 1.0};
    double background_hu = -850.0;
    double noise_sd = 30.0;
    /// Outside the lung ROI (chest wall).
    double tissue_hu = 40.0;
    /// Lung ellipsoid semi-axes as fractions of dims.
    double semi_axis_x = 0.38;
    double semi_axis_y = 0.42;
    double semi_axis_z = 0.45;
    int lesion_count_min = 1;
    int lesion_count_max = 3;
    double lesion_radius_min = 4.0;
    double lesion_radius_max = 10.0;
    /// Lesion centres lie within this many voxels of the lung's central axial plane.
    double lesion_axial_band = 1.0;
    double ground_glass_hu = -600.0;
    double reticulation_amplitude = 120.0;
    double reticulation_period = 3.0;

    /// Throws InvalidSpec on violated ranges.
    void validate() const;
};

struct PhantomCase {
    Volume volume;
    Mask roi;
    Mask lesion;
};

PhantomCase generate_phantom(const PhantomSpec& spec, int label, std::uint64_t seed);

struct ManifestRow {
    std::string case_id;
    int label = 0;
    std::string volume;
    std::string roi;
    std::string lesion;
    std::uint64_t seed = 0;

    friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct CohortManifest {
    std::vector<ManifestRow> rows;

    /// CSV with header `case_id,label,volume,roi,lesion,seed`; paths relative to the manifest directory.
    std::string to_csv() const;
    static CohortManifest from_csv(const std::string& text);
    static CohortManifest load(const std::filesystem::path& path);
};

/// Cohort layout decided before any voxel is generated: labels and per-case seeds.
struct CohortPlan {
    std::vector<int> labels;
    std::vector<std::uint64_t> seeds;
};

/// Exactly round(n * prevalence) positives placed by a seeded shuffle; seed_i = derive_seed(master, i).
CohortPlan plan_cohort(int n, double prevalence, std::uint64_t master_seed);

std::string case_id(int index);

/// Writes cases/<id>_{vol,roi,lesion}.nii and manifest.csv under `dir`.
/// Cases are generated on up to `jobs` threads; output is independent of scheduling.
CohortManifest generate_cohort(int n, double prevalence, const PhantomSpec& spec, std::uint64_t master_seed,
                               const std::filesystem::path& dir, int jobs = 1);

}  // namespace fibro
