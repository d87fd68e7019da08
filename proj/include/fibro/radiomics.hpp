#pragma once

#include "fibro/lattice.hpp"
#include "fibro/volume_io.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

/// Radiomic feature extraction: first-order statistics, 3D/2D shape, and the
/// five texture-matrix families (GLCM, GLRLM, GLSZM, NGTDM, GLDM).
///
/// Conventions shared by every family:
///  - logarithms are base 2 and 0 log 0 = 0;
///  - divisions whose denominator falls below 1e-12 return a documented
///    fallback (0 unless stated otherwise);
///  - texture features are computed on the fixed-bin-count discretization;
///  - directional families use the 13 unique lattice directions at distance 1
///    and report the mean of the per-direction feature values.
namespace fibro::radiomics {

inline constexpr double kGuard = 1e-12;
inline constexpr int kDefaultBinCount = 32;

using NamedValues = std::vector<std::pair<std::string, double>>;

/// ROI intensities mapped to levels 1..bin_count; 0 marks voxels outside the ROI.
struct GrayLevelVolume {
    Dims dims;
    int bin_count = 0;
    std::vector<int> levels;

    int at(int x, int y, int z) const noexcept { return levels[dims.index(x, y, z)]; }
    /// Level at (x,y,z), or 0 when outside the grid or the ROI.
    int level_or_zero(int x, int y, int z) const noexcept { return dims.contains(x, y, z) ? at(x, y, z) : 0; }
    std::size_t roi_count() const noexcept;
};

/// level = min(Ng, floor(Ng (x - min) / (max - min)) + 1); constant ROI -> all 1.
GrayLevelVolume discretize(const Volume& v, const Mask& m, int bin_count);

/// Builds a GrayLevelVolume directly from levels (0 = outside ROI). Throws InvalidSpec on out-of-range levels.
GrayLevelVolume make_gray_levels(Dims dims, int bin_count, std::vector<int> levels);

// ---------------------------------------------------------------- first order

/// Energy, TotalEnergy, Entropy, Minimum, Percentile10, Percentile90, Maximum,
/// Mean, Median, InterquartileRange, Range, MeanAbsoluteDeviation,
/// RobustMeanAbsoluteDeviation, RootMeanSquared, StandardDeviation, Skewness,
/// Kurtosis, Variance, Uniformity.
///
/// Moments are population moments. Kurtosis is the non-excess m4 / m2^2.
/// Skewness and Kurtosis are 0 when the variance is below 1e-12. Percentiles
/// interpolate linearly between order statistics. Entropy and Uniformity use
/// the histogram of the bin_count-level discretization.
NamedValues first_order_features(const Volume& v, const Mask& m, int bin_count);

// ---------------------------------------------------------------------- shape

struct ShapeResult {
    NamedValues values;
    /// Set when a covariance eigenvalue fell below 1e-12; the affected axis
    /// lengths and ratios are reported as 0.
    bool degenerate_axes = false;
};

/// VoxelVolume, SurfaceArea, SurfaceVolumeRatio, Sphericity, Compactness1,
/// Compactness2, SphericalDisproportion, Maximum3DDiameter,
/// Maximum2DDiameterSlice, Maximum2DDiameterColumn, Maximum2DDiameterRow,
/// MajorAxisLength, MinorAxisLength, LeastAxisLength, Elongation, Flatness.
///
/// Surface area counts exposed voxel faces. Diameters are distances between
/// surface-voxel centres in physical units; the 2D diameters restrict pairs to
/// a common z (Slice), y (Column) or x (Row) plane.
ShapeResult shape_features_3d(const Mask& m, Spacing spacing);

/// PixelSurface, Perimeter, PerimeterSurfaceRatio, Sphericity2D,
/// SphericalDisproportion2D, MaximumDiameter, MajorAxisLength,
/// MinorAxisLength, Elongation, Eccentricity, on the axial slice with the
/// largest in-mask area (ties to the lowest index). Perimeter counts exposed pixel edges.
ShapeResult shape_features_2d(const Mask& m, Spacing spacing);

/// Index of the axial slice used by shape_features_2d.
int largest_axial_slice(const Mask& m);

// ----------------------------------------------------------------------- GLCM

/// Raw (unsymmetrized) co-occurrence counts: entry (i-1, j-1) counts ROI voxel
/// pairs (p, p + distance * dir) with levels (i, j).
Eigen::MatrixXd glcm_counts(const GrayLevelVolume& g, const Offset3& dir, int distance = 1);

/// Autocorrelation, JointAverage, ClusterProminence, ClusterShade,
/// ClusterTendency, Contrast, Correlation, DifferenceAverage,
/// DifferenceEntropy, DifferenceVariance, JointEnergy, JointEntropy, Imc1,
/// Imc2, Idm, Idmn, Id, Idn, InverseVariance, MaximumProbability, SumAverage,
/// SumEntropy, SumSquares, MCC -- evaluated on one symmetric normalized matrix.
/// MCC is the magnitude of the second-largest eigenvalue of the transition
/// matrix Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)), clamped to [0,1].
NamedValues glcm_features(const Eigen::MatrixXd& p);

struct GlcmResult {
    /// Mean of the symmetric normalized per-direction matrices that hold at least one pair.
    Eigen::MatrixXd matrix;
    /// Symmetrized counts per direction, in kLatticeDirections order.
    std::vector<Eigen::MatrixXd> direction_counts;
    NamedValues features;
};

GlcmResult build_glcm(const GrayLevelVolume& g, int distance = 1);

// ---------------------------------------------------------------------- GLRLM

/// Run counts: entry (i-1, r-1) counts maximal runs of level i and length r along dir.
Eigen::MatrixXd glrlm_counts(const GrayLevelVolume& g, const Offset3& dir);

/// ShortRunEmphasis, LongRunEmphasis, GrayLevelNonUniformity,
/// GrayLevelNonUniformityNormalized, RunLengthNonUniformity,
/// RunLengthNonUniformityNormalized, RunPercentage, GrayLevelVariance,
/// RunVariance, RunEntropy, LowGrayLevelRunEmphasis, HighGrayLevelRunEmphasis,
/// ShortRunLowGrayLevelEmphasis, ShortRunHighGrayLevelEmphasis,
/// LongRunLowGrayLevelEmphasis, LongRunHighGrayLevelEmphasis.
NamedValues glrlm_features(const Eigen::MatrixXd& counts, std::size_t voxel_count);

struct GlrlmResult {
    std::vector<Eigen::MatrixXd> direction_counts;
    NamedValues features;
};

GlrlmResult build_glrlm(const GrayLevelVolume& g);

// ---------------------------------------------------------------------- GLSZM

/// Zone counts: entry (i-1, s-1) counts 26-connected zones of level i with s voxels.
Eigen::MatrixXd glszm_counts(const GrayLevelVolume& g);

/// SmallAreaEmphasis, LargeAreaEmphasis, GrayLevelNonUniformity,
/// GrayLevelNonUniformityNormalized, SizeZoneNonUniformity,
/// SizeZoneNonUniformityNormalized, ZonePercentage, GrayLevelVariance,
/// ZoneVariance, ZoneEntropy, LowGrayLevelZoneEmphasis,
/// HighGrayLevelZoneEmphasis, SmallAreaLowGrayLevelEmphasis,
/// SmallAreaHighGrayLevelEmphasis, LargeAreaLowGrayLevelEmphasis,
/// LargeAreaHighGrayLevelEmphasis.
NamedValues glszm_features(const Eigen::MatrixXd& counts, std::size_t voxel_count);

struct GlszmResult {
    Eigen::MatrixXd counts;
    NamedValues features;
};

GlszmResult build_glszm(const GrayLevelVolume& g);

// ---------------------------------------------------------------------- NGTDM

struct Ngtdm {
    /// Per level (index i-1): ROI voxels of that level with at least one ROI 26-neighbour.
    std::vector<std::int64_t> n;
    /// Per level: sum over those voxels of |i - mean neighbour level|.
    std::vector<double> s;
};

Ngtdm ngtdm_table(const GrayLevelVolume& g);

/// Coarseness (capped at 1e6 when sum p_i s_i < 1e-6), Contrast, Busyness,
/// Complexity, Strength.
NamedValues ngtdm_features(const Ngtdm& t);

struct NgtdmResult {
    Ngtdm table;
    NamedValues features;
};

NgtdmResult build_ngtdm(const GrayLevelVolume& g);

// ----------------------------------------------------------------------- GLDM

inline constexpr int kMaxDependence = 27;

/// Dependence counts: entry (i-1, d-1) counts ROI voxels of level i whose
/// dependence (1 + ROI 26-neighbours within |difference| <= alpha) is d.
Eigen::MatrixXd gldm_counts(const GrayLevelVolume& g, int alpha = 0);

/// SmallDependenceEmphasis, LargeDependenceEmphasis, DependenceNonUniformity,
/// DependenceVariance, DependenceEntropy.
NamedValues gldm_features(const Eigen::MatrixXd& counts);

struct GldmResult {
    Eigen::MatrixXd counts;
    NamedValues features;
};

GldmResult build_gldm(const GrayLevelVolume& g, int alpha = 0);

// -------------------------------------------------------------------- extract

struct ExtractConfig {
    int bin_count = kDefaultBinCount;
};

/// The 111 canonical feature names, prefixed by family, in registry order.
const std::vector<std::string>& feature_names();

struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    double get(const std::string& name) const;
};

FeatureVector extract_all(const Volume& v, const Mask& m, const ExtractConfig& cfg = {});

}  // namespace fibro::radiomics
