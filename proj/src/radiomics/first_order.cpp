#include "fibro/radiomics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fibro::radiomics {

namespace {

/// Linear interpolation between order statistics of a sorted sample.
double percentile(const std::vector<double>& sorted, double q) {
    const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lower = static_cast<std::size_t>(std::floor(pos));
    const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lower);
    return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

NamedValues first_order_features(const Volume& v, const Mask& m, int bin_count) {
    const GrayLevelVolume g = discretize(v, m, bin_count);  // validates alignment and non-emptiness
    std::vector<double> xs;
    std::vector<double> hist(static_cast<std::size_t>(bin_count), 0.0);
    const auto vox = v.voxels();
    for (std::size_t i = 0; i < vox.size(); ++i) {
        if (!m[i]) continue;
        xs.push_back(vox[i]);
        hist[static_cast<std::size_t>(g.levels[i] - 1)] += 1.0;
    }
    const auto n = static_cast<double>(xs.size());

    double energy = 0.0;
    for (double x : xs) energy += x * x;
    const double mean = mean_of(xs);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;

    double entropy = 0.0, uniformity = 0.0;
    for (double c : hist) {
        if (c <= 0.0) continue;
        const double p = c / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }

    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double p10 = percentile(sorted, 10.0);
    const double p90 = percentile(sorted, 90.0);

    std::vector<double> robust;
    for (double x : xs)
        if (x >= p10 && x <= p90) robust.push_back(x);
    double rmad = 0.0;
    if (!robust.empty()) {
        const double rmean = mean_of(robust);
        for (double x : robust) rmad += std::abs(x - rmean);
        rmad /= static_cast<double>(robust.size());
    }

    const bool flat = m2 < kGuard;
    return {
        {"Energy", energy},
        {"TotalEnergy", energy * v.spacing().voxel_volume()},
        {"Entropy", entropy},
        {"Minimum", sorted.front()},
        {"Percentile10", p10},
        {"Percentile90", p90},
        {"Maximum", sorted.back()},
        {"Mean", mean},
        {"Median", percentile(sorted, 50.0)},
        {"InterquartileRange", percentile(sorted, 75.0) - percentile(sorted, 25.0)},
        {"Range", sorted.back() - sorted.front()},
        {"MeanAbsoluteDeviation", mad},
        {"RobustMeanAbsoluteDeviation", rmad},
        {"RootMeanSquared", std::sqrt(energy / n)},
        {"StandardDeviation", std::sqrt(m2)},
        {"Skewness", flat ? 0.0 : m3 / std::pow(m2, 1.5)},
        {"Kurtosis", flat ? 0.0 : m4 / (m2 * m2)},
        {"Variance", m2},
        {"Uniformity", uniformity},
    };
}

}  // namespace fibro::radiomics
