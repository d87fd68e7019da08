#include "fibro/radiomics.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::radiomics {

namespace {

const std::vector<std::string> kGlcmNames{
    "Autocorrelation", "JointAverage", "ClusterProminence", "ClusterShade", "ClusterTendency", "Contrast",
    "Correlation", "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance", "JointEnergy", "JointEntropy",
    "Imc1", "Imc2", "Idm", "Idmn", "Id", "Idn", "InverseVariance", "MaximumProbability", "SumAverage",
    "SumEntropy", "SumSquares", "MCC",
};

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

double second_transition_eigenvalue(const Eigen::MatrixXd& p, const Eigen::VectorXd& px) {
    std::vector<int> support;
    for (int i = 0; i < px.size(); ++i)
        if (px(i) > 0.0) support.push_back(i);
    const auto k = static_cast<int>(support.size());
    if (k < 2) return 0.0;
    // For symmetric p, Q = D^-1 p D^-1 p is similar to M^2 with M = D^-1/2 p D^-1/2.
    Eigen::MatrixXd m(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
            m(a, b) = p(support[a], support[b]) / std::sqrt(px(support[a]) * px(support[b]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    std::vector<double> sq(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) sq[static_cast<std::size_t>(a)] = solver.eigenvalues()(a) * solver.eigenvalues()(a);
    std::sort(sq.begin(), sq.end(), std::greater<>());
    return std::clamp(sq[1], 0.0, 1.0);
}

}  // namespace

Eigen::MatrixXd glcm_counts(const GrayLevelVolume& g, const Offset3& dir, int distance) {
    const int ng = g.bin_count;
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(ng, ng);
    const Dims& d = g.dims;
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const int i = g.at(x, y, z);
                if (i == 0) continue;
                const int j = g.level_or_zero(x + distance * dir[0], y + distance * dir[1], z + distance * dir[2]);
                if (j == 0) continue;
                c(i - 1, j - 1) += 1.0;
            }
        }
    }
    return c;
}

NamedValues glcm_features(const Eigen::MatrixXd& p) {
    const int ng = static_cast<int>(p.rows());
    const Eigen::VectorXd px = p.rowwise().sum();
    const Eigen::VectorXd py = p.colwise().sum().transpose();

    double mux = 0.0, muy = 0.0;
    for (int i = 0; i < ng; ++i) {
        mux += (i + 1) * px(i);
        muy += (i + 1) * py(i);
    }
    double varx = 0.0, vary = 0.0, hx = 0.0, hy = 0.0;
    for (int i = 0; i < ng; ++i) {
        varx += (i + 1 - mux) * (i + 1 - mux) * px(i);
        vary += (i + 1 - muy) * (i + 1 - muy) * py(i);
        hx -= plogp(px(i));
        hy -= plogp(py(i));
    }

    Eigen::VectorXd psum = Eigen::VectorXd::Zero(2 * ng + 1);  // index k = i + j
    Eigen::VectorXd pdiff = Eigen::VectorXd::Zero(ng);         // index k = |i - j|
    double autocorr = 0.0, prom = 0.0, shade = 0.0, tend = 0.0, contrast = 0.0, cross = 0.0;
    double energy = 0.0, hxy = 0.0, hxy1 = 0.0, hxy2 = 0.0, idm = 0.0, idmn = 0.0, id = 0.0, idn = 0.0;
    double maxp = 0.0, sumsq = 0.0;
    const double ng2 = static_cast<double>(ng) * ng;
    for (int a = 0; a < ng; ++a) {
        const double i = a + 1;
        for (int b = 0; b < ng; ++b) {
            const double j = b + 1;
            const double v = p(a, b);
            const double pp = px(a) * py(b);
            if (pp > 0.0) hxy2 -= pp * std::log2(pp);
            if (v == 0.0) continue;
            const double s = i + j - mux - muy;
            const double dd = i - j;
            psum(a + b + 2) += v;
            pdiff(std::abs(a - b)) += v;
            autocorr += i * j * v;
            prom += s * s * s * s * v;
            shade += s * s * s * v;
            tend += s * s * v;
            contrast += dd * dd * v;
            cross += i * j * v;
            energy += v * v;
            hxy -= v * std::log2(v);
            hxy1 -= v * std::log2(pp);
            idm += v / (1.0 + dd * dd);
            idmn += v / (1.0 + dd * dd / ng2);
            id += v / (1.0 + std::abs(dd));
            idn += v / (1.0 + std::abs(dd) / ng);
            maxp = std::max(maxp, v);
            sumsq += (i - mux) * (i - mux) * v;
        }
    }

    double diff_avg = 0.0, diff_ent = 0.0, inv_var = 0.0;
    for (int k = 0; k < ng; ++k) {
        diff_avg += k * pdiff(k);
        diff_ent -= plogp(pdiff(k));
        if (k >= 1) inv_var += pdiff(k) / (static_cast<double>(k) * k);
    }
    double diff_var = 0.0;
    for (int k = 0; k < ng; ++k) diff_var += (k - diff_avg) * (k - diff_avg) * pdiff(k);
    double sum_avg = 0.0, sum_ent = 0.0;
    for (int k = 2; k <= 2 * ng; ++k) {
        sum_avg += k * psum(k);
        sum_ent -= plogp(psum(k));
    }

    const double sd_prod = std::sqrt(varx * vary);
    const double correlation = sd_prod < kGuard ? 0.0 : (cross - mux * muy) / sd_prod;
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax < kGuard ? 0.0 : (hxy - hxy1) / hmax;
    const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * std::max(0.0, hxy2 - hxy))));
    const double mcc = second_transition_eigenvalue(p, px);

    const std::vector<double> values{autocorr, mux,     prom,    shade,  tend,  contrast, correlation, diff_avg,
                                     diff_ent, diff_var, energy, hxy,    imc1,  imc2,     idm,         idmn,
                                     id,       idn,     inv_var, maxp,   sum_avg, sum_ent, sumsq,      mcc};
    NamedValues out;
    for (std::size_t k = 0; k < kGlcmNames.size(); ++k) out.emplace_back(kGlcmNames[k], values[k]);
    return out;
}

GlcmResult build_glcm(const GrayLevelVolume& g, int distance) {
    const int ng = g.bin_count;
    GlcmResult out;
    out.matrix = Eigen::MatrixXd::Zero(ng, ng);
    std::vector<double> sums(kGlcmNames.size(), 0.0);
    int used = 0;
    for (const Offset3& dir : kLatticeDirections) {
        const Eigen::MatrixXd c = glcm_counts(g, dir, distance);
        Eigen::MatrixXd sym = c + c.transpose();
        out.direction_counts.push_back(sym);
        const double total = sym.sum();
        if (total <= 0.0) continue;
        const Eigen::MatrixXd p = sym / total;
        out.matrix += p;
        const NamedValues f = glcm_features(p);
        for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += f[k].second;
        ++used;
    }
    if (used > 0) out.matrix /= used;
    for (std::size_t k = 0; k < sums.size(); ++k)
        out.features.emplace_back(kGlcmNames[k], used > 0 ? sums[k] / used : 0.0);
    return out;
}

}  // namespace fibro::radiomics
