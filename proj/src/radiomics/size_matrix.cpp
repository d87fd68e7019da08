#include "size_matrix.hpp"

#include <cmath>

namespace fibro::radiomics::detail {

NamedValues size_matrix_features(const Eigen::MatrixXd& counts, std::size_t voxel_count,
                                 const std::array<std::string, 16>& names) {
    const double total = counts.sum();
    std::array<double, 16> v{};
    if (total > 0.0) {
        const Eigen::VectorXd by_level = counts.rowwise().sum();
        const Eigen::VectorXd by_size = counts.colwise().sum().transpose();
        double mu_level = 0.0, mu_size = 0.0;
        for (int a = 0; a < counts.rows(); ++a)
            for (int b = 0; b < counts.cols(); ++b) {
                const double p = counts(a, b) / total;
                mu_level += (a + 1) * p;
                mu_size += (b + 1) * p;
            }
        double se = 0, le = 0, glv = 0, sv = 0, ent = 0, lgle = 0, hgle = 0, slgle = 0, shgle = 0, llgle = 0,
               lhgle = 0;
        for (int a = 0; a < counts.rows(); ++a) {
            const double i = a + 1, i2 = i * i;
            for (int b = 0; b < counts.cols(); ++b) {
                const double c = counts(a, b);
                if (c == 0.0) continue;
                const double j = b + 1, j2 = j * j;
                const double p = c / total;
                se += p / j2;
                le += p * j2;
                glv += p * (i - mu_level) * (i - mu_level);
                sv += p * (j - mu_size) * (j - mu_size);
                ent -= p * std::log2(p);
                lgle += p / i2;
                hgle += p * i2;
                slgle += p / (i2 * j2);
                shgle += p * i2 / j2;
                llgle += p * j2 / i2;
                lhgle += p * i2 * j2;
            }
        }
        const double gln = by_level.squaredNorm() / total;
        const double sn = by_size.squaredNorm() / total;
        v = {se,  le,   gln, gln / total, sn,    sn / total, total / static_cast<double>(voxel_count), glv,
             sv,  ent,  lgle, hgle,       slgle, shgle,      llgle,                                     lhgle};
    }
    NamedValues out;
    for (std::size_t k = 0; k < names.size(); ++k) out.emplace_back(names[k], v[k]);
    return out;
}

}  // namespace fibro::radiomics::detail
