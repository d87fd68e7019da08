#pragma once

#include "fibro/radiomics.hpp"

#include <array>
#include <string>

namespace fibro::radiomics::detail {

/// GLRLM and GLSZM share one 16-feature family over a (level, size) count
/// matrix; only the names differ. Names follow the order
/// SE, LE, GLN, GLNN, SN, SNN, Percentage, GLV, SV, Entropy, LGLE, HGLE,
/// SLGLE, SHGLE, LLGLE, LHGLE.
NamedValues size_matrix_features(const Eigen::MatrixXd& counts, std::size_t voxel_count,
                                 const std::array<std::string, 16>& names);

}  // namespace fibro::radiomics::detail
