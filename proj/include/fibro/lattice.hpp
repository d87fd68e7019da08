#pragma once

#include <array>

namespace fibro {

using Offset3 = std::array<int, 3>;

/// The 13 unique directions of the 26-neighbourhood, first nonzero component positive.
inline constexpr std::array<Offset3, 13> kLatticeDirections{{
    {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
    {1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1},
    {1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
}};

/// All 26 neighbour offsets in z-major, then y, then x order.
inline constexpr std::array<Offset3, 26> kNeighbors26 = [] {
    std::array<Offset3, 26> out{};
    int k = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx != 0 || dy != 0 || dz != 0) out[k++] = {dx, dy, dz};
    return out;
}();

}  // namespace fibro
