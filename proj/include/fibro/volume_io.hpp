#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fibro {

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    std::size_t count() const noexcept {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
    bool contains(int x, int y, int z) const noexcept {
        return x >= 0 && y >= 0 && z >= 0 && x < nx && y < ny && z < nz;
    }
    /// x-fastest linear index.
    std::size_t index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    double voxel_volume() const noexcept { return sx * sy * sz; }
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// 3D scalar grid in HU, x-fastest.
class Volume {
public:
    Volume() = default;
    Volume(Dims dims, Spacing spacing, std::vector<double> voxels);
    Volume(Dims dims, Spacing spacing, double fill = 0.0);

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::span<const double> voxels() const noexcept { return voxels_; }
    std::span<double> voxels() noexcept { return voxels_; }

    double at(int x, int y, int z) const noexcept { return voxels_[dims_.index(x, y, z)]; }
    double& at(int x, int y, int z) noexcept { return voxels_[dims_.index(x, y, z)]; }

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<double> voxels_;
};

/// Binary grid aligned to a Volume.
class Mask {
public:
    Mask() = default;
    explicit Mask(Dims dims, bool fill = false);
    Mask(Dims dims, std::vector<std::uint8_t> bits);

    const Dims& dims() const noexcept { return dims_; }
    bool at(int x, int y, int z) const noexcept { return bits_[dims_.index(x, y, z)] != 0; }
    bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
    void set(int x, int y, int z, bool value = true) noexcept { bits_[dims_.index(x, y, z)] = value ? 1 : 0; }
    void set(std::size_t i, bool value = true) noexcept { bits_[i] = value ? 1 : 0; }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    friend bool operator==(const Mask&, const Mask&) = default;

private:
    Dims dims_{};
    std::vector<std::uint8_t> bits_;
};

/// Throws ShapeMismatch unless the mask grid matches the volume grid.
void require_aligned(const Volume& v, const Mask& m);
/// Throws EmptyMask when no voxel is set.
void require_nonempty(const Mask& m);

/// 2D relevance map in [0,1], row-major (h rows of w values).
class Heatmap {
public:
    Heatmap() = default;
    Heatmap(int h, int w, std::vector<double> values);

    int height() const noexcept { return h_; }
    int width() const noexcept { return w_; }
    double at(int row, int col) const noexcept { return values_[static_cast<std::size_t>(row) * w_ + col]; }
    std::span<const double> values() const noexcept { return values_; }

    /// Divide by the maximum; an all-zero map stays zero. Negative inputs are rejected.
    static Heatmap normalized(int h, int w, std::vector<double> raw);

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<double> values_;
};

using Bytes = std::vector<std::uint8_t>;

/// Decode a single-file NIfTI-1 record. Non-fatal issues (zero pixdim) are
/// appended to `warnings` when given, otherwise printed to stderr.
Volume parse_nifti(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings = nullptr);

/// Little-endian float32 single-file record, vox_offset 352, identity rescale.
Bytes write_nifti(const Volume& v);

/// Masks are stored as uint8 NIfTI (0/1); any nonzero voxel reads back as set.
Bytes write_mask_nifti(const Mask& m, Spacing spacing = {});
Mask parse_mask_nifti(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings = nullptr);

/// Binary P5 graymap, maxval 255, value = round(255 v) half away from zero.
Bytes write_pgm(const Heatmap& h);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

Volume load_volume(const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);

}  // namespace fibro
