#include "fibro/volume_io.hpp"
#include "fibro/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>

namespace fibro {

Volume::Volume(Dims dims, Spacing spacing, std::vector<double> voxels)
    : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)) {
    if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
        throw Error(ErrorKind::InvalidSpec, "volume dims must be positive");
    if (voxels_.size() != dims.count())
        throw Error(ErrorKind::ShapeMismatch, "voxel count does not match dims");
    for (double s : {spacing.sx, spacing.sy, spacing.sz})
        if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::InvalidSpec, "spacing must be positive and finite");
    for (double v : voxels_)
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "voxel values must be finite");
}

Volume::Volume(Dims dims, Spacing spacing, double fill) : Volume(dims, spacing, std::vector<double>(dims.count(), fill)) {}

Mask::Mask(Dims dims, bool fill) : dims_(dims), bits_(dims.count(), fill ? 1 : 0) {}

Mask::Mask(Dims dims, std::vector<std::uint8_t> bits) : dims_(dims), bits_(std::move(bits)) {
    if (bits_.size() != dims.count()) throw Error(ErrorKind::ShapeMismatch, "mask size does not match dims");
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void require_aligned(const Volume& v, const Mask& m) {
    if (!(v.dims() == m.dims())) throw Error(ErrorKind::ShapeMismatch, "mask dims differ from volume dims");
}

void require_nonempty(const Mask& m) {
    if (m.empty()) throw Error(ErrorKind::EmptyMask, "mask has no set voxels");
}

Heatmap::Heatmap(int h, int w, std::vector<double> values) : h_(h), w_(w), values_(std::move(values)) {
    if (h < 0 || w < 0 || values_.size() != static_cast<std::size_t>(h) * static_cast<std::size_t>(w))
        throw Error(ErrorKind::ShapeMismatch, "heatmap size does not match dims");
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::NonFiniteData, "heatmap values must lie in [0,1]");
}

Heatmap Heatmap::normalized(int h, int w, std::vector<double> raw) {
    double mx = 0.0;
    for (double v : raw) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "raw heatmap must be nonnegative");
        mx = std::max(mx, v);
    }
    if (mx > 0.0)
        for (double& v : raw) v = std::min(1.0, v / mx);
    return Heatmap(h, w, std::move(raw));
}

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kMinFileSize = 352;

// Field offsets in the 348-byte NIfTI-1 header.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffMagic = 344;

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(std::size_t offset) const {
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), bytes_.data() + offset, sizeof(T));
        if (swap_) std::reverse(raw.begin(), raw.end());
        T out;
        std::memcpy(&out, raw.data(), sizeof(T));
        return out;
    }

private:
    std::span<const std::uint8_t> bytes_;
    bool swap_;
};

bool host_is_little() { return std::endian::native == std::endian::little; }

std::size_t element_size(std::int16_t datatype) {
    switch (datatype) {
        case 2: return 1;
        case 4: return 2;
        case 8: return 4;
        case 16: return 4;
        case 64: return 8;
        default: return 0;
    }
}

void warn(std::vector<std::string>* warnings, const std::string& msg) {
    if (warnings)
        warnings->push_back(msg);
    else
        std::cerr << "warning: " << msg << "\n";
}

class Writer {
public:
    explicit Writer(std::size_t size) : bytes_(size, 0) {}

    template <typename T>
    void put(std::size_t offset, T value) {
        std::array<std::uint8_t, sizeof(T)> raw{};
        std::memcpy(raw.data(), &value, sizeof(T));
        if (!host_is_little()) std::reverse(raw.begin(), raw.end());
        std::memcpy(bytes_.data() + offset, raw.data(), sizeof(T));
    }

    Bytes take() { return std::move(bytes_); }

private:
    Bytes bytes_;
};

Bytes write_record(Dims d, Spacing s, std::int16_t datatype, std::int16_t bitpix, const auto& emit) {
    const std::size_t elem = element_size(datatype);
    Writer w(kMinFileSize + d.count() * elem);
    w.put<std::int32_t>(0, static_cast<std::int32_t>(kHeaderSize));
    const std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(d.nx), static_cast<std::int16_t>(d.ny),
                                          static_cast<std::int16_t>(d.nz), 1, 1, 1, 1};
    for (std::size_t i = 0; i < dim.size(); ++i) w.put<std::int16_t>(kOffDim + 2 * i, dim[i]);
    w.put<std::int16_t>(kOffDatatype, datatype);
    w.put<std::int16_t>(kOffBitpix, bitpix);
    const std::array<float, 8> pixdim{1.0f, static_cast<float>(s.sx), static_cast<float>(s.sy),
                                      static_cast<float>(s.sz), 1.0f, 1.0f, 1.0f, 1.0f};
    for (std::size_t i = 0; i < pixdim.size(); ++i) w.put<float>(kOffPixdim + 4 * i, pixdim[i]);
    w.put<float>(kOffVoxOffset, 352.0f);
    w.put<float>(kOffSclSlope, 1.0f);
    w.put<float>(kOffSclInter, 0.0f);
    w.put<std::uint8_t>(kOffXyztUnits, 2);  // millimetres
    const char magic[4] = {'n', '+', '1', '\0'};
    for (std::size_t i = 0; i < 4; ++i) w.put<char>(kOffMagic + i, magic[i]);
    for (std::size_t i = 0; i < d.count(); ++i) emit(w, kMinFileSize + i * elem, i);
    return w.take();
}

void check_writable_dims(Dims d) {
    constexpr int kMax = std::numeric_limits<std::int16_t>::max();
    if (d.nx > kMax || d.ny > kMax || d.nz > kMax)
        throw Error(ErrorKind::InvalidSpec, "dims exceed the NIfTI-1 int16 range");
}

}  // namespace

Volume parse_nifti(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        throw Error(ErrorKind::UnsupportedEncoding, "gzip-compressed input is not supported");
    if (bytes.size() < kMinFileSize)
        throw Error(ErrorKind::TruncatedFile, "input shorter than the 352-byte header block");

    // Byte order: whichever decoding yields dim[0] in 1..7.
    bool swap = false;
    {
        const auto d0 = Reader(bytes, false).get<std::int16_t>(kOffDim);
        const auto d0s = Reader(bytes, true).get<std::int16_t>(kOffDim);
        if (d0 >= 1 && d0 <= 7)
            swap = false;
        else if (d0s >= 1 && d0s <= 7)
            swap = true;
        else
            throw Error(ErrorKind::BadHeader, "cannot infer byte order from dim[0]");
    }
    const Reader r(bytes, swap);

    if (r.get<std::int32_t>(0) != static_cast<std::int32_t>(kHeaderSize)) throw Error(ErrorKind::BadHeader, "sizeof_hdr is not 348");
    if (std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) != 0)
        throw Error(ErrorKind::BadMagic, "magic is not n+1 (single-file NIfTI-1)");

    const auto ndim = r.get<std::int16_t>(kOffDim);
    if (ndim != 3) throw Error(ErrorKind::UnsupportedDim, "dim[0] = " + std::to_string(ndim) + ", expected 3");

    const auto datatype = r.get<std::int16_t>(kOffDatatype);
    const std::size_t elem = element_size(datatype);
    if (elem == 0) throw Error(ErrorKind::UnsupportedDatatype, "datatype code " + std::to_string(datatype));

    Dims dims{r.get<std::int16_t>(kOffDim + 2), r.get<std::int16_t>(kOffDim + 4), r.get<std::int16_t>(kOffDim + 6)};
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) throw Error(ErrorKind::BadHeader, "dim[1..3] must be positive");

    std::array<double, 3> spacing{};
    for (std::size_t i = 0; i < 3; ++i) {
        const double p = r.get<float>(kOffPixdim + 4 * (i + 1));
        if (p == 0.0) {
            warn(warnings, "pixdim[" + std::to_string(i + 1) + "] is 0; using 1.0 mm");
            spacing[i] = 1.0;
        } else if (!std::isfinite(p) || p < 0.0) {
            throw Error(ErrorKind::BadHeader, "pixdim must be finite and positive");
        } else {
            spacing[i] = p;
        }
    }

    const double vox_offset = r.get<float>(kOffVoxOffset);
    if (!std::isfinite(vox_offset) || vox_offset < static_cast<double>(kMinFileSize) ||
        vox_offset != std::floor(vox_offset) || vox_offset > 1e12)
        throw Error(ErrorKind::BadHeader, "vox_offset must be an integer >= 352");
    const auto offset = static_cast<std::size_t>(vox_offset);

    const std::size_t data_bytes = dims.count() * elem;  // at most 3 * 2^15 bits of extent; no overflow
    if (offset > bytes.size() || bytes.size() - offset < data_bytes)
        throw Error(ErrorKind::TruncatedFile, "file shorter than header + declared data");

    double slope = r.get<float>(kOffSclSlope);
    const double inter = r.get<float>(kOffSclInter);
    if (!std::isfinite(slope) || !std::isfinite(inter)) throw Error(ErrorKind::BadHeader, "non-finite scl_slope/scl_inter");
    if (slope == 0.0) slope = 1.0;

    std::vector<double> voxels(dims.count());
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const std::size_t at = offset + i * elem;
        double raw = 0.0;
        switch (datatype) {
            case 2: raw = bytes[at]; break;
            case 4: raw = r.get<std::int16_t>(at); break;
            case 8: raw = r.get<std::int32_t>(at); break;
            case 16: raw = r.get<float>(at); break;
            case 64: raw = r.get<double>(at); break;
        }
        const double v = slope * raw + inter;
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteData, "voxel " + std::to_string(i) + " is not finite");
        voxels[i] = v;
    }
    return Volume(dims, Spacing{spacing[0], spacing[1], spacing[2]}, std::move(voxels));
}

Bytes write_nifti(const Volume& v) {
    check_writable_dims(v.dims());
    const auto vox = v.voxels();
    return write_record(v.dims(), v.spacing(), 16, 32, [&](Writer& w, std::size_t at, std::size_t i) {
        w.put<float>(at, static_cast<float>(vox[i]));
    });
}

Bytes write_mask_nifti(const Mask& m, Spacing spacing) {
    check_writable_dims(m.dims());
    const auto bits = m.bits();
    return write_record(m.dims(), spacing, 2, 8, [&](Writer& w, std::size_t at, std::size_t i) {
        w.put<std::uint8_t>(at, bits[i]);
    });
}

Mask parse_mask_nifti(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
    const Volume v = parse_nifti(bytes, warnings);
    std::vector<std::uint8_t> bits(v.voxels().size());
    std::transform(v.voxels().begin(), v.voxels().end(), bits.begin(), [](double x) { return x != 0.0 ? 1 : 0; });
    return Mask(v.dims(), std::move(bits));
}

Bytes write_pgm(const Heatmap& h) {
    const std::string header = "P5\n" + std::to_string(h.width()) + " " + std::to_string(h.height()) + "\n255\n";
    Bytes out(header.begin(), header.end());
    out.reserve(out.size() + h.values().size());
    for (double v : h.values()) {
        const double scaled = std::round(255.0 * std::clamp(v, 0.0, 1.0));  // half away from zero
        out.push_back(static_cast<std::uint8_t>(scaled));
    }
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::IoFailure, "read failed: " + path.string());
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::IoFailure, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::IoFailure, "rename failed: " + path.string() + ": " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Volume load_volume(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return parse_nifti(bytes);
}

Mask load_mask(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return parse_mask_nifti(bytes);
}

}  // namespace fibro
