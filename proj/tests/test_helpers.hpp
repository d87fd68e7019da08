#pragma once

#include "fibro/phantom.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fibro::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("fibro_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// A 24^3 phantom spec small enough for fast tests.
inline PhantomSpec small_spec() {
    PhantomSpec s;
    s.dims = Dims{24, 24, 24};
    s.lesion_radius_min = 3.0;
    s.lesion_radius_max = 5.0;
    return s;
}

}  // namespace fibro::testing
