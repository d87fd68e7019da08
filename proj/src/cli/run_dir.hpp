#pragma once

#include "fibro/cli.hpp"
#include "fibro/error.hpp"

#include <chrono>
#include <filesystem>
#include <string>

namespace fibro::cli::detail {

/// Refuses to reuse an existing, non-empty output unless resume or force is set.
/// With force alone the old output is removed first.
void prepare_output(const std::filesystem::path& path, const CommandOptions& opt, bool is_directory);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// Merges {stage: seconds} into timings.json; kept out of the reports so they stay reproducible.
void record_timing(const RunLayout& layout, const std::string& stage, double seconds);

/// Saves the effective configuration as config.json.
void echo_config(const RunLayout& layout, const RunConfig& cfg);

/// Manifest path relative to the run, falling back to <out>/cohort/manifest.csv.
std::filesystem::path resolve(const std::filesystem::path& given, const std::filesystem::path& fallback);

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& root);

/// One progress line on std::clog, serialized across threads.
void progress(const std::string& line);

std::string version();

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace fibro::cli::detail
