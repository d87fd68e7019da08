#include "run_dir.hpp"

#include "fibro/volume_io.hpp"

#include <iostream>
#include <mutex>

namespace fibro::cli::detail {

namespace fs = std::filesystem;
using nlohmann::json;

void prepare_output(const fs::path& path, const CommandOptions& opt, bool is_directory) {
    std::error_code ec;
    const bool exists = fs::exists(path, ec) && !(is_directory && fs::is_directory(path, ec) && fs::is_empty(path, ec));
    if (exists && !opt.resume && !opt.force)
        throw Error(ErrorKind::UsageError, path.string() + " already exists; pass --force to overwrite or --resume to continue");
    if (exists && opt.force && !opt.resume) {
        fs::remove_all(path, ec);
        if (ec) throw Error(ErrorKind::IoFailure, "cannot remove " + path.string() + ": " + ec.message());
    }
    const fs::path dir = is_directory ? path : path.parent_path();
    if (!dir.empty()) {
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
    }
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    const Bytes bytes = read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, path.string() + ": " + e.what());
    }
}

void record_timing(const RunLayout& layout, const std::string& stage, double seconds) {
    json t = json::object();
    if (fs::exists(layout.timings())) {
        try {
            t = read_json(layout.timings());
        } catch (const Error&) {
            t = json::object();
        }
    }
    t[stage] = seconds;
    write_json(layout.timings(), t);
}

void echo_config(const RunLayout& layout, const RunConfig& cfg) {
    fs::create_directories(layout.root);
    write_json(layout.config(), to_json(cfg));
}

fs::path resolve(const fs::path& given, const fs::path& fallback) { return given.empty() ? fallback : given; }

std::string relative_to(const fs::path& p, const fs::path& root) {
    return fs::path(p).lexically_proximate(root).generic_string();
}

void progress(const std::string& line) {
    static std::mutex mutex;
    const std::lock_guard<std::mutex> lock(mutex);
    std::clog << line << std::endl;
}

std::string version() { return FIBRO_VERSION; }

}  // namespace fibro::cli::detail
