#include "fibro/cli.hpp"
#include "fibro/error.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace fibro::cli {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw Error(ErrorKind::SchemaError, "line " + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

}  // namespace

std::string feature_csv_header(const std::vector<std::string>& names) {
    std::string out = "case_id,label";
    for (const std::string& n : names) out += "," + n;
    return out;
}

std::string feature_csv_row(const std::string& case_id, int label, const std::vector<double>& values) {
    std::string out = case_id + "," + std::to_string(label);
    char buf[32];
    for (double v : values) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += ',';
        out += buf;
    }
    return out;
}

FeatureTable parse_feature_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::SchemaError, "feature table is empty");
    const std::vector<std::string> header = split_fields(line);
    if (header.size() < 3 || header[0] != "case_id" || header[1] != "label")
        throw Error(ErrorKind::SchemaError, "feature table header must start with case_id,label and name a feature");

    FeatureTable t;
    t.data.columns.assign(header.begin() + 2, header.end());
    const std::size_t p = t.data.columns.size();
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != p + 2)
            throw Error(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(p + 2) + " fields, got " + std::to_string(fields.size()));
        if (fields[1] != "0" && fields[1] != "1")
            throw Error(ErrorKind::SchemaError, "line " + std::to_string(line_no) + ": label must be 0 or 1");
        t.case_ids.push_back(fields[0]);
        t.data.y.push_back(fields[1] == "1" ? 1 : 0);
        std::vector<double> row(p);
        for (std::size_t c = 0; c < p; ++c) row[c] = parse_number(fields[c + 2], line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::SchemaError, "feature table has no rows");
    t.data.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < p; ++c) t.data.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return t;
}

FeatureTable load_feature_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read feature table " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return parse_feature_csv(text.str());
}

}  // namespace fibro::cli
