#include "fibro/cli.hpp"
#include "fibro/error.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fibro::cli {

using nlohmann::json;

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::UsageError: return kExitUsage;
        case ErrorKind::NonFiniteLoss: return kExitNumeric;
        default: return kExitData;
    }
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw Error(ErrorKind::InvalidSpec, what);
    };
    require(cases >= 2, "cohort.cases must be at least 2");
    require(prevalence > 0.0 && prevalence < 1.0, "cohort.prevalence must lie in (0, 1)");
    phantom.validate();
    require(bin_count >= 1, "radiomics.bin_count must be positive");
    require(test_frac > 0.0 && test_frac < 1.0, "split.test_frac must lie in (0, 1)");
    require(folds >= 2, "split.folds must be at least 2");
    require(!models.empty(), "models must not be empty");
    require(!cnn.presets.empty(), "cnn.presets must not be empty");
    for (const std::string& p : cnn.presets) {
        const auto& names = nnet::preset_names();
        require(std::find(names.begin(), names.end(), p) != names.end(), "unknown cnn preset '" + p + "'");
    }
    require(cnn.slices >= 1, "cnn.slices must be positive");
    require(cnn.side >= 8, "cnn.side must be at least 8");
    cnn.train.validate();
    require(jobs >= 1, "jobs must be positive");
}

namespace {

json phantom_json(const PhantomSpec& s) {
    return {{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
            {"spacing", {s.spacing.sx, s.spacing.sy, s.spacing.sz}},
            {"background_hu", s.background_hu},
            {"noise_sd", s.noise_sd},
            {"tissue_hu", s.tissue_hu},
            {"semi_axis_x", s.semi_axis_x},
            {"semi_axis_y", s.semi_axis_y},
            {"semi_axis_z", s.semi_axis_z},
            {"lesion_count_min", s.lesion_count_min},
            {"lesion_count_max", s.lesion_count_max},
            {"lesion_radius_min", s.lesion_radius_min},
            {"lesion_radius_max", s.lesion_radius_max},
            {"lesion_axial_band", s.lesion_axial_band},
            {"ground_glass_hu", s.ground_glass_hu},
            {"reticulation_amplitude", s.reticulation_amplitude},
            {"reticulation_period", s.reticulation_period}};
}

PhantomSpec phantom_from_json(const json& j, PhantomSpec s) {
    if (j.contains("dims")) {
        const auto d = j.at("dims").get<std::vector<int>>();
        if (d.size() != 3) throw Error(ErrorKind::SchemaError, "phantom.dims needs 3 entries");
        s.dims = Dims{d[0], d[1], d[2]};
    }
    if (j.contains("spacing")) {
        const auto sp = j.at("spacing").get<std::vector<double>>();
        if (sp.size() != 3) throw Error(ErrorKind::SchemaError, "phantom.spacing needs 3 entries");
        s.spacing = Spacing{sp[0], sp[1], sp[2]};
    }
    s.background_hu = j.value("background_hu", s.background_hu);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.tissue_hu = j.value("tissue_hu", s.tissue_hu);
    s.semi_axis_x = j.value("semi_axis_x", s.semi_axis_x);
    s.semi_axis_y = j.value("semi_axis_y", s.semi_axis_y);
    s.semi_axis_z = j.value("semi_axis_z", s.semi_axis_z);
    s.lesion_count_min = j.value("lesion_count_min", s.lesion_count_min);
    s.lesion_count_max = j.value("lesion_count_max", s.lesion_count_max);
    s.lesion_radius_min = j.value("lesion_radius_min", s.lesion_radius_min);
    s.lesion_radius_max = j.value("lesion_radius_max", s.lesion_radius_max);
    s.lesion_axial_band = j.value("lesion_axial_band", s.lesion_axial_band);
    s.ground_glass_hu = j.value("ground_glass_hu", s.ground_glass_hu);
    s.reticulation_amplitude = j.value("reticulation_amplitude", s.reticulation_amplitude);
    s.reticulation_period = j.value("reticulation_period", s.reticulation_period);
    return s;
}

}  // namespace

json to_json(const RunConfig& c) {
    json models = json::array();
    for (learners::ModelKind k : c.models) models.push_back(learners::to_string(k));
    // The CNN seed is derived from the master seed per preset.
    json train = nnet::to_json(c.cnn.train);
    train.erase("seed");
    return {{"seed", c.seed},
            {"cohort", {{"cases", c.cases}, {"prevalence", c.prevalence}, {"phantom", phantom_json(c.phantom)}}},
            {"radiomics", {{"bin_count", c.bin_count}}},
            {"split", {{"test_frac", c.test_frac}, {"folds", c.folds}}},
            {"models", models},
            {"hyperparameters", learners::to_json(c.hyper)},
            {"cnn", {{"presets", c.cnn.presets}, {"slices", c.cnn.slices}, {"side", c.cnn.side}, {"train", train}}}};
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
    try {
        if (!j.is_object()) throw Error(ErrorKind::SchemaError, "config must be a JSON object");
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        if (j.contains("cohort")) {
            const json& co = j.at("cohort");
            c.cases = co.value("cases", c.cases);
            c.prevalence = co.value("prevalence", c.prevalence);
            if (co.contains("phantom")) c.phantom = phantom_from_json(co.at("phantom"), c.phantom);
        }
        if (j.contains("radiomics")) c.bin_count = j.at("radiomics").value("bin_count", c.bin_count);
        if (j.contains("split")) {
            c.test_frac = j.at("split").value("test_frac", c.test_frac);
            c.folds = j.at("split").value("folds", c.folds);
        }
        if (j.contains("models")) {
            c.models.clear();
            for (const json& m : j.at("models")) c.models.push_back(learners::model_kind_from_string(m.get<std::string>()));
        }
        if (j.contains("hyperparameters")) c.hyper = learners::hyperparameters_from_json(j.at("hyperparameters"), c.hyper);
        if (j.contains("cnn")) {
            const json& n = j.at("cnn");
            c.cnn.presets = n.value("presets", c.cnn.presets);
            c.cnn.slices = n.value("slices", c.cnn.slices);
            c.cnn.side = n.value("side", c.cnn.side);
            if (n.contains("train")) c.cnn.train = nnet::train_config_from_json(n.at("train"), c.cnn.train);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot read config " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    json j;
    try {
        j = json::parse(text.str());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, "config " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

}  // namespace fibro::cli
