#include "run_dir.hpp"

#include "fibro/parallel.hpp"
#include "fibro/radiomics.hpp"

#include <map>
#include <sstream>

namespace fibro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

CohortManifest cmd_phantom(const RunConfig& cfg, const CommandOptions& opt) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    if (opt.resume && fs::exists(layout.manifest())) return CohortManifest::load(layout.manifest());
    detail::prepare_output(layout.cohort(), opt, true);
    CohortManifest m = generate_cohort(cfg.cases, cfg.prevalence, cfg.phantom, cfg.seed, layout.cohort(), cfg.jobs);
    detail::echo_config(layout, cfg);
    detail::record_timing(layout, "phantom", clock.seconds());
    return m;
}

ExtractSummary cmd_extract(const RunConfig& cfg, const CommandOptions& opt, const fs::path& manifest) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    const fs::path manifest_path = detail::resolve(manifest, layout.manifest());
    const CohortManifest cohort = CohortManifest::load(manifest_path);
    const fs::path base = manifest_path.parent_path();
    const std::string header = feature_csv_header(radiomics::feature_names());

    std::map<std::string, std::string> existing;
    if (opt.resume && fs::exists(layout.features())) {
        const Bytes bytes = read_file(layout.features());
        std::istringstream in(std::string(bytes.begin(), bytes.end()));
        std::string line;
        std::getline(in, line);
        if (line != header)
            throw Error(ErrorKind::SchemaError, layout.features().string() + " has a different header; rerun with --force");
        while (std::getline(in, line))
            if (!line.empty()) existing.emplace(line.substr(0, line.find(',')), line);
    }
    detail::prepare_output(layout.features(), opt, false);

    const std::size_t n = cohort.rows.size();
    std::vector<std::string> lines(n);
    std::vector<std::string> errors(n);
    std::vector<std::size_t> todo;
    ExtractSummary summary;
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = existing.find(cohort.rows[i].case_id);
        if (it != existing.end()) {
            lines[i] = it->second;
            ++summary.reused;
        } else {
            todo.push_back(i);
        }
    }
    const radiomics::ExtractConfig ecfg{cfg.bin_count};
    parallel_for(todo.size(), cfg.jobs, [&](std::size_t t) {
        const ManifestRow& row = cohort.rows[todo[t]];
        try {
            const Volume v = load_volume(base / row.volume);
            const Mask m = load_mask(base / row.roi);
            lines[todo[t]] = feature_csv_row(row.case_id, row.label, radiomics::extract_all(v, m, ecfg).values);
        } catch (const Error& e) {
            errors[todo[t]] = e.what();
        }
    });

    std::string csv = header + "\n";
    std::string failures = "case_id,error\n";
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) {
            summary.failures.emplace_back(cohort.rows[i].case_id, errors[i]);
            failures += cohort.rows[i].case_id + ",\"" + errors[i] + "\"\n";
            continue;
        }
        csv += lines[i] + "\n";
    }
    summary.computed = todo.size() - summary.failures.size();
    write_text_atomic(layout.features(), csv);
    std::error_code ec;
    if (summary.failures.empty())
        fs::remove(layout.extract_failures(), ec);
    else
        write_text_atomic(layout.extract_failures(), failures);
    detail::echo_config(layout, cfg);
    detail::record_timing(layout, "extract", clock.seconds());
    return summary;
}

RadiomicsOutcome cmd_train_radiomics(const RunConfig& cfg, const CommandOptions& opt, const fs::path& features) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    const FeatureTable table = load_feature_csv(detail::resolve(features, layout.features()));
    detail::prepare_output(layout.radiomics(), opt, true);

    learners::StudyConfig scfg;
    scfg.test_frac = cfg.test_frac;
    scfg.folds = cfg.folds;
    scfg.seed = cfg.seed;
    scfg.models = cfg.models;
    scfg.hyper = cfg.hyper;
    scfg.jobs = cfg.jobs;

    RadiomicsOutcome out;
    out.study = learners::run_study(table.data, scfg);
    out.table = learners::markdown_table(out.study.reports);

    auto ids = [&](const learners::Indices& rows) {
        std::vector<std::string> v;
        for (std::size_t r : rows) v.push_back(table.case_ids[r]);
        return v;
    };
    json folds = json::array();
    for (const learners::Indices& f : out.study.split.folds) folds.push_back(ids(f));

    fs::create_directories(layout.radiomics() / "models");
    json models = json::array();
    for (std::size_t i = 0; i < out.study.reports.size(); ++i) {
        const learners::Model& model = out.study.final_models[i];
        const fs::path file = layout.radiomics() / "models" / (learners::to_string(model.kind) + ".json");
        detail::write_json(file, learners::to_json(model));
        json r = learners::to_json(out.study.reports[i]);
        r["model_file"] = detail::relative_to(file, layout.root);
        models.push_back(r);
    }
    const fs::path table_file = layout.radiomics() / "table.md";
    write_text_atomic(table_file, out.table);

    out.report = {{"tool", "fibro"},
                  {"version", detail::version()},
                  {"config", to_json(cfg)},
                  {"features", detail::relative_to(detail::resolve(features, layout.features()), layout.root)},
                  {"cases", table.case_ids.size()},
                  {"split", {{"test", ids(out.study.split.test)}, {"folds", folds}}},
                  {"all_positive_accuracy", out.study.all_positive_accuracy},
                  {"models", models},
                  {"table", detail::relative_to(table_file, layout.root)}};
    detail::write_json(layout.radiomics() / "report.json", out.report);
    detail::echo_config(layout, cfg);
    detail::record_timing(layout, "train-radiomics", clock.seconds());
    return out;
}

}  // namespace fibro::cli
