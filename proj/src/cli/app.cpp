#include "run_dir.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>

namespace fibro::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Radiomics and CNN screening toolkit on synthetic lung CT phantoms", "fibro"};
    app.require_subcommand(1);
    app.set_version_flag("--version", detail::version());

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    CommandOptions opt;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--out", opt.out, "Run directory")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--resume", opt.resume, "Continue from existing outputs");
    app.add_flag("--force", opt.force, "Overwrite existing outputs");

    std::optional<int> cases;
    std::optional<double> prevalence;
    CLI::App* phantom = app.add_subcommand("phantom", "Generate the synthetic cohort");
    phantom->add_option("--n", cases, "Number of cases");
    phantom->add_option("--prevalence", prevalence, "Fraction of positive cases");

    fs::path manifest, features, checkpoint, model;
    CLI::App* extract = app.add_subcommand("extract", "Compute radiomic features for every case");
    extract->add_option("--manifest", manifest, "Cohort manifest (default <out>/cohort/manifest.csv)");

    CLI::App* train_radiomics = app.add_subcommand("train-radiomics", "Holdout plus k-fold study of the four classifiers");
    train_radiomics->add_option("--features", features, "Feature CSV (default <out>/features.csv)");

    std::vector<std::string> presets;
    std::optional<int> epochs;
    CLI::App* train_cnn = app.add_subcommand("train-cnn", "Train the CNN presets on extracted slices");
    train_cnn->add_option("--manifest", manifest, "Cohort manifest");
    train_cnn->add_option("--presets", presets, "Subset of tiny_plain, tiny_res, tiny_dense");
    train_cnn->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);

    std::string case_id;
    CLI::App* gradcam = app.add_subcommand("gradcam", "Grad-CAM heatmaps for one case");
    gradcam->add_option("--case", case_id, "Case id from the manifest")->required();
    gradcam->add_option("--checkpoint", checkpoint, "CNN checkpoint (default: trained tiny_dense)");
    gradcam->add_option("--manifest", manifest, "Cohort manifest");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score a saved model or checkpoint");
    evaluate->add_option("--model", model, "Radiomics model or CNN checkpoint JSON")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--features", features, "Feature CSV for radiomics models");
    evaluate->add_option("--manifest", manifest, "Cohort manifest for checkpoints");

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << detail::version() << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (seed) cfg.seed = *seed;
        if (jobs) cfg.jobs = *jobs;
        if (cases) cfg.cases = *cases;
        if (prevalence) cfg.prevalence = *prevalence;
        if (!presets.empty()) cfg.cnn.presets = presets;
        if (epochs) cfg.cnn.train.epochs = *epochs;
        cfg.validate();

        if (phantom->parsed()) {
            const CohortManifest m = cmd_phantom(cfg, opt);
            const auto positives = std::count_if(m.rows.begin(), m.rows.end(), [](const ManifestRow& r) { return r.label == 1; });
            out << "cohort: " << m.rows.size() << " cases, " << positives << " positive -> "
                << RunLayout{opt.out}.manifest().string() << "\n";
        } else if (extract->parsed()) {
            const ExtractSummary s = cmd_extract(cfg, opt, manifest);
            out << "features: " << s.computed << " computed, " << s.reused << " reused, " << s.failures.size()
                << " failed -> " << RunLayout{opt.out}.features().string() << "\n";
            for (const auto& [id, message] : s.failures) err << "failed " << id << ": " << message << "\n";
            if (!s.failures.empty()) return kExitData;
        } else if (train_radiomics->parsed()) {
            const RadiomicsOutcome r = cmd_train_radiomics(cfg, opt, features);
            out << r.table << "all-positive baseline accuracy: " << fixed(100.0 * r.study.all_positive_accuracy, 2)
                << "%\n";
        } else if (train_cnn->parsed()) {
            const CnnOutcome r = cmd_train_cnn(cfg, opt, manifest);
            out << r.table << "train patients: " << r.train_cases.size() << ", held-out patients: " << r.test_cases.size()
                << "\n";
        } else if (gradcam->parsed()) {
            const GradcamOutcome r = cmd_gradcam(cfg, opt, case_id, checkpoint, manifest);
            for (const SliceHeatmap& s : r.slices)
                out << "slice z=" << s.z << " localization "
                    << (s.localization >= 0.0 ? fixed(s.localization) : std::string("n/a (no lesion on slice)")) << "\n";
            out << r.files.size() << " files -> " << (RunLayout{opt.out}.gradcam() / case_id).string() << "\n";
        } else if (evaluate->parsed()) {
            const nlohmann::json r = cmd_evaluate(cfg, opt, model, features, manifest);
            const nlohmann::json& m = r.at("metrics");
            out << r.at("kind").get<std::string>() << " " << r.at("cases").get<std::size_t>() << " cases: accuracy "
                << fixed(m.at("accuracy").get<double>()) << ", auc "
                << (m.at("auc").is_number() ? fixed(m.at("auc").get<double>()) : std::string("n/a")) << "\n";
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}

}  // namespace fibro::cli
