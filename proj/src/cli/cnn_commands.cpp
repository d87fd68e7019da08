#include "run_dir.hpp"

#include "fibro/parallel.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <set>

namespace fibro::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<nnet::SliceSet> load_slices(const CohortManifest& cohort, const fs::path& base, int count, int side, int jobs) {
    std::vector<nnet::SliceSet> out(cohort.rows.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        const ManifestRow& row = cohort.rows[i];
        out[i] = nnet::extract_slices(load_volume(base / row.volume), load_mask(base / row.roi), count, side);
    });
    return out;
}

json patients_json(const std::vector<PatientScore>& patients) {
    json out = json::array();
    for (const PatientScore& p : patients)
        out.push_back({{"case_id", p.case_id},
                       {"label", p.label},
                       {"prediction", p.prediction},
                       {"probability", p.probability},
                       {"slice_predictions", p.slice_predictions},
                       {"slice_probabilities", p.slice_probabilities}});
    return out;
}

json evaluation_json(const CnnEvaluation& e) {
    json j = learners::to_json(e.metrics);
    j["slice_accuracy"] = e.slice_accuracy;
    j["patients"] = patients_json(e.patients);
    return j;
}

json curve_json(const std::vector<nnet::EpochStats>& curve) {
    json out = json::array();
    for (const nnet::EpochStats& e : curve)
        out.push_back(
            {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"loss_se", e.loss_se}, {"accuracy", e.accuracy}});
    return out;
}

std::string percent(double v) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

std::string cnn_table(const std::vector<CnnModelOutcome>& models) {
    // Best values are judged on the printed (two-decimal) percentages.
    auto shown = [](double v) { return std::round(1e4 * v) / 1e2; };
    double best_acc = -1.0, best_auc = -1.0;
    for (const CnnModelOutcome& m : models) {
        best_acc = std::max(best_acc, shown(m.holdout.metrics.accuracy));
        if (std::isfinite(m.holdout.metrics.auc)) best_auc = std::max(best_auc, shown(m.holdout.metrics.auc));
    }
    auto cell = [&](double v, double best) {
        return std::isfinite(v) && shown(v) == best ? "**" + percent(v) + "**" : percent(v);
    };
    std::string out = "| Model | Accuracy (%) | AUC (%) |\n|---|---|---|\n";
    for (const CnnModelOutcome& m : models)
        out += "| " + m.preset + " | " + cell(m.holdout.metrics.accuracy, best_acc) + " | " +
               cell(m.holdout.metrics.auc, best_auc) + " |\n";
    return out;
}

bool both_classes(const learners::Labels& y) {
    return std::find(y.begin(), y.end(), 0) != y.end() && std::find(y.begin(), y.end(), 1) != y.end();
}

const ManifestRow& find_case(const CohortManifest& cohort, const std::string& case_id) {
    for (const ManifestRow& row : cohort.rows)
        if (row.case_id == case_id) return row;
    throw Error(ErrorKind::UsageError, "case '" + case_id + "' is not in the manifest");
}

}  // namespace

CnnEvaluation evaluate_patients(const nnet::Network& net, const std::vector<std::string>& case_ids,
                                const std::vector<int>& labels, const std::vector<nnet::SliceSet>& slices, int jobs) {
    if (case_ids.size() != labels.size() || case_ids.size() != slices.size())
        throw Error(ErrorKind::ShapeMismatch, "case ids, labels and slice sets differ in length");
    if (case_ids.empty()) throw Error(ErrorKind::EmptyList, "no patients to evaluate");
    CnnEvaluation out;
    out.patients.resize(case_ids.size());
    parallel_for(case_ids.size(), jobs, [&](std::size_t i) {
        PatientScore& p = out.patients[i];
        p.case_id = case_ids[i];
        p.label = labels[i];
        p.slice_probabilities = nnet::predict_proba(net, slices[i].images);
        for (double prob : p.slice_probabilities) p.slice_predictions.push_back(prob >= 0.5 ? 1 : 0);
        p.prediction = nnet::majority_vote(p.slice_predictions);
        double sum = 0.0;
        for (double prob : p.slice_probabilities) sum += prob;
        p.probability = sum / static_cast<double>(p.slice_probabilities.size());
    });

    std::vector<double> predictions, probabilities;
    double slice_correct = 0.0, slice_total = 0.0;
    for (const PatientScore& p : out.patients) {
        predictions.push_back(p.prediction);
        probabilities.push_back(p.probability);
        for (int s : p.slice_predictions) slice_correct += s == p.label;
        slice_total += static_cast<double>(p.slice_predictions.size());
    }
    out.metrics.confusion = learners::confusion(predictions, labels);
    out.metrics.accuracy = learners::accuracy(out.metrics.confusion);
    if (both_classes(labels)) {
        out.metrics.auc = learners::auc(probabilities, labels);
        out.metrics.roc = learners::roc_curve(probabilities, labels);
    } else {
        out.metrics.auc = std::numeric_limits<double>::quiet_NaN();
    }
    out.slice_accuracy = slice_correct / slice_total;
    return out;
}

CnnOutcome cmd_train_cnn(const RunConfig& cfg, const CommandOptions& opt, const fs::path& manifest) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    const fs::path manifest_path = detail::resolve(manifest, layout.manifest());
    const CohortManifest cohort = CohortManifest::load(manifest_path);
    detail::prepare_output(layout.cnn(), opt, true);
    const fs::path ck_dir = layout.cnn() / "checkpoints";
    fs::create_directories(ck_dir);

    const std::vector<nnet::SliceSet> slices =
        load_slices(cohort, manifest_path.parent_path(), cfg.cnn.slices, cfg.cnn.side, cfg.jobs);
    learners::Labels labels;
    for (const ManifestRow& row : cohort.rows) labels.push_back(row.label);
    const learners::Split split = learners::stratified_holdout_then_kfold(labels, cfg.test_frac, cfg.folds, cfg.seed);

    learners::Indices train_rows;
    for (const learners::Indices& f : split.folds) train_rows.insert(train_rows.end(), f.begin(), f.end());
    std::sort(train_rows.begin(), train_rows.end());
    const std::set<std::size_t> test_set(split.test.begin(), split.test.end());
    for (std::size_t r : train_rows)
        if (test_set.count(r)) throw Error(ErrorKind::InvalidSpec, "patient " + cohort.rows[r].case_id + " is on both sides");

    CnnOutcome out;
    std::vector<nnet::Sample> samples;
    for (std::size_t r : train_rows) {
        out.train_cases.push_back(cohort.rows[r].case_id);
        for (const nnet::Tensor& img : slices[r].images) samples.push_back({img, labels[r]});
    }
    std::vector<std::string> test_ids;
    learners::Labels test_labels;
    std::vector<nnet::SliceSet> test_slices;
    for (std::size_t r : split.test) {
        test_ids.push_back(cohort.rows[r].case_id);
        test_labels.push_back(labels[r]);
        test_slices.push_back(slices[r]);
    }
    out.test_cases = test_ids;

    out.models.resize(cfg.cnn.presets.size());
    parallel_for(cfg.cnn.presets.size(), cfg.jobs, [&](std::size_t p) {
        const std::string& name = cfg.cnn.presets[p];
        const nnet::NetSpec spec = nnet::preset(name, cfg.cnn.side);
        nnet::TrainConfig tc = cfg.cnn.train;
        const auto& names = nnet::preset_names();
        tc.seed = derive_seed(cfg.seed, 2000 + static_cast<std::uint64_t>(std::find(names.begin(), names.end(), name) - names.begin()));
        const fs::path final_path = ck_dir / (name + ".json");
        const fs::path partial_path = ck_dir / (name + ".partial.json");

        CnnModelOutcome& m = out.models[p];
        m.preset = name;
        bool done = false;
        if (opt.resume && fs::exists(final_path)) {
            m.checkpoint = nnet::checkpoint_from_json(detail::read_json(final_path));
            if (!(m.checkpoint.spec == spec) || nnet::to_json(m.checkpoint.config) != nnet::to_json(tc))
                throw Error(ErrorKind::InvalidSpec, final_path.string() + " was trained with a different configuration");
            done = static_cast<int>(m.checkpoint.curve.size()) == tc.epochs;
        }
        if (!done) {
            std::optional<nnet::Checkpoint> partial;
            if (opt.resume && fs::exists(partial_path))
                partial = nnet::checkpoint_from_json(detail::read_json(partial_path));
            const nnet::EpochCallback on_epoch = [&](const nnet::Checkpoint& ck) {
                detail::write_json(partial_path, nnet::to_json(ck));
                const nnet::EpochStats& e = ck.curve.back();
                char line[160];
                std::snprintf(line, sizeof line, "train-cnn %s epoch %d/%d lr %.5f loss %.4f se %.4f acc %.3f",
                              name.c_str(), e.epoch + 1, tc.epochs, e.lr, e.loss, e.loss_se, e.accuracy);
                detail::progress(line);
            };
            m.checkpoint = nnet::train(samples, spec, tc, on_epoch, partial ? &*partial : nullptr);
            detail::write_json(final_path, nnet::to_json(m.checkpoint));
            std::error_code ec;
            fs::remove(partial_path, ec);
        }
        m.holdout = evaluate_patients(m.checkpoint.network(), test_ids, test_labels, test_slices);
    });

    out.table = cnn_table(out.models);
    const fs::path table_file = layout.cnn() / "table.md";
    write_text_atomic(table_file, out.table);
    json models = json::array();
    for (const CnnModelOutcome& m : out.models)
        models.push_back({{"preset", m.preset},
                          {"checkpoint", detail::relative_to(ck_dir / (m.preset + ".json"), layout.root)},
                          {"train_seed", m.checkpoint.config.seed},
                          {"curve", curve_json(m.checkpoint.curve)},
                          {"holdout", evaluation_json(m.holdout)}});
    out.report = {{"tool", "fibro"},
                  {"version", detail::version()},
                  {"config", to_json(cfg)},
                  {"manifest", detail::relative_to(manifest_path, layout.root)},
                  {"split", {{"train", out.train_cases}, {"test", out.test_cases}}},
                  {"train_slices", samples.size()},
                  {"models", models},
                  {"table", detail::relative_to(table_file, layout.root)}};
    detail::write_json(layout.cnn() / "report.json", out.report);
    detail::echo_config(layout, cfg);
    detail::record_timing(layout, "train-cnn", clock.seconds());
    return out;
}

Mask dilate(const Mask& m, int radius) {
    const Dims d = m.dims();
    Mask out(d);
    std::vector<std::array<int, 3>> ball;
    for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                if (dx * dx + dy * dy + dz * dz <= radius * radius) ball.push_back({dx, dy, dz});
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                for (const auto& [dx, dy, dz] : ball)
                    if (d.contains(x + dx, y + dy, z + dz)) out.set(x + dx, y + dy, z + dz);
            }
    return out;
}

std::vector<std::uint8_t> region_on_grid(const Mask& region, const nnet::SliceTransform& t) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(t.side) * static_cast<std::size_t>(t.side), 0);
    for (int r = 0; r < t.side; ++r)
        for (int c = 0; c < t.side; ++c) {
            const auto [x, y] = t.source_voxel(r, c);
            out[static_cast<std::size_t>(r) * t.side + c] = region.at(x, y, t.z) ? 1 : 0;
        }
    return out;
}

std::vector<SliceHeatmap> case_heatmaps(const nnet::Network& net, const Volume& v, const Mask& roi, const Mask& lesion,
                                        int slices, int target_class, int jobs) {
    require_aligned(v, lesion);
    const nnet::SliceSet set = nnet::extract_slices(v, roi, slices, net.spec().side);
    const Mask region = dilate(lesion, 2);
    std::vector<SliceHeatmap> out(set.images.size());
    parallel_for(out.size(), jobs, [&](std::size_t i) {
        SliceHeatmap& s = out[i];
        s.transform = set.transforms[i];
        s.z = s.transform.z;
        s.image = set.images[i];
        s.heatmap = nnet::gradcam(net, s.image, target_class, &s.raw_max);
        const std::vector<std::uint8_t> grid = region_on_grid(region, s.transform);
        if (std::find(grid.begin(), grid.end(), 1) != grid.end()) s.localization = nnet::top_decile_mass_inside(s.heatmap, grid);
    });
    return out;
}

GradcamOutcome cmd_gradcam(const RunConfig& cfg, const CommandOptions& opt, const std::string& case_id,
                           const fs::path& checkpoint, const fs::path& manifest) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    fs::path ck_path = checkpoint;
    if (ck_path.empty()) {
        std::vector<std::string> order{"tiny_dense"};
        order.insert(order.end(), cfg.cnn.presets.begin(), cfg.cnn.presets.end());
        for (const std::string& name : order)
            if (fs::exists(layout.cnn() / "checkpoints" / (name + ".json"))) {
                ck_path = layout.cnn() / "checkpoints" / (name + ".json");
                break;
            }
        if (ck_path.empty()) throw Error(ErrorKind::UsageError, "no checkpoint found; run train-cnn or pass --checkpoint");
    }
    const nnet::Checkpoint ck = nnet::checkpoint_from_json(detail::read_json(ck_path));
    const nnet::Network net = ck.network();
    const fs::path manifest_path = detail::resolve(manifest, layout.manifest());
    const CohortManifest cohort = CohortManifest::load(manifest_path);
    const ManifestRow& row = find_case(cohort, case_id);
    const fs::path base = manifest_path.parent_path();

    const fs::path dir = layout.gradcam() / case_id;
    detail::prepare_output(dir, opt, true);
    GradcamOutcome out;
    out.case_id = case_id;
    out.slices = case_heatmaps(net, load_volume(base / row.volume), load_mask(base / row.roi), load_mask(base / row.lesion),
                               cfg.cnn.slices, 1, cfg.jobs);

    json slices = json::array();
    for (const SliceHeatmap& s : out.slices) {
        char stem[64];
        std::snprintf(stem, sizeof stem, "%s_z%03d", ck.spec.name.c_str(), s.z);
        const fs::path heat = dir / (std::string(stem) + "_heatmap.pgm");
        const fs::path overlay = dir / (std::string(stem) + "_overlay.pgm");
        write_file_atomic(heat, write_pgm(s.heatmap));
        std::vector<double> blend(s.image.size());
        for (std::size_t k = 0; k < blend.size(); ++k) blend[k] = 0.5 * s.image[k] + 0.5 * s.heatmap.values()[k];
        write_file_atomic(overlay, write_pgm(Heatmap(s.heatmap.height(), s.heatmap.width(), std::move(blend))));
        out.files.push_back(heat);
        out.files.push_back(overlay);
        json entry{{"z", s.z},
                   {"raw_max", s.raw_max},
                   {"heatmap", detail::relative_to(heat, layout.root)},
                   {"overlay", detail::relative_to(overlay, layout.root)}};
        entry["localization"] = s.localization >= 0.0 ? json(s.localization) : json(nullptr);
        slices.push_back(entry);
    }
    const json report{{"tool", "fibro"},
                      {"version", detail::version()},
                      {"case_id", case_id},
                      {"label", row.label},
                      {"checkpoint", detail::relative_to(ck_path, layout.root)},
                      {"target_class", 1},
                      {"lesion_dilation", 2},
                      {"slices", slices}};
    detail::write_json(dir / "scores.json", report);
    detail::record_timing(layout, "gradcam", clock.seconds());
    return out;
}

json cmd_evaluate(const RunConfig& cfg, const CommandOptions& opt, const fs::path& model, const fs::path& features,
                  const fs::path& manifest) {
    cfg.validate();
    const RunLayout layout{opt.out};
    const detail::Stopwatch clock;
    const json j = detail::read_json(model);
    const std::string format = j.value("format", "");
    json report{{"tool", "fibro"}, {"version", detail::version()}, {"model", detail::relative_to(model, layout.root)}};

    if (format == learners::kModelFormat) {
        const learners::Model m = learners::model_from_json(j);
        const fs::path table_path = detail::resolve(features, layout.features());
        const FeatureTable table = load_feature_csv(table_path);
        if (table.data.columns != m.columns)
            throw Error(ErrorKind::SchemaError, "feature columns differ from the model's training columns");
        const Eigen::VectorXd proba = m.predict_proba(table.data.x);
        const learners::Metrics metrics =
            learners::evaluate({proba.data(), proba.data() + proba.size()}, table.data.y);
        report["kind"] = "radiomics";
        report["model_kind"] = learners::to_string(m.kind);
        report["features"] = detail::relative_to(table_path, layout.root);
        report["cases"] = table.case_ids.size();
        report["metrics"] = learners::to_json(metrics);
    } else if (format == nnet::kCheckpointFormat) {
        const nnet::Checkpoint ck = nnet::checkpoint_from_json(j);
        const fs::path manifest_path = detail::resolve(manifest, layout.manifest());
        const CohortManifest cohort = CohortManifest::load(manifest_path);
        const std::vector<nnet::SliceSet> slices =
            load_slices(cohort, manifest_path.parent_path(), cfg.cnn.slices, ck.spec.side, cfg.jobs);
        std::vector<std::string> ids;
        std::vector<int> labels;
        for (const ManifestRow& row : cohort.rows) {
            ids.push_back(row.case_id);
            labels.push_back(row.label);
        }
        report["kind"] = "cnn";
        report["preset"] = ck.spec.name;
        report["manifest"] = detail::relative_to(manifest_path, layout.root);
        report["cases"] = ids.size();
        report["metrics"] = evaluation_json(evaluate_patients(ck.network(), ids, labels, slices, cfg.jobs));
    } else {
        throw Error(ErrorKind::SchemaError, model.string() + " is neither a model nor a checkpoint");
    }

    const fs::path dest = layout.evaluate() / (model.stem().string() + ".json");
    detail::prepare_output(dest, opt, false);
    detail::write_json(dest, report);
    detail::record_timing(layout, "evaluate", clock.seconds());
    return report;
}

}  // namespace fibro::cli
