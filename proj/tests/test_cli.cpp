#include "doctest.h"

#include "fibro/cli.hpp"
#include "fibro/error.hpp"
#include "fibro/radiomics.hpp"
#include "test_helpers.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace fibro;
using namespace fibro::cli;
using fibro::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(int cases = 12) {
    RunConfig c;
    c.cases = cases;
    c.prevalence = 0.5;
    c.phantom = fibro::testing::small_spec();
    c.folds = 2;
    c.test_frac = 0.25;
    c.cnn.side = 16;
    c.cnn.slices = 3;
    c.cnn.train.epochs = 2;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

void write_config(const fs::path& path, const RunConfig& cfg) {
    std::ofstream(path) << to_json(cfg).dump(2);
}

}  // namespace

TEST_CASE("exit codes") {
    CHECK(exit_code(ErrorKind::UsageError) == 1);
    CHECK(exit_code(ErrorKind::IoFailure) == 2);
    CHECK(exit_code(ErrorKind::SchemaError) == 2);
    CHECK(exit_code(ErrorKind::BadMagic) == 2);
    CHECK(exit_code(ErrorKind::NonFiniteLoss) == 3);
}

TEST_CASE("run configuration") {
    const RunConfig defaults;
    CHECK(defaults.cases == 347);
    CHECK(defaults.seed == 42);
    CHECK(defaults.test_frac == 0.10);
    CHECK(defaults.folds == 5);
    CHECK(defaults.cnn.train.batch_size == 2);
    CHECK(defaults.cnn.train.lr_max == 0.01);
    CHECK(plan_cohort(defaults.cases, defaults.prevalence, defaults.seed).labels.size() == 347);
    const auto& labels = plan_cohort(defaults.cases, defaults.prevalence, defaults.seed).labels;
    CHECK(std::count(labels.begin(), labels.end(), 1) == 156);

    const RunConfig c = small_config();
    const RunConfig back = run_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.phantom.dims == c.phantom.dims);

    const RunConfig partial = run_config_from_json(nlohmann::json::parse(R"({"seed": 7, "split": {"folds": 3}})"));
    CHECK(partial.seed == 7);
    CHECK(partial.folds == 3);
    CHECK(partial.cases == 347);

    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"split": {"folds": 1}})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"cnn": {"presets": ["vgg"]}})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"models": ["knn"]})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), Error);
    CHECK_THROWS_AS(run_config_from_json(nlohmann::json::parse("[1, 2]")), Error);
}

TEST_CASE("feature table CSV") {
    const std::vector<std::string> names{"a", "b"};
    const std::vector<double> values{0.1, -1.0 / 3.0};
    const std::string text = feature_csv_header(names) + "\n" + feature_csv_row("c0", 1, values) + "\n" +
                             feature_csv_row("c1", 0, {2.5e-300, 7.0}) + "\n";
    CHECK(text.substr(0, text.find('\n')) == "case_id,label,a,b");
    const FeatureTable t = parse_feature_csv(text);
    CHECK(t.case_ids == std::vector<std::string>{"c0", "c1"});
    CHECK(t.data.y == learners::Labels{1, 0});
    CHECK(t.data.columns == names);
    CHECK(t.data.x(0, 1) == values[1]);
    CHECK(t.data.x(1, 0) == 2.5e-300);

    CHECK_THROWS_AS(parse_feature_csv(""), Error);
    CHECK_THROWS_AS(parse_feature_csv("id,label,a\n"), Error);
    CHECK_THROWS_AS(parse_feature_csv("case_id,label,a\n"), Error);
    CHECK_THROWS_AS(parse_feature_csv("case_id,label,a\nc,1\n"), Error);
    CHECK_THROWS_AS(parse_feature_csv("case_id,label,a\nc,2,1.0\n"), Error);
    CHECK_THROWS_AS(parse_feature_csv("case_id,label,a\nc,1,abc\n"), Error);
    CHECK_THROWS_AS(parse_feature_csv("case_id,label,a\nc,1,1.0x\n"), Error);
}

TEST_CASE("phantom command") {
    TempDir dir("cli_phantom");
    const fs::path out = dir.path() / "run";
    const CliRun first = invoke({"phantom", "--n", "10", "--prevalence", "0.5", "--out", out.string()});
    CHECK(first.code == 0);
    const CohortManifest m = CohortManifest::load(out / "cohort" / "manifest.csv");
    CHECK(m.rows.size() == 10);
    CHECK(std::count_if(m.rows.begin(), m.rows.end(), [](const ManifestRow& r) { return r.label == 1; }) == 5);
    CHECK(fs::exists(out / "config.json"));
    CHECK(fs::exists(out / "timings.json"));

    const CliRun again = invoke({"phantom", "--n", "10", "--prevalence", "0.5", "--out", out.string()});
    CHECK(again.code == 1);
    CHECK(again.err.find("--force") != std::string::npos);
    CHECK(invoke({"phantom", "--n", "10", "--out", out.string(), "--force"}).code == 0);
    CHECK(CohortManifest::load(out / "cohort" / "manifest.csv").rows.size() == 10);
}

TEST_CASE("extract command") {
    TempDir dir("cli_extract");
    CommandOptions opt{dir.path() / "run"};
    RunConfig cfg = small_config(10);
    cmd_phantom(cfg, opt);
    const RunLayout layout{opt.out};

    const ExtractSummary s = cmd_extract(cfg, opt);
    CHECK(s.computed == 10);
    CHECK(s.failures.empty());
    const std::string full = slurp(layout.features());
    const FeatureTable t = load_feature_csv(layout.features());
    CHECK(t.case_ids.size() == 10);
    CHECK(t.data.columns.size() == 111);
    CHECK(t.data.columns == radiomics::feature_names());
    CHECK(t.case_ids[0] == CohortManifest::load(layout.manifest()).rows[0].case_id);

    SUBCASE("refuses to overwrite without a flag") { CHECK_THROWS_AS(cmd_extract(cfg, opt), Error); }

    SUBCASE("resume recomputes only the missing row, byte-identically") {
        std::string text = full;
        const std::size_t row3 = [&] {
            std::size_t pos = 0;
            for (int i = 0; i < 4; ++i) pos = text.find('\n', pos) + 1;
            return pos;
        }();
        text.erase(row3, text.find('\n', row3) + 1 - row3);
        write_text_atomic(layout.features(), text);
        CommandOptions resume = opt;
        resume.resume = true;
        const ExtractSummary r = cmd_extract(cfg, resume);
        CHECK(r.computed == 1);
        CHECK(r.reused == 9);
        CHECK(slurp(layout.features()) == full);
    }

    SUBCASE("a corrupt volume fails alone") {
        const CohortManifest m = CohortManifest::load(layout.manifest());
        write_text_atomic(layout.cohort() / m.rows[2].volume, "not a nifti file");
        write_config(dir.path() / "cfg.json", cfg);
        const CliRun r = invoke({"extract", "--out", opt.out.string(), "--force", "--config", (dir.path() / "cfg.json").string()});
        CHECK(r.code == 2);
        CHECK(r.err.find(m.rows[2].case_id) != std::string::npos);
        const FeatureTable rest = load_feature_csv(layout.features());
        CHECK(rest.case_ids.size() == 9);
        CHECK(std::find(rest.case_ids.begin(), rest.case_ids.end(), m.rows[2].case_id) == rest.case_ids.end());
        CHECK(slurp(layout.extract_failures()).find(m.rows[2].case_id) != std::string::npos);
    }
}

TEST_CASE("train-radiomics command") {
    TempDir dir("cli_radiomics");
    const RunConfig cfg = small_config(24);
    CommandOptions a{dir.path() / "a"}, b{dir.path() / "b"};
    cmd_phantom(cfg, a);
    cmd_extract(cfg, a);
    cmd_phantom(cfg, b);
    cmd_extract(cfg, b);
    CHECK(slurp(RunLayout{a.out}.features()) == slurp(RunLayout{b.out}.features()));

    const RadiomicsOutcome ra = cmd_train_radiomics(cfg, a);
    cmd_train_radiomics(cfg, b);
    REQUIRE(ra.study.reports.size() == 4);
    for (const learners::EvalReport& r : ra.study.reports) {
        CHECK(r.cv_accuracy >= 0.0);
        CHECK(r.cv_accuracy <= 1.0);
        CHECK(r.cv_auc >= 0.0);
        CHECK(r.cv_auc <= 1.0);
    }
    CHECK(std::count(ra.table.begin(), ra.table.end(), '\n') == 6);
    const RunLayout la{a.out}, lb{b.out};
    CHECK(slurp(la.radiomics() / "report.json") == slurp(lb.radiomics() / "report.json"));
    CHECK(slurp(la.radiomics() / "table.md") == slurp(lb.radiomics() / "table.md"));
    for (const char* m : {"lasso_logistic", "linear_svm", "random_forest", "gbt"}) {
        const fs::path file = la.radiomics() / "models" / (std::string(m) + ".json");
        REQUIRE(fs::exists(file));
        CHECK(slurp(file) == slurp(lb.radiomics() / "models" / (std::string(m) + ".json")));
    }
    const nlohmann::json report = nlohmann::json::parse(slurp(la.radiomics() / "report.json"));
    CHECK(report.at("config") == to_json(cfg));
    for (const auto& m : report.at("models")) CHECK(fs::exists(la.root / m.at("model_file").get<std::string>()));

    CHECK_THROWS_AS(cmd_train_radiomics(cfg, a), Error);
    CommandOptions forced = a;
    forced.force = true;
    CHECK_NOTHROW(cmd_train_radiomics(cfg, forced));

    const nlohmann::json ev = cmd_evaluate(cfg, a, la.radiomics() / "models" / "lasso_logistic.json");
    CHECK(ev.at("kind") == "radiomics");
    CHECK(ev.at("cases") == 24);
    CHECK(fs::exists(la.evaluate() / "lasso_logistic.json"));
}

TEST_CASE("train-cnn, gradcam and evaluate commands") {
    TempDir dir("cli_cnn");
    const RunConfig cfg = small_config(12);
    CommandOptions a{dir.path() / "a"}, b{dir.path() / "b"};
    cmd_phantom(cfg, a);
    cmd_phantom(cfg, b);
    const RunLayout la{a.out}, lb{b.out};

    const CnnOutcome r = cmd_train_cnn(cfg, a);
    CHECK(r.models.size() == 3);
    CHECK(std::count(r.table.begin(), r.table.end(), '\n') == 5);
    std::set<std::string> train(r.train_cases.begin(), r.train_cases.end());
    for (const std::string& id : r.test_cases) CHECK(train.count(id) == 0);
    CHECK(train.size() + r.test_cases.size() == 12);
    for (const CnnModelOutcome& m : r.models) {
        CHECK(m.checkpoint.curve.size() == 2);
        CHECK(m.holdout.patients.size() == r.test_cases.size());
        for (const PatientScore& p : m.holdout.patients) CHECK(p.slice_predictions.size() == 3);
    }

    SUBCASE("deterministic checkpoints and reports") {
        cmd_train_cnn(cfg, b);
        CHECK(slurp(la.cnn() / "report.json") == slurp(lb.cnn() / "report.json"));
        for (const std::string& p : nnet::preset_names())
            CHECK(slurp(la.cnn() / "checkpoints" / (p + ".json")) == slurp(lb.cnn() / "checkpoints" / (p + ".json")));
    }

    SUBCASE("resume from a partial checkpoint") {
        RunConfig one = cfg;
        one.cnn.presets = {"tiny_res"};
        const nlohmann::json full = nlohmann::json::parse(slurp(la.cnn() / "checkpoints" / "tiny_res.json"));
        // Rebuild the epoch-1 state the trainer would have saved before an interruption.
        const nnet::Checkpoint done = nnet::checkpoint_from_json(full);
        std::vector<nnet::Sample> samples;
        const CohortManifest m = CohortManifest::load(lb.manifest());
        for (const std::string& id : r.train_cases)
            for (const ManifestRow& row : m.rows)
                if (row.case_id == id)
                    for (nnet::Tensor& img : nnet::extract_slices(load_volume(lb.cohort() / row.volume),
                                                                  load_mask(lb.cohort() / row.roi), 3, 16)
                                                 .images)
                        samples.push_back({std::move(img), row.label});
        nnet::Checkpoint partial;
        nnet::train(samples, done.spec, done.config, [&](const nnet::Checkpoint& ck) {
            if (ck.curve.size() == 1) partial = ck;
        });
        fs::create_directories(lb.cnn() / "checkpoints");
        write_text_atomic(lb.cnn() / "checkpoints" / "tiny_res.partial.json", nnet::to_json(partial).dump(2) + "\n");
        CommandOptions resume = b;
        resume.resume = true;
        cmd_train_cnn(one, resume);
        CHECK(slurp(lb.cnn() / "checkpoints" / "tiny_res.json") == slurp(la.cnn() / "checkpoints" / "tiny_res.json"));
        CHECK_FALSE(fs::exists(lb.cnn() / "checkpoints" / "tiny_res.partial.json"));
    }

    SUBCASE("gradcam on a positive case") {
        const CohortManifest m = CohortManifest::load(la.manifest());
        const auto pos = std::find_if(m.rows.begin(), m.rows.end(), [](const ManifestRow& row) { return row.label == 1; });
        REQUIRE(pos != m.rows.end());
        const GradcamOutcome g = cmd_gradcam(cfg, a, pos->case_id);
        CHECK(g.slices.size() == 3);
        CHECK(g.files.size() == 6);
        for (const fs::path& f : g.files) CHECK(fs::exists(f));
        const CliRun printed = invoke({"gradcam", "--out", a.out.string(), "--case", pos->case_id, "--force"});
        CHECK(printed.code == 0);
        CHECK(printed.out.find("localization") != std::string::npos);

        nnet::Checkpoint ck = nnet::checkpoint_from_json(nlohmann::json::parse(slurp(la.cnn() / "checkpoints" / "tiny_dense.json")));
        const auto head = static_cast<std::size_t>(ck.network().param_index(ck.spec.layers.size() - 1));
        for (std::size_t k : {head, head + 1}) std::fill(ck.params[k].values().begin(), ck.params[k].values().end(), 0.0);
        const fs::path zeroed = dir.path() / "zeroed.json";
        write_text_atomic(zeroed, nnet::to_json(ck).dump());
        CommandOptions forced = a;
        forced.force = true;
        const GradcamOutcome z = cmd_gradcam(cfg, forced, pos->case_id, zeroed);
        for (const SliceHeatmap& s : z.slices) {
            CHECK(s.raw_max == 0.0);
            for (double v : s.heatmap.values()) CHECK(v == 0.0);
        }
        const std::string pgm = slurp(z.files[0]);
        CHECK(std::all_of(pgm.end() - 16 * 16, pgm.end(), [](char c) { return c == 0; }));
    }

    SUBCASE("evaluate a checkpoint") {
        const nlohmann::json ev = cmd_evaluate(cfg, a, la.cnn() / "checkpoints" / "tiny_plain.json");
        CHECK(ev.at("kind") == "cnn");
        CHECK(ev.at("cases") == 12);
        CHECK(ev.at("metrics").at("patients").size() == 12);
    }
}

TEST_CASE("dilation and grid regions") {
    Mask m(Dims{7, 7, 7});
    m.set(3, 3, 3);
    const Mask d = dilate(m, 2);
    CHECK(d.count() == 33);
    CHECK(d.at(5, 3, 3));
    CHECK(d.at(4, 4, 3));
    CHECK_FALSE(d.at(5, 4, 3));
    CHECK(dilate(m, 0) == m);

    const nnet::SliceTransform t{3, 2, 2, 4, 4, 3};
    const std::vector<std::uint8_t> grid = region_on_grid(d, t);
    CHECK(std::count(grid.begin(), grid.end(), 1) == 9);
}

TEST_CASE("cli usage and error paths") {
    TempDir dir("cli_errors");
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"--help"}).code == 0);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({"phantom", "--jobs", "0"}).code == 1);
    CHECK(invoke({"gradcam"}).code == 1);
    CHECK(invoke({"evaluate", "--model", (dir.path() / "missing.json").string()}).code == 1);
    CHECK(invoke({"extract", "--out", (dir.path() / "empty").string()}).code == 2);

    std::ofstream(dir.path() / "bad.json") << "{\"split\": {\"folds\": 0}}";
    CHECK(invoke({"phantom", "--config", (dir.path() / "bad.json").string(), "--out", (dir.path() / "x").string()}).code == 2);

    RunConfig diverge = small_config(8);
    diverge.cnn.presets = {"tiny_plain"};
    diverge.cnn.train.lr_max = 1e12;
    diverge.cnn.train.epochs = 20;
    write_config(dir.path() / "diverge.json", diverge);
    const std::string out = (dir.path() / "d").string();
    const std::string config = (dir.path() / "diverge.json").string();
    REQUIRE(invoke({"phantom", "--config", config, "--out", out}).code == 0);
    const CliRun r = invoke({"train-cnn", "--config", config, "--out", out});
    CHECK(r.code == 3);
    CHECK(r.err.find("NonFiniteLoss") != std::string::npos);
}
