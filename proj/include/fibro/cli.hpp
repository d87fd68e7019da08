#pragma once

#include "fibro/error.hpp"
#include "fibro/learners.hpp"
#include "fibro/nnet.hpp"
#include "fibro/phantom.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fibro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// UsageError -> 1, NonFiniteLoss -> 3, every other kind -> 2.
int exit_code(ErrorKind kind) noexcept;

struct CnnSettings {
    std::vector<std::string> presets{"tiny_plain", "tiny_res", "tiny_dense"};
    int slices = 5;
    int side = 64;
    nnet::TrainConfig train;
};

/// Every tunable of a run. Defaults reproduce the reference protocol.
struct RunConfig {
    std::uint64_t seed = 42;
    int cases = 347;
    double prevalence = 0.449;
    PhantomSpec phantom;
    int bin_count = 32;
    double test_frac = 0.10;
    int folds = 5;
    std::vector<learners::ModelKind> models{learners::ModelKind::LassoLogistic, learners::ModelKind::LinearSvm,
                                            learners::ModelKind::RandomForest, learners::ModelKind::Gbt};
    learners::Hyperparameters hyper;
    CnnSettings cnn;
    int jobs = 1;

    /// Throws InvalidSpec.
    void validate() const;
};

/// Full effective configuration (the run directory itself is not part of it).
nlohmann::json to_json(const RunConfig& c);
/// Keys absent from `j` keep the values of `base`. Throws SchemaError or InvalidSpec.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Fixed file names inside one run directory.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.json"; }
    std::filesystem::path timings() const { return root / "timings.json"; }
    std::filesystem::path cohort() const { return root / "cohort"; }
    std::filesystem::path manifest() const { return cohort() / "manifest.csv"; }
    std::filesystem::path features() const { return root / "features.csv"; }
    std::filesystem::path extract_failures() const { return root / "extract_failures.csv"; }
    std::filesystem::path radiomics() const { return root / "radiomics"; }
    std::filesystem::path cnn() const { return root / "cnn"; }
    std::filesystem::path gradcam() const { return root / "gradcam"; }
    std::filesystem::path evaluate() const { return root / "evaluate"; }
};

/// Flags shared by every subcommand.
struct CommandOptions {
    std::filesystem::path out = "run";
    bool resume = false;
    bool force = false;
};

// ------------------------------------------------------------ feature table

struct FeatureTable {
    std::vector<std::string> case_ids;
    learners::DesignMatrix data;
};

/// Header `case_id,label,<feature names>`; values printed with %.17g.
std::string feature_csv_header(const std::vector<std::string>& names);
std::string feature_csv_row(const std::string& case_id, int label, const std::vector<double>& values);
/// Throws SchemaError naming the offending line.
FeatureTable parse_feature_csv(const std::string& text);
FeatureTable load_feature_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------- commands

CohortManifest cmd_phantom(const RunConfig& cfg, const CommandOptions& opt);

struct ExtractSummary {
    std::size_t computed = 0;
    std::size_t reused = 0;
    /// (case id, message) for every case that failed.
    std::vector<std::pair<std::string, std::string>> failures;
};

/// One CSV row per manifest case, in manifest order. With `resume`, rows
/// already present in the output are kept verbatim and only missing cases are
/// computed. Failed cases are listed in extract_failures.csv and left out.
ExtractSummary cmd_extract(const RunConfig& cfg, const CommandOptions& opt,
                           const std::filesystem::path& manifest = {});

struct RadiomicsOutcome {
    learners::StudyResult study;
    std::string table;
    nlohmann::json report;
};

RadiomicsOutcome cmd_train_radiomics(const RunConfig& cfg, const CommandOptions& opt,
                                     const std::filesystem::path& features = {});

struct PatientScore {
    std::string case_id;
    int label = 0;
    std::vector<int> slice_predictions;
    std::vector<double> slice_probabilities;
    int prediction = 0;
    /// Mean slice probability, used for the ROC.
    double probability = 0.0;
};

struct CnnEvaluation {
    std::vector<PatientScore> patients;
    learners::Metrics metrics;
    double slice_accuracy = 0.0;
};

struct CnnModelOutcome {
    std::string preset;
    nnet::Checkpoint checkpoint;
    CnnEvaluation holdout;
};

struct CnnOutcome {
    std::vector<std::string> train_cases;
    std::vector<std::string> test_cases;
    std::vector<CnnModelOutcome> models;
    std::string table;
    nlohmann::json report;
};

/// Patient-level split; every slice of a patient lands on one side.
CnnOutcome cmd_train_cnn(const RunConfig& cfg, const CommandOptions& opt, const std::filesystem::path& manifest = {});

/// Slice majority vote per patient; the patient probability is the mean slice probability.
CnnEvaluation evaluate_patients(const nnet::Network& net, const std::vector<std::string>& case_ids,
                                const std::vector<int>& labels, const std::vector<nnet::SliceSet>& slices, int jobs = 1);

struct SliceHeatmap {
    int z = 0;
    nnet::SliceTransform transform;
    nnet::Tensor image;
    Heatmap heatmap;
    double raw_max = 0.0;
    /// Top-decile heatmap mass inside the dilated lesion; -1 when the lesion misses the slice.
    double localization = -1.0;
};

/// 3D dilation by a Euclidean ball of `radius` voxels.
Mask dilate(const Mask& m, int radius);

/// Output-grid pixels whose source voxel lies in `region` on slice t.z.
std::vector<std::uint8_t> region_on_grid(const Mask& region, const nnet::SliceTransform& t);

/// Heatmaps for the extracted slices of one case, scored against the lesion dilated by 2 voxels.
std::vector<SliceHeatmap> case_heatmaps(const nnet::Network& net, const Volume& v, const Mask& roi, const Mask& lesion,
                                        int slices, int target_class = 1, int jobs = 1);

struct GradcamOutcome {
    std::string case_id;
    std::vector<SliceHeatmap> slices;
    std::vector<std::filesystem::path> files;
};

GradcamOutcome cmd_gradcam(const RunConfig& cfg, const CommandOptions& opt, const std::string& case_id,
                           const std::filesystem::path& checkpoint = {}, const std::filesystem::path& manifest = {});

/// Scores a saved radiomics model on a feature CSV, or a CNN checkpoint on a manifest.
nlohmann::json cmd_evaluate(const RunConfig& cfg, const CommandOptions& opt, const std::filesystem::path& model,
                            const std::filesystem::path& features = {}, const std::filesystem::path& manifest = {});

/// Parses argv-style arguments (without the program name) and runs one
/// subcommand. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fibro::cli
