#pragma once

#include "hsc/coding.hpp"
#include "hsc/patches.hpp"
#include "hsc/pipeline.hpp"
#include "hsc/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hsc {

/// Smoothing applied to the TBM field before patch extraction.
struct SmoothingConfig {
    int iterations = 10;
    double step = 0.5;
};

enum class CvProtocol { kfold, nested };

/// Everything a pipeline run needs; hydrated from a JSON config file with a
/// schema_version field, then optionally overridden by CLI flags.
struct RunConfig {
    std::uint64_t seed = 0;
    SynthConfig synth;
    SmoothingConfig smoothing;
    SamplingConfig sampling;
    SccConfig scc;
    int atoms = 200;  // t
    PoolingMode pooling = PoolingMode::signed_max;
    int classifier_rounds = 100;
    std::vector<int> rounds_grid;  // candidates for nested validation ([] = just classifier_rounds)
    CvProtocol protocol = CvProtocol::kfold;
    int folds = 5;

    void validate() const;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);

/// FNV-1a over the file bytes, 16 hex digits; used for manifest content hashes.
std::string content_hash(const std::filesystem::path& path);
std::string content_hash_of_string(const std::string& text);

/// Write-then-rename so readers never observe partial artifacts.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

// Pipeline stages. Each writes its artifacts plus a manifest JSON under
// `out` and returns the paths it produced. Stages look for their inputs in
// the same tree, so chaining them on one directory runs the whole pipeline.
std::vector<std::filesystem::path> run_synth(const RunConfig& config,
                                             const std::filesystem::path& out);
std::vector<std::filesystem::path> run_sample(const RunConfig& config,
                                              const std::filesystem::path& out, int threads = 1);
std::vector<std::filesystem::path> run_train(const RunConfig& config,
                                             const std::filesystem::path& out);
std::vector<std::filesystem::path> run_features(const RunConfig& config,
                                                const std::filesystem::path& out, int threads = 1);
std::vector<std::filesystem::path> run_classify(const RunConfig& config,
                                                const std::filesystem::path& out);
std::vector<std::filesystem::path> run_report(const RunConfig& config,
                                              const std::filesystem::path& out);

/// Subject list of a run directory, from labels.csv.
struct SubjectTable {
    std::vector<std::string> ids;
    std::vector<int> labels;
};
SubjectTable load_labels(const std::filesystem::path& path);

/// Pooled per-subject features as written by run_features.
std::vector<SubjectRecord> load_features_csv(const std::filesystem::path& path);

/// The evaluation result written by run_classify.
EvalReport load_eval_report(const std::filesystem::path& path);

}  // namespace hsc
