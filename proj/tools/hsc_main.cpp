#include "hsc/errors.hpp"
#include "hsc/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace {

// Exit codes: 0 ok, 2 config error, 3 IO/missing input, 4 numeric failure.
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Run configuration JSON")->required();
    cmd->add_option("--out", args.out_dir, "Run directory for artifacts")->required();
    cmd->add_option("--seed", args.seed, "Override the config seed");
    cmd->add_option("--threads", args.threads, "Worker threads for parallel stages")
        ->check(CLI::PositiveNumber);
}

hsc::RunConfig resolve_config(const CommonArgs& args) {
    hsc::RunConfig config = hsc::load_run_config(args.config_path);
    if (args.seed) {
        config.seed = *args.seed;
    }
    std::filesystem::create_directories(args.out_dir);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperbolic surface patch sparse coding pipeline"};
    app.require_subcommand(1);

    CommonArgs args;
    std::function<void(const hsc::RunConfig&)> action;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled cohort");
    add_common(synth, args);
    synth->callback([&]() {
        action = [&](const hsc::RunConfig& config) { hsc::run_synth(config, args.out_dir); };
    });

    auto* sample = app.add_subcommand("sample", "Extract ring patches per subject");
    add_common(sample, args);
    sample->callback([&]() {
        action = [&](const hsc::RunConfig& config) {
            hsc::run_sample(config, args.out_dir, args.threads);
        };
    });

    auto* train = app.add_subcommand("train", "Learn the sparse-coding dictionary");
    add_common(train, args);
    train->callback([&]() {
        action = [&](const hsc::RunConfig& config) { hsc::run_train(config, args.out_dir); };
    });

    auto* features = app.add_subcommand("features", "Encode patches and max-pool per subject");
    add_common(features, args);
    features->callback([&]() {
        action = [&](const hsc::RunConfig& config) {
            hsc::run_features(config, args.out_dir, args.threads);
        };
    });

    auto* classify = app.add_subcommand("classify", "Cross-validated AdaBoost classification");
    add_common(classify, args);
    classify->callback([&]() {
        action = [&](const hsc::RunConfig& config) { hsc::run_classify(config, args.out_dir); };
    });

    auto* report = app.add_subcommand("report", "Aggregate evaluations into a metrics CSV");
    add_common(report, args);
    report->callback([&]() {
        action = [&](const hsc::RunConfig& config) { hsc::run_report(config, args.out_dir); };
    });

    CLI11_PARSE(app, argc, argv);

    try {
        action(resolve_config(args));
    } catch (const hsc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const hsc::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const hsc::NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kExitNumeric;
    } catch (const hsc::MeshError& e) {
        std::fprintf(stderr, "mesh error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
