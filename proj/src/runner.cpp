#include "hsc/runner.hpp"

#include "hsc/errors.hpp"
#include "hsc/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace hsc {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::validate() const {
    synth.validate();
    sampling.validate();
    scc.validate();
    if (smoothing.iterations < 0 || !(smoothing.step > 0.0 && smoothing.step <= 1.0)) {
        throw ConfigError("RunConfig: smoothing needs iterations >= 0 and step in (0, 1]");
    }
    if (atoms < 1) {
        throw ConfigError("RunConfig: atoms must be >= 1");
    }
    if (classifier_rounds < 1) {
        throw ConfigError("RunConfig: classifier_rounds must be >= 1");
    }
    for (int r : rounds_grid) {
        if (r < 1) {
            throw ConfigError("RunConfig: rounds_grid entries must be >= 1");
        }
    }
    if (protocol == CvProtocol::kfold && folds < 2) {
        throw ConfigError("RunConfig: folds must be >= 2");
    }
}

namespace {

template <typename T>
void read_field(const json& object, const char* key, T& out) {
    if (object.contains(key)) {
        try {
            out = object.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("RunConfig: bad value for '") + key + "'");
        }
    }
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("RunConfig: invalid JSON: ") + e.what());
    }
    if (!root.contains("schema_version") || !root.at("schema_version").is_number_integer() ||
        root.at("schema_version").get<int>() != 1) {
        throw ConfigError("RunConfig: missing or unsupported schema_version (expected 1)");
    }

    RunConfig config;
    read_field(root, "seed", config.seed);
    if (root.contains("synth")) {
        const json& s = root.at("synth");
        read_field(s, "subjects_per_class", config.synth.subjects_per_class);
        read_field(s, "grid_rows", config.synth.grid_rows);
        read_field(s, "grid_cols", config.synth.grid_cols);
        read_field(s, "param_half_width", config.synth.param_half_width);
        if (s.contains("effect_center")) {
            std::vector<double> center;
            try {
                center = s.at("effect_center").get<std::vector<double>>();
            } catch (const json::exception&) {
                throw ConfigError("RunConfig: effect_center must be [u, v]");
            }
            if (center.size() != 2) {
                throw ConfigError("RunConfig: effect_center must be [u, v]");
            }
            config.synth.effect_center = DiskPoint{center[0], center[1]};
        }
        read_field(s, "effect_radius", config.synth.effect_radius);
        read_field(s, "effect_size", config.synth.effect_size);
        read_field(s, "noise_sigma", config.synth.noise_sigma);
    }
    if (root.contains("smoothing")) {
        const json& s = root.at("smoothing");
        read_field(s, "iterations", config.smoothing.iterations);
        read_field(s, "step", config.smoothing.step);
    }
    if (root.contains("sampling")) {
        const json& s = root.at("sampling");
        read_field(s, "target_patch_count", config.sampling.target_patch_count);
        read_field(s, "patch_dim", config.sampling.patch_dim);
        read_field(s, "stop_radius", config.sampling.stop_radius);
        read_field(s, "require_full_coverage", config.sampling.require_full_coverage);
    }
    if (root.contains("scc")) {
        const json& s = root.at("scc");
        read_field(s, "lambda", config.scc.lambda);
        read_field(s, "epochs", config.scc.epochs);
        read_field(s, "cd_support_passes", config.scc.cd_support_passes);
        read_field(s, "normalize_inputs", config.scc.normalize_inputs);
        read_field(s, "shuffle", config.scc.shuffle);
        read_field(s, "atoms", config.atoms);
    }
    if (root.contains("pooling")) {
        if (!root.at("pooling").is_string()) {
            throw ConfigError("RunConfig: pooling must be 'signed' or 'absolute'");
        }
        const std::string mode = root.at("pooling").get<std::string>();
        if (mode == "signed") {
            config.pooling = PoolingMode::signed_max;
        } else if (mode == "absolute") {
            config.pooling = PoolingMode::absolute_max;
        } else {
            throw ConfigError("RunConfig: pooling must be 'signed' or 'absolute'");
        }
    }
    if (root.contains("classifier")) {
        const json& c = root.at("classifier");
        read_field(c, "rounds", config.classifier_rounds);
        read_field(c, "rounds_grid", config.rounds_grid);
    }
    if (root.contains("cv")) {
        const json& c = root.at("cv");
        if (c.contains("protocol")) {
            if (!c.at("protocol").is_string()) {
                throw ConfigError("RunConfig: cv.protocol must be 'kfold' or 'nested'");
            }
            const std::string protocol = c.at("protocol").get<std::string>();
            if (protocol == "kfold") {
                config.protocol = CvProtocol::kfold;
            } else if (protocol == "nested") {
                config.protocol = CvProtocol::nested;
            } else {
                throw ConfigError("RunConfig: cv.protocol must be 'kfold' or 'nested'");
            }
        }
        read_field(c, "folds", config.folds);
    }
    config.validate();
    return config;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("config file not found: " + path.string());
    }
    std::stringstream buffer;
    buffer << file.rdbuf();
    return run_config_from_json(buffer.str());
}

std::string run_config_to_json(const RunConfig& config) {
    json root;
    root["schema_version"] = 1;
    root["seed"] = config.seed;
    root["synth"] = {{"subjects_per_class", config.synth.subjects_per_class},
                     {"grid_rows", config.synth.grid_rows},
                     {"grid_cols", config.synth.grid_cols},
                     {"param_half_width", config.synth.param_half_width},
                     {"effect_center", {config.synth.effect_center.u, config.synth.effect_center.v}},
                     {"effect_radius", config.synth.effect_radius},
                     {"effect_size", config.synth.effect_size},
                     {"noise_sigma", config.synth.noise_sigma}};
    root["smoothing"] = {{"iterations", config.smoothing.iterations},
                         {"step", config.smoothing.step}};
    root["sampling"] = {{"target_patch_count", config.sampling.target_patch_count},
                        {"patch_dim", config.sampling.patch_dim},
                        {"stop_radius", config.sampling.stop_radius},
                        {"require_full_coverage", config.sampling.require_full_coverage}};
    root["scc"] = {{"lambda", config.scc.lambda},
                   {"epochs", config.scc.epochs},
                   {"cd_support_passes", config.scc.cd_support_passes},
                   {"normalize_inputs", config.scc.normalize_inputs},
                   {"shuffle", config.scc.shuffle},
                   {"atoms", config.atoms}};
    root["pooling"] = config.pooling == PoolingMode::signed_max ? "signed" : "absolute";
    root["classifier"] = {{"rounds", config.classifier_rounds},
                          {"rounds_grid", config.rounds_grid}};
    root["cv"] = {{"protocol", config.protocol == CvProtocol::kfold ? "kfold" : "nested"},
                  {"folds", config.folds}};
    return root.dump(2);
}

std::string content_hash_of_string(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
    return buffer;
}

std::string content_hash(const fs::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("content_hash: cannot open " + path.string());
    }
    std::stringstream buffer;
    buffer << file.rdbuf();
    return content_hash_of_string(buffer.str());
}

void atomic_write(const fs::path& path, const std::string& contents) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream file(tmp, std::ios::binary);
        if (!file) {
            throw IoError("atomic_write: cannot open " + tmp.string());
        }
        file << contents;
        if (!file) {
            throw IoError("atomic_write: failed writing " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

namespace {

/// Runs a writer against a sibling temp path, then renames into place.
template <typename Writer>
void atomic_artifact(const fs::path& path, Writer&& writer) {
    const fs::path tmp = path.string() + ".tmp";
    writer(tmp);
    fs::rename(tmp, path);
}

}  // namespace

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, count);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& thread : pool) {
        thread.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

class ManifestBuilder {
public:
    ManifestBuilder(std::string command, const RunConfig& config)
        : command_(std::move(command)),
          seed_(config.seed),
          config_hash_(content_hash_of_string(run_config_to_json(config))),
          started_(std::chrono::steady_clock::now()) {}

    void add_input(const fs::path& path) { inputs_[path.string()] = content_hash(path); }
    void add_output(const fs::path& path) { outputs_.push_back(path.string()); }

    void write(const fs::path& path) const {
        json manifest;
        manifest["command"] = command_;
        manifest["schema_version"] = 1;
        manifest["seed"] = seed_;
        manifest["config_hash"] = config_hash_;
        manifest["inputs"] = inputs_;
        manifest["outputs"] = outputs_;
        manifest["wall_time_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        atomic_write(path, manifest.dump(2) + "\n");
    }

private:
    std::string command_;
    std::uint64_t seed_;
    std::string config_hash_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point started_;
};

void require_directory(const fs::path& path, const std::string& hint) {
    if (!fs::is_directory(path)) {
        throw IoError("missing input directory " + path.string() + " (" + hint + ")");
    }
}

void require_file(const fs::path& path, const std::string& hint) {
    if (!fs::is_regular_file(path)) {
        throw IoError("missing input file " + path.string() + " (" + hint + ")");
    }
}

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

double parse_csv_number(const std::string& cell, const char* who, long line_no) {
    try {
        std::size_t consumed = 0;
        const double value = std::stod(cell, &consumed);
        if (consumed != cell.size()) {
            throw std::invalid_argument(cell);
        }
        return value;
    } catch (const std::exception&) {
        throw ParseError(std::string(who) + ": bad numeric cell '" + cell + "'", line_no);
    }
}

}  // namespace

SubjectTable load_labels(const fs::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_labels: cannot open " + path.string());
    }
    SubjectTable table;
    std::string line;
    long line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty() || line_no == 1) {
            continue;  // header
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("load_labels: expected 'subject_id,label'", line_no);
        }
        table.ids.push_back(line.substr(0, comma));
        table.labels.push_back(
            static_cast<int>(parse_csv_number(line.substr(comma + 1), "load_labels", line_no)));
    }
    if (table.ids.empty()) {
        throw IoError("load_labels: no subjects in " + path.string());
    }
    return table;
}

std::vector<fs::path> run_synth(const RunConfig& config, const fs::path& out) {
    ManifestBuilder manifest("synth", config);
    SynthConfig synth = config.synth;
    synth.seed = derive_seed(config.seed, std::string_view("synth"));
    const SynthDataset dataset = generate(synth);

    const fs::path mesh_dir = out / "meshes";
    fs::create_directories(mesh_dir);
    std::vector<fs::path> outputs;
    for (std::size_t s = 0; s < dataset.surfaces.size(); ++s) {
        const fs::path mesh_path = mesh_dir / (dataset.subject_ids[s] + ".hsm");
        atomic_artifact(mesh_path,
                        [&](const fs::path& tmp) { save_surface(dataset.surfaces[s], tmp); });
        manifest.add_output(mesh_path);
        outputs.push_back(mesh_path);
    }

    std::string labels = "subject_id,label\n";
    for (std::size_t s = 0; s < dataset.subject_ids.size(); ++s) {
        labels += dataset.subject_ids[s] + "," + std::to_string(dataset.labels[s]) + "\n";
    }
    const fs::path labels_path = out / "labels.csv";
    atomic_write(labels_path, labels);
    manifest.add_output(labels_path);
    outputs.push_back(labels_path);

    manifest.write(out / "manifest_synth.json");
    return outputs;
}

std::vector<fs::path> run_sample(const RunConfig& config, const fs::path& out, int threads) {
    ManifestBuilder manifest("sample", config);
    const fs::path labels_path = out / "labels.csv";
    require_file(labels_path, "run synth first");
    require_directory(out / "meshes", "run synth first");
    manifest.add_input(labels_path);
    const SubjectTable table = load_labels(labels_path);

    const fs::path patch_dir = out / "patches";
    fs::create_directories(patch_dir);
    const std::uint64_t stage_seed = derive_seed(config.seed, std::string_view("sample"));

    std::vector<fs::path> outputs(table.ids.size());
    parallel_for(static_cast<int>(table.ids.size()), threads, [&](int s) {
        const fs::path mesh_path = out / "meshes" / (table.ids[static_cast<std::size_t>(s)] + ".hsm");
        require_file(mesh_path, "mesh of subject " + table.ids[static_cast<std::size_t>(s)]);
        ParamSurface surface = load_surface(mesh_path);
        if (config.smoothing.iterations > 0) {
            surface = surface.with_tbm(smooth_vertex_field(surface, surface.tbm_field(),
                                                           config.smoothing.iterations,
                                                           config.smoothing.step));
        }
        const auto patches = fpsbs_sample(surface, config.sampling,
                                          derive_seed(stage_seed, static_cast<std::uint64_t>(s)));
        const fs::path patch_path =
            patch_dir / (table.ids[static_cast<std::size_t>(s)] + ".csv");
        atomic_artifact(patch_path,
                        [&](const fs::path& tmp) { save_patches_csv(patches, tmp); });
        outputs[static_cast<std::size_t>(s)] = patch_path;
    });
    for (const fs::path& path : outputs) {
        manifest.add_output(path);
    }
    manifest.write(out / "manifest_sample.json");
    return outputs;
}

namespace {

Eigen::MatrixXd load_patch_matrix(const fs::path& patch_dir, const SubjectTable& table,
                                  std::vector<int>* per_subject_counts) {
    std::vector<Eigen::VectorXd> features;
    for (const std::string& id : table.ids) {
        const fs::path path = patch_dir / (id + ".csv");
        require_file(path, "patch dump of subject " + id);
        const auto patches = load_patches_csv(path);
        if (per_subject_counts) {
            per_subject_counts->push_back(static_cast<int>(patches.size()));
        }
        for (const RingPatch& patch : patches) {
            features.push_back(patch.features);
        }
    }
    if (features.empty()) {
        throw IoError("no patches found under " + patch_dir.string());
    }
    Eigen::MatrixXd X(features.front().size(), static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != X.rows()) {
            throw IoError("inconsistent patch dimensions under " + patch_dir.string());
        }
        X.col(static_cast<Eigen::Index>(i)) = features[i];
    }
    return X;
}

}  // namespace

std::vector<fs::path> run_train(const RunConfig& config, const fs::path& out) {
    ManifestBuilder manifest("train", config);
    const fs::path labels_path = out / "labels.csv";
    const fs::path patch_dir = out / "patches";
    require_file(labels_path, "run synth first");
    require_directory(patch_dir, "run sample first");
    manifest.add_input(labels_path);
    const SubjectTable table = load_labels(labels_path);
    for (const std::string& id : table.ids) {
        manifest.add_input(patch_dir / (id + ".csv"));
    }

    const Eigen::MatrixXd X = load_patch_matrix(patch_dir, table, nullptr);
    if (config.atoms > X.cols()) {
        throw ConfigError("run_train: atoms exceed the number of training patches");
    }

    // Initialize atoms from randomly selected patches.
    Rng rng(derive_seed(config.seed, std::string_view("train-init")));
    Eigen::MatrixXd init(X.rows(), config.atoms);
    for (int j = 0; j < config.atoms; ++j) {
        init.col(j) = X.col(static_cast<Eigen::Index>(
            rng.next_index(static_cast<std::uint64_t>(X.cols()))));
    }

    TrainResult result = train(X, config.scc, init);

    const fs::path dict_dir = out / "dict";
    fs::create_directories(dict_dir);
    const fs::path dict_path = dict_dir / "dictionary.hscdict";
    atomic_artifact(dict_path, [&](const fs::path& tmp) {
        save_dictionary(result.dictionary, config.scc.lambda, tmp);
    });
    manifest.add_output(dict_path);

    const auto averages =
        result.diag.epoch_averages(static_cast<int>(result.diag.records.size()) /
                                   config.scc.epochs);
    json diag;
    diag["steps"] = result.diag.records.size();
    diag["max_cd_increase"] = result.diag.max_cd_increase();
    diag["max_sgd_increase"] = result.diag.max_sgd_increase();
    json epochs = json::array();
    for (const auto& [start, end] : averages) {
        epochs.push_back({{"start", start}, {"end", end}});
    }
    diag["epoch_averages"] = epochs;
    const fs::path diag_path = dict_dir / "train_diag.json";
    atomic_write(diag_path, diag.dump(2) + "\n");
    manifest.add_output(diag_path);

    manifest.write(out / "manifest_train.json");
    return {dict_path, diag_path};
}

std::vector<fs::path> run_features(const RunConfig& config, const fs::path& out, int threads) {
    ManifestBuilder manifest("features", config);
    const fs::path labels_path = out / "labels.csv";
    const fs::path patch_dir = out / "patches";
    const fs::path dict_path = out / "dict" / "dictionary.hscdict";
    require_file(labels_path, "run synth first");
    require_directory(patch_dir, "run sample first");
    require_file(dict_path, "run train first");
    manifest.add_input(labels_path);
    manifest.add_input(dict_path);

    const SubjectTable table = load_labels(labels_path);
    const LoadedDictionary loaded = load_dictionary(dict_path);
    SccConfig encode_config = config.scc;
    encode_config.lambda = loaded.lambda;

    const int t = loaded.dictionary.atom_count();
    std::vector<Eigen::VectorXd> pooled(table.ids.size());
    parallel_for(static_cast<int>(table.ids.size()), threads, [&](int s) {
        const auto patches =
            load_patches_csv(patch_dir / (table.ids[static_cast<std::size_t>(s)] + ".csv"));
        std::vector<SparseCode> codes;
        codes.reserve(patches.size());
        for (const RingPatch& patch : patches) {
            codes.push_back(encode(loaded.dictionary, patch.features, encode_config));
        }
        pooled[static_cast<std::size_t>(s)] = max_pool(codes, t, config.pooling);
    });

    std::string csv = "subject_id,label";
    for (int j = 0; j < t; ++j) {
        csv += ",f" + std::to_string(j);
    }
    csv += "\n";
    for (std::size_t s = 0; s < table.ids.size(); ++s) {
        csv += table.ids[s] + "," + std::to_string(table.labels[s]);
        for (int j = 0; j < t; ++j) {
            csv += "," + format_double(pooled[s][j]);
        }
        csv += "\n";
    }
    const fs::path feature_dir = out / "features";
    fs::create_directories(feature_dir);
    const fs::path features_path = feature_dir / "features.csv";
    atomic_write(features_path, csv);
    manifest.add_output(features_path);
    manifest.write(out / "manifest_features.json");
    return {features_path};
}

std::vector<SubjectRecord> load_features_csv(const fs::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_features_csv: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(file, line)) {
        throw ParseError("load_features_csv: empty file", 1);
    }
    const long t = std::count(line.begin(), line.end(), ',') - 1;
    if (t < 1) {
        throw ParseError("load_features_csv: header has no feature columns", 1);
    }
    std::vector<SubjectRecord> records;
    long line_no = 1;
    while (std::getline(file, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream stream(line);
        std::string cell;
        SubjectRecord record;
        if (!std::getline(stream, record.subject_id, ',')) {
            throw ParseError("load_features_csv: malformed row", line_no);
        }
        if (!std::getline(stream, cell, ',')) {
            throw ParseError("load_features_csv: malformed row", line_no);
        }
        record.label = static_cast<int>(parse_csv_number(cell, "load_features_csv", line_no));
        record.pooled.resize(t);
        for (long j = 0; j < t; ++j) {
            if (!std::getline(stream, cell, ',')) {
                throw ParseError("load_features_csv: short feature row", line_no);
            }
            record.pooled[j] = parse_csv_number(cell, "load_features_csv", line_no);
        }
        records.push_back(std::move(record));
    }
    if (records.empty()) {
        throw IoError("load_features_csv: no records in " + path.string());
    }
    return records;
}

std::vector<fs::path> run_classify(const RunConfig& config, const fs::path& out) {
    ManifestBuilder manifest("classify", config);
    const fs::path features_path = out / "features" / "features.csv";
    require_file(features_path, "run features first");
    manifest.add_input(features_path);

    const std::vector<SubjectRecord> records = load_features_csv(features_path);
    std::vector<int> labels;
    labels.reserve(records.size());
    for (const SubjectRecord& r : records) {
        labels.push_back(r.label);
    }

    const std::uint64_t stage_seed = derive_seed(config.seed, std::string_view("classify"));
    const fs::path model_dir = out / "models";
    fs::create_directories(model_dir);
    const fs::path eval_dir = out / "eval";
    fs::create_directories(eval_dir);

    json detail;
    std::vector<double> scores;
    std::vector<int> score_labels;
    std::vector<fs::path> outputs;

    if (config.protocol == CvProtocol::kfold) {
        const auto folds = kfold_split(labels, config.folds, stage_seed);
        detail["protocol"] = "kfold";
        detail["folds"] = config.folds;
        for (std::size_t f = 0; f < folds.size(); ++f) {
            std::vector<char> in_test(records.size(), 0);
            for (int idx : folds[f]) {
                in_test[static_cast<std::size_t>(idx)] = 1;
            }
            std::vector<SubjectRecord> train_records;
            for (std::size_t i = 0; i < records.size(); ++i) {
                if (!in_test[i]) {
                    train_records.push_back(records[i]);
                }
            }
            const StumpEnsemble model = adaboost_train(train_records, config.classifier_rounds);
            const fs::path model_path = model_dir / ("fold_" + std::to_string(f) + ".hscada");
            atomic_artifact(model_path,
                            [&](const fs::path& tmp) { save_ensemble(model, tmp); });
            manifest.add_output(model_path);
            outputs.push_back(model_path);
            for (int idx : folds[f]) {
                scores.push_back(adaboost_score(model, records[static_cast<std::size_t>(idx)].pooled));
                score_labels.push_back(records[static_cast<std::size_t>(idx)].label);
            }
        }
    } else {
        const NestedSplit split = nested_split(labels, stage_seed);
        detail["protocol"] = "nested";
        std::vector<SubjectRecord> train_records, validation_records;
        for (int idx : split.train) {
            train_records.push_back(records[static_cast<std::size_t>(idx)]);
        }
        for (int idx : split.validation) {
            validation_records.push_back(records[static_cast<std::size_t>(idx)]);
        }

        std::vector<int> grid = config.rounds_grid;
        if (grid.empty()) {
            grid.push_back(config.classifier_rounds);
        }
        int best_rounds = grid.front();
        double best_auc = -1.0;
        for (int rounds : grid) {
            const StumpEnsemble candidate = adaboost_train(train_records, rounds);
            std::vector<double> validation_scores;
            std::vector<int> validation_labels;
            for (const SubjectRecord& r : validation_records) {
                validation_scores.push_back(adaboost_score(candidate, r.pooled));
                validation_labels.push_back(r.label);
            }
            const double auc = evaluate(validation_scores, validation_labels).auc;
            if (auc > best_auc) {
                best_auc = auc;
                best_rounds = rounds;
            }
        }
        detail["selected_rounds"] = best_rounds;
        detail["validation_auc"] = best_auc;

        const StumpEnsemble model = adaboost_train(train_records, best_rounds);
        const fs::path model_path = model_dir / "nested.hscada";
        atomic_artifact(model_path, [&](const fs::path& tmp) { save_ensemble(model, tmp); });
        manifest.add_output(model_path);
        outputs.push_back(model_path);
        for (int idx : split.test) {
            scores.push_back(adaboost_score(model, records[static_cast<std::size_t>(idx)].pooled));
            score_labels.push_back(records[static_cast<std::size_t>(idx)].label);
        }
    }

    const EvalReport report = evaluate(scores, score_labels);
    json eval;
    eval["detail"] = detail;
    eval["report"] = {{"acc", report.acc}, {"sen", report.sen}, {"spe", report.spe},
                      {"auc", report.auc}, {"tp", report.tp},   {"fn", report.fn},
                      {"tn", report.tn},   {"fp", report.fp}};
    const fs::path eval_path = eval_dir / "eval.json";
    atomic_write(eval_path, eval.dump(2) + "\n");
    manifest.add_output(eval_path);
    outputs.push_back(eval_path);

    manifest.write(out / "manifest_classify.json");
    return outputs;
}

EvalReport load_eval_report(const fs::path& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("load_eval_report: cannot open " + path.string());
    }
    json eval;
    try {
        file >> eval;
    } catch (const json::exception& e) {
        throw IoError("load_eval_report: " + path.string() + ": " + e.what());
    }
    try {
        const json& r = eval.at("report");
        EvalReport report;
        report.acc = r.at("acc").get<double>();
        report.sen = r.at("sen").get<double>();
        report.spe = r.at("spe").get<double>();
        report.auc = r.at("auc").get<double>();
        report.tp = r.at("tp").get<long>();
        report.fn = r.at("fn").get<long>();
        report.tn = r.at("tn").get<long>();
        report.fp = r.at("fp").get<long>();
        return report;
    } catch (const json::exception& e) {
        throw IoError("load_eval_report: " + path.string() + ": " + e.what());
    }
}

std::vector<fs::path> run_report(const RunConfig& config, const fs::path& out) {
    ManifestBuilder manifest("report", config);
    const fs::path eval_dir = out / "eval";
    require_directory(eval_dir, "run classify first");

    std::vector<fs::path> eval_files;
    for (const auto& entry : fs::directory_iterator(eval_dir)) {
        if (entry.path().extension() == ".json") {
            eval_files.push_back(entry.path());
        }
    }
    std::sort(eval_files.begin(), eval_files.end());
    if (eval_files.empty()) {
        throw IoError("run_report: no evaluation files under " + eval_dir.string());
    }

    std::vector<EvalReport> reports;
    std::string header = "metric";
    for (const fs::path& path : eval_files) {
        manifest.add_input(path);
        reports.push_back(load_eval_report(path));
        header += "," + path.stem().string();
    }

    auto percent_row = [&](const char* name, auto getter) {
        std::string row = name;
        for (const EvalReport& report : reports) {
            char buffer[32];
            std::snprintf(buffer, sizeof buffer, ",%.2f%%", 100.0 * getter(report));
            row += buffer;
        }
        return row + "\n";
    };
    std::string csv = header + "\n";
    csv += percent_row("ACC", [](const EvalReport& r) { return r.acc; });
    csv += percent_row("SEN", [](const EvalReport& r) { return r.sen; });
    csv += percent_row("SPE", [](const EvalReport& r) { return r.spe; });
    std::string auc_row = "AUC";
    for (const EvalReport& report : reports) {
        char buffer[32];
        std::snprintf(buffer, sizeof buffer, ",%.4f", report.auc);
        auc_row += buffer;
    }
    csv += auc_row + "\n";

    const fs::path report_dir = out / "report";
    fs::create_directories(report_dir);
    const fs::path report_path = report_dir / "report.csv";
    atomic_write(report_path, csv);
    manifest.add_output(report_path);
    manifest.write(out / "manifest_report.json");
    return {report_path};
}

}  // namespace hsc
