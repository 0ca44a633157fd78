/*
 * mrsr : anisotropic super-resolution toolkit for MR slice images
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mrsr/config.hpp"
#include "mrsr/dataset.hpp"
#include "mrsr/degradation.hpp"
#include "mrsr/errors.hpp"
#include "mrsr/metrics.hpp"
#include "mrsr/png_io.hpp"
#include "mrsr/slice_tensor.hpp"
#include "mrsr/training.hpp"
#include "mrsr/volume_io.hpp"
#include "mrsr/volume_sr.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string profile;
    std::string config_path;
    std::optional<std::string> experiment;
    std::optional<uint64_t> seed;
    std::optional<std::string> output_dir;
};

// Precedence: defaults, then profile, then config file, then flags.
mrsr::ExperimentConfig build_config(const CommonFlags& flags) {
    mrsr::ExperimentConfig cfg = mrsr::default_experiment_config();
    if (!flags.profile.empty()) mrsr::apply_profile(cfg, flags.profile);
    if (!flags.config_path.empty()) mrsr::apply_config_file(cfg, flags.config_path);
    if (flags.experiment) cfg.experiment = mrsr::experiment_from_string(*flags.experiment);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.output_dir) cfg.output_dir = *flags.output_dir;
    cfg.finalize();
    return cfg;
}

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--profile", flags.profile, "preset: toy or paper");
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--experiment", flags.experiment, "iso4, iso8 or aniso8");
    cmd->add_option("--seed", flags.seed, "seed overriding profile and config");
    cmd->add_option("--output-dir", flags.output_dir, "output directory");
}

// Volumes live either directly in the input directory (dataset tag
// "default") or in one subdirectory per dataset. A .mrvol file is one
// volume; a directory of .dcm files is one series.
std::vector<std::pair<std::string, fs::path>> find_volumes(const fs::path& input) {
    std::vector<std::pair<std::string, fs::path>> out;
    if (!fs::is_directory(input)) throw mrsr::IngestError("input '" + input.string() + "' is not a directory");

    auto scan_dataset = [&out](const std::string& tag, const fs::path& dir) {
        std::vector<fs::path> entries;
        for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
        std::sort(entries.begin(), entries.end());
        for (const auto& p : entries) {
            if (fs::is_regular_file(p) && p.extension() == ".mrvol")
                out.emplace_back(tag, p);
            else if (fs::is_directory(p))
                out.emplace_back(tag, p); // DICOM series directory
        }
    };

    bool has_subdirs = false;
    bool has_files = false;
    for (const auto& e : fs::directory_iterator(input)) {
        if (fs::is_directory(e.path())) has_subdirs = true;
        if (fs::is_regular_file(e.path()) && e.path().extension() == ".mrvol") has_files = true;
    }
    if (has_files || !has_subdirs) {
        scan_dataset("default", input);
    } else {
        std::vector<fs::path> datasets;
        for (const auto& e : fs::directory_iterator(input))
            if (fs::is_directory(e.path())) datasets.push_back(e.path());
        std::sort(datasets.begin(), datasets.end());
        for (const auto& d : datasets) scan_dataset(d.filename().string(), d);
    }
    return out;
}

std::vector<std::pair<std::string, int>> parse_train_counts(const std::string& text) {
    std::vector<std::pair<std::string, int>> counts;
    size_t at = 0;
    while (at < text.size()) {
        const size_t comma = text.find(',', at);
        const std::string item = text.substr(at, comma == std::string::npos ? std::string::npos : comma - at);
        const size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw mrsr::ConfigError("bad --train-counts entry '" + item + "' (expected name=N)");
        try {
            counts.emplace_back(item.substr(0, eq), std::stoi(item.substr(eq + 1)));
        } catch (const std::logic_error&) {
            throw mrsr::ConfigError("bad count in --train-counts entry '" + item + "'");
        }
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    return counts;
}

int cmd_prepare(const CommonFlags& flags, const std::string& input_dir, int train_count,
                const std::string& train_counts_text) {
    const mrsr::ExperimentConfig cfg = build_config(flags);
    const fs::path out_root = fs::path(cfg.output_dir);
    const fs::path vol_dir = out_root / "volumes";
    fs::create_directories(vol_dir);

    const auto sources = find_volumes(input_dir);
    if (sources.empty()) throw mrsr::IngestError("no volumes found under '" + input_dir + "'");

    struct Loaded {
        std::string dataset;
        fs::path stored;
        mrsr::Volume volume;
    };
    std::vector<Loaded> volumes;
    std::vector<mrsr::PatientRecord> patients;
    std::map<std::string, int> per_dataset;
    for (const auto& [dataset, path] : sources) {
        mrsr::Volume v = mrsr::normalize_intensity(mrsr::load_volume(path));
        const fs::path stored = vol_dir / (v.patient_id + ".mrvol");
        mrsr::save_volume(v, stored);
        patients.push_back({v.patient_id, dataset});
        ++per_dataset[dataset];
        volumes.push_back({dataset, stored, std::move(v)});
    }

    mrsr::SplitSpec split_spec;
    split_spec.seed = cfg.seed;
    if (!train_counts_text.empty()) {
        split_spec.train_counts = parse_train_counts(train_counts_text);
    } else {
        for (const auto& [dataset, n] : per_dataset) {
            const int count = train_count >= 0 ? train_count : std::max(1, n - std::max(1, n / 10));
            split_spec.train_counts.emplace_back(dataset, count);
        }
    }
    const mrsr::DatasetSplit split = mrsr::split_patients(patients, split_spec);

    std::vector<mrsr::SliceRecord> train_records, test_records;
    auto add_records = [](std::vector<mrsr::SliceRecord>& dst, const Loaded& item) {
        const auto& v = item.volume;
        auto push = [&](mrsr::SlicePlane plane, int count, int h, int w) {
            for (int i = 0; i < count; ++i)
                dst.push_back({item.stored.string(), v.patient_id, plane, i, h, w});
        };
        push(mrsr::SlicePlane::kInPlane, v.d, v.h, v.w);
        push(mrsr::SlicePlane::kThroughHxD, v.w, v.h, v.d);
        push(mrsr::SlicePlane::kThroughWxD, v.h, v.w, v.d);
    };
    for (const auto& item : volumes) {
        if (split.train_patients.count(item.volume.patient_id))
            add_records(train_records, item);
        else
            add_records(test_records, item);
    }
    mrsr::save_manifest(train_records, out_root / "train_manifest.jsonl");
    mrsr::save_manifest(test_records, out_root / "test_manifest.jsonl");

    json split_json{{"seed", cfg.seed},
                    {"train", json::array()},
                    {"test", json::array()}};
    for (const auto& p : split.train_patients) split_json["train"].push_back(p);
    for (const auto& p : split.test_patients) split_json["test"].push_back(p);
    std::ofstream split_out(out_root / "split.json");
    split_out << split_json.dump(2) << '\n';

    std::cout << "prepared " << volumes.size() << " volumes: " << split.train_patients.size()
              << " train / " << split.test_patients.size() << " test patients\n"
              << "manifests in " << out_root.string() << '\n';
    return 0;
}

// Slices the experiment trains on: in-plane for the isotropic setups,
// depth-first through-plane for the anisotropic one.
std::vector<mrsr::SliceImage> load_experiment_slices(const std::vector<mrsr::SliceRecord>& records,
                                                     const mrsr::ExperimentConfig& cfg) {
    const bool aniso = cfg.experiment == mrsr::ExperimentKind::kAniso8;
    std::vector<mrsr::SliceImage> out;
    for (const auto& rec : records) {
        const bool through = rec.plane != mrsr::SlicePlane::kInPlane;
        if (through != aniso) continue;
        mrsr::SliceImage img = mrsr::load_slice(rec);
        if (through) img = mrsr::transpose(img); // rows become depth
        out.push_back(mrsr::crop_or_pad(img, cfg.train.hr_crop_h, cfg.train.hr_crop_w));
    }
    return out;
}

int cmd_train(const CommonFlags& flags, const std::string& data_dir, const std::string& resume_path,
              int max_slices) {
    const mrsr::ExperimentConfig cfg = build_config(flags);
    const fs::path out_root = fs::path(cfg.output_dir);
    fs::create_directories(out_root);

    const auto records = mrsr::load_manifest(fs::path(data_dir) / "train_manifest.jsonl");
    auto slices = load_experiment_slices(records, cfg);
    if (max_slices > 0 && static_cast<int>(slices.size()) > max_slices) slices.resize(static_cast<size_t>(max_slices));
    if (slices.empty()) throw mrsr::TrainError("no training slices for experiment " +
                                               std::string(mrsr::to_string(cfg.experiment)));

    const mrsr::FeatureWeights features = mrsr::resolve_features(cfg.features);
    std::unique_ptr<mrsr::Trainer> trainer;
    if (!resume_path.empty()) {
        trainer = mrsr::Trainer::load_checkpoint(resume_path, features);
    } else {
        trainer = std::make_unique<mrsr::Trainer>(cfg.generator, cfg.discriminator, cfg.train,
                                                  cfg.degradation, features);
    }

    trainer->set_auto_checkpoint((out_root / "checkpoint_last.mrck").string());
    trainer->attach_log((out_root / "experiment_log.jsonl").string());
    mrsr::TrainEvents events;
    events.on_epoch = [](const mrsr::EpochLog& log) {
        std::cout << mrsr::to_string(log.phase) << " epoch " << log.epoch << ": g_loss=" << log.g_loss;
        if (log.d_loss) std::cout << " d_loss=" << *log.d_loss;
        if (log.val_psnr_db) std::cout << " val_psnr=" << *log.val_psnr_db;
        std::cout << " val_ssim=" << log.val_ssim << " (" << log.wall_seconds << "s)\n";
    };
    trainer->set_events(events);

    std::cout << "training " << mrsr::to_string(cfg.experiment) << " on " << slices.size()
              << " slices\n";
    if (trainer->phase() == mrsr::TrainPhase::kPretrain) trainer->pretrain(slices);
    trainer->adversarial(slices);
    trainer->save_checkpoint((out_root / "checkpoint_final.mrck").string());
    std::cout << "final checkpoint: " << (out_root / "checkpoint_final.mrck").string() << '\n';
    return 0;
}

int cmd_sr(const CommonFlags& flags, const std::string& checkpoint_path, const std::string& input_path,
           const std::string& output_path, const std::string& features_spec) {
    mrsr::ExperimentConfig cfg = build_config(flags);
    if (!features_spec.empty()) cfg.features = features_spec;
    const mrsr::FeatureWeights features = mrsr::resolve_features(cfg.features);
    auto trainer = mrsr::Trainer::load_checkpoint(checkpoint_path, features);
    mrsr::Generator& g = trainer->generator();

    mrsr::Volume input = mrsr::load_volume(input_path);
    const auto& gcfg = g.config();
    mrsr::Volume result;
    if (gcfg.factor_w() == 1 && gcfg.factor_h() > 1) {
        mrsr::VolumeSRPlan plan;
        plan.depth_factor = gcfg.factor_h();
        result = mrsr::reconstruct_volume(input, plan, mrsr::make_generator_slice_fn(g));
    } else {
        // In-plane model: slice-wise over depth.
        const auto slices = mrsr::extract_inplane_slices(input);
        result = mrsr::Volume(input.h * gcfg.factor_h(), input.w * gcfg.factor_w(), input.d);
        result.spacing = {input.spacing[0] / gcfg.factor_h(), input.spacing[1] / gcfg.factor_w(),
                          input.spacing[2]};
        result.patient_id = input.patient_id;
        result.plane = input.plane;
        for (int z = 0; z < input.d; ++z) {
            const mrsr::Tensor sr = g.forward(mrsr::to_tensor(slices[static_cast<size_t>(z)]), false);
            for (int y = 0; y < result.h; ++y)
                for (int x = 0; x < result.w; ++x)
                    result.at(y, x, z) = sr[static_cast<int64_t>(y) * result.w + x];
        }
    }
    mrsr::save_volume(result, output_path);
    std::cout << "wrote " << output_path << " (" << result.h << "x" << result.w << "x" << result.d
              << ")\n";
    return 0;
}

mrsr::SliceImage hcat(const std::vector<mrsr::SliceImage>& panels, int gap) {
    const int h = panels.front().h;
    int w = static_cast<int>(panels.size() - 1) * gap;
    for (const auto& p : panels) w += p.w;
    mrsr::SliceImage out(h, w);
    std::fill(out.pixels.begin(), out.pixels.end(), 1.0f);
    int x0 = 0;
    for (const auto& p : panels) {
        for (int y = 0; y < p.h; ++y)
            for (int x = 0; x < p.w; ++x)
                out.at(y, x0 + x) = p.at(y, x);
        x0 += p.w + gap;
    }
    return out;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& data_dir,
                 const std::string& checkpoint_path, const std::string& features_spec, int grid_count,
                 int max_slices) {
    mrsr::ExperimentConfig cfg = build_config(flags);
    if (!features_spec.empty()) cfg.features = features_spec;
    const fs::path out_root = fs::path(cfg.output_dir);
    fs::create_directories(out_root);

    const auto records = mrsr::load_manifest(fs::path(data_dir) / "test_manifest.jsonl");
    auto slices = load_experiment_slices(records, cfg);
    if (max_slices > 0 && static_cast<int>(slices.size()) > max_slices) slices.resize(static_cast<size_t>(max_slices));
    if (slices.empty()) throw mrsr::EvalError("no test slices for experiment " +
                                              std::string(mrsr::to_string(cfg.experiment)));

    std::vector<mrsr::EvalImage> references;
    for (size_t i = 0; i < slices.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "slice%04zu", i);
        references.push_back({id, slices[i]});
    }

    std::unique_ptr<mrsr::Trainer> trainer;
    if (!checkpoint_path.empty()) {
        trainer = mrsr::Trainer::load_checkpoint(checkpoint_path, mrsr::resolve_features(cfg.features));
    }

    std::vector<mrsr::EvalMethod> methods;
    methods.push_back({"bicubic", cfg.degradation, [&cfg](const mrsr::SliceImage& lr) {
                           return mrsr::bicubic_upsample(lr, cfg.degradation.factor_h,
                                                         cfg.degradation.factor_w);
                       }});
    if (trainer) {
        mrsr::Generator& g = trainer->generator();
        methods.push_back({"model", cfg.degradation, [&g](const mrsr::SliceImage& lr) {
                               return mrsr::to_slice(g.forward(mrsr::to_tensor(lr), false),
                                                     lr.provenance);
                           }});
    }

    // Run methods one at a time so one failure doesn't hide the others.
    mrsr::EvalReport report;
    std::vector<std::string> failures;
    for (const auto& method : methods) {
        try {
            mrsr::EvalReport single = mrsr::evaluate_methods(references, {method});
            report.methods.push_back(std::move(single.methods.front()));
        } catch (const mrsr::EvalError& e) {
            failures.push_back(e.what());
            std::cerr << e.what() << '\n';
        }
    }

    std::cout << mrsr::eval_table(report);
    mrsr::save_eval_report((out_root / "eval_report.json").string(),
                           (out_root / "eval_per_image.jsonl").string(), report);

    if (trainer && grid_count > 0) {
        mrsr::Generator& g = trainer->generator();
        const fs::path grid_dir = out_root / "grids";
        fs::create_directories(grid_dir);
        const int n = std::min<int>(grid_count, static_cast<int>(references.size()));
        for (int i = 0; i < n; ++i) {
            const mrsr::SliceImage& hr = references[static_cast<size_t>(i)].hr;
            const mrsr::SliceImage lr = mrsr::downsample(hr, cfg.degradation);
            const mrsr::SliceImage lr_big =
                mrsr::nearest_upsample(lr, cfg.degradation.factor_h, cfg.degradation.factor_w);
            const mrsr::SliceImage bic =
                mrsr::bicubic_upsample(lr, cfg.degradation.factor_h, cfg.degradation.factor_w);
            const mrsr::SliceImage sr = mrsr::to_slice(g.forward(mrsr::to_tensor(lr), false), hr.provenance);
            const mrsr::SliceImage grid = hcat({lr_big, bic, sr, hr}, 2);
            mrsr::save_png(grid, (grid_dir / (references[static_cast<size_t>(i)].id + ".png")).string());
        }
        std::cout << "grids in " << grid_dir.string() << '\n';
    }
    if (!failures.empty()) throw mrsr::EvalError(std::to_string(failures.size()) + " method(s) failed");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisotropic super-resolution toolkit for MR slice images"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* prepare = app.add_subcommand("prepare", "normalize volumes, split patients, write manifests");
    std::string input_dir;
    int train_count = -1;
    std::string train_counts_text;
    prepare->add_option("--input", input_dir, "directory of volumes or dataset subdirectories")
        ->required();
    prepare->add_option("--train-count", train_count, "training patients per dataset");
    prepare->add_option("--train-counts", train_counts_text, "per-dataset counts, name=N[,name=N...]");
    add_common_flags(prepare, flags);

    auto* train = app.add_subcommand("train", "run the two training phases");
    std::string data_dir, resume_path;
    int max_slices = 0;
    train->add_option("--data", data_dir, "prepared dataset directory")->required();
    train->add_option("--checkpoint", resume_path, "checkpoint to resume from");
    train->add_option("--max-slices", max_slices, "cap on training slices (0 = all)");
    add_common_flags(train, flags);

    auto* sr = app.add_subcommand("sr", "super-resolve a volume with a trained model");
    std::string checkpoint_path, input_path, output_path, features_spec;
    sr->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
    sr->add_option("--input", input_path, "input volume (.mrvol or DICOM directory)")->required();
    sr->add_option("--output", output_path, "output .mrvol path")->required();
    sr->add_option("--features", features_spec, "feature weights used at training time");
    add_common_flags(sr, flags);

    auto* evaluate = app.add_subcommand("evaluate", "metrics against the bicubic baseline");
    std::string eval_data_dir, eval_checkpoint, eval_features;
    int grid_count = 0, eval_max_slices = 0;
    evaluate->add_option("--data", eval_data_dir, "prepared dataset directory")->required();
    evaluate->add_option("--checkpoint", eval_checkpoint, "trained checkpoint (omit for baseline only)");
    evaluate->add_option("--features", eval_features, "feature weights used at training time");
    evaluate->add_option("--grids", grid_count, "write N comparison grids as PNG");
    evaluate->add_option("--max-slices", eval_max_slices, "cap on test slices (0 = all)");
    add_common_flags(evaluate, flags);

    try {
        app.parse(argc, argv);
        if (prepare->parsed()) return cmd_prepare(flags, input_dir, train_count, train_counts_text);
        if (train->parsed()) return cmd_train(flags, data_dir, resume_path, max_slices);
        if (sr->parsed()) return cmd_sr(flags, checkpoint_path, input_path, output_path, features_spec);
        if (evaluate->parsed())
            return cmd_evaluate(flags, eval_data_dir, eval_checkpoint, eval_features, grid_count,
                                eval_max_slices);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const mrsr::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const mrsr::PlanError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const mrsr::SplitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
