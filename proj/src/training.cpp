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

#include "mrsr/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mrsr/metrics.hpp"
#include "mrsr/slice_tensor.hpp"

namespace mrsr {

using nlohmann::json;

namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
constexpr char kCheckpointMagic[4] = {'M', 'R', 'C', 'K'};
constexpr uint32_t kCheckpointVersion = 1;

std::string u64_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

uint64_t u64_from_hex(const std::string& s) {
    if (s.size() != 16) throw CheckpointError("bad rng state encoding");
    uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9')
            v |= static_cast<uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f')
            v |= static_cast<uint64_t>(c - 'a' + 10);
        else
            throw CheckpointError("bad rng state encoding");
    }
    return v;
}

json train_config_json(const TrainConfig& c) {
    return json{{"batch_size", c.batch_size},
                {"pretrain_epochs", c.pretrain_epochs},
                {"adversarial_epochs", c.adversarial_epochs},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"content_weight", c.perceptual.content},
                {"adversarial_weight", c.perceptual.adversarial},
                {"divergence_threshold", c.divergence_threshold},
                {"seed", c.seed},
                {"hr_crop_h", c.hr_crop_h},
                {"hr_crop_w", c.hr_crop_w},
                {"validation_batch", c.validation_batch}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.batch_size = j.at("batch_size").get<int>();
    c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
    c.adversarial_epochs = j.at("adversarial_epochs").get<int>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.perceptual.content = j.at("content_weight").get<double>();
    c.perceptual.adversarial = j.at("adversarial_weight").get<double>();
    c.divergence_threshold = j.at("divergence_threshold").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    c.hr_crop_h = j.at("hr_crop_h").get<int>();
    c.hr_crop_w = j.at("hr_crop_w").get<int>();
    c.validation_batch = j.at("validation_batch").get<int>();
    return c;
}

json generator_config_json(const GeneratorConfig& c) {
    json stages = json::array();
    for (const auto& s : c.stages) stages.push_back({s.rh, s.rw});
    return json{{"channels", c.channels}, {"residual_blocks", c.residual_blocks}, {"stages", stages}};
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig c;
    c.channels = j.at("channels").get<int>();
    c.residual_blocks = j.at("residual_blocks").get<int>();
    for (const auto& s : j.at("stages")) c.stages.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    return c;
}

json degradation_json(const DegradationSpec& d) {
    return json{{"factor_h", d.factor_h},
                {"factor_w", d.factor_w},
                {"kernel", "bicubic"},
                {"antialias", d.antialias}};
}

DegradationSpec degradation_from_json(const json& j) {
    DegradationSpec d;
    d.factor_h = j.at("factor_h").get<int>();
    d.factor_w = j.at("factor_w").get<int>();
    if (j.at("kernel").get<std::string>() != "bicubic")
        throw CheckpointError("unknown degradation kernel '" + j.at("kernel").get<std::string>() + "'");
    d.antialias = j.at("antialias").get<bool>();
    return d;
}

void append_bytes(std::vector<unsigned char>& out, const void* p, size_t n) {
    const size_t at = out.size();
    out.resize(at + n);
    std::memcpy(out.data() + at, p, n);
}

} // namespace

const char* to_string(TrainPhase phase) {
    return phase == TrainPhase::kPretrain ? "pretrain" : "adversarial";
}

TrainPhase train_phase_from_string(const std::string& s) {
    if (s == "pretrain") return TrainPhase::kPretrain;
    if (s == "adversarial") return TrainPhase::kAdversarial;
    throw CheckpointError("unknown training phase '" + s + "'");
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (pretrain_epochs < 0 || adversarial_epochs < 0)
        throw ConfigError("epoch counts must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0,1)");
    if (!(divergence_threshold > 0.0)) throw ConfigError("divergence_threshold must be positive");
    if (hr_crop_h < 1 || hr_crop_w < 1) throw ConfigError("hr crop dims must be >= 1");
    if (validation_batch < 1) throw ConfigError("validation_batch must be >= 1");
}

Trainer::Trainer(GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg, TrainConfig train_cfg,
                 DegradationSpec degradation, const FeatureWeights& features)
    : gen_cfg_(std::move(gen_cfg)),
      disc_cfg_(disc_cfg),
      train_cfg_(train_cfg),
      degradation_(degradation),
      g_(gen_cfg_, train_cfg.seed),
      d_(disc_cfg_, train_cfg.seed + kGolden),
      features_(features),
      opt_g_(train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.adam_eps),
      opt_d_(train_cfg.lr, train_cfg.beta1, train_cfg.beta2, train_cfg.adam_eps),
      rng_(train_cfg.seed + 2 * kGolden) {
    train_cfg_.validate();
    degradation_.validate();
    if (train_cfg_.hr_crop_h != disc_cfg_.in_h || train_cfg_.hr_crop_w != disc_cfg_.in_w)
        throw ConfigError("hr crop " + std::to_string(train_cfg_.hr_crop_h) + "x" +
                          std::to_string(train_cfg_.hr_crop_w) + " must match discriminator input " +
                          std::to_string(disc_cfg_.in_h) + "x" + std::to_string(disc_cfg_.in_w));
    if (train_cfg_.hr_crop_h % degradation_.factor_h != 0 ||
        train_cfg_.hr_crop_w % degradation_.factor_w != 0)
        throw ConfigError("hr crop must be divisible by the degradation factors");
    if (gen_cfg_.factor_h() != degradation_.factor_h || gen_cfg_.factor_w() != degradation_.factor_w)
        throw ConfigError("generator upscale " + std::to_string(gen_cfg_.factor_h()) + "x" +
                          std::to_string(gen_cfg_.factor_w()) + " does not match degradation " +
                          std::to_string(degradation_.factor_h) + "x" +
                          std::to_string(degradation_.factor_w));
    opt_g_.attach(g_.parameters());
    opt_d_.attach(d_.parameters());
}

void Trainer::attach_log(const std::string& path) {
    log_path_ = path;
    std::ofstream out(path, std::ios::app);
    if (!out) throw TrainError("cannot open experiment log '" + path + "'");
    json header{{"config",
                 json{{"generator", generator_config_json(gen_cfg_)},
                      {"discriminator",
                       json{{"channels", disc_cfg_.channels},
                            {"in_h", disc_cfg_.in_h},
                            {"in_w", disc_cfg_.in_w}}},
                      {"train", train_config_json(train_cfg_)},
                      {"degradation", degradation_json(degradation_)},
                      {"features_hash", features_.weights_hash()}}}};
    out << header.dump() << '\n';
}

void Trainer::write_log_line(const EpochLog& log) {
    if (log_path_.empty()) return;
    std::ofstream out(log_path_, std::ios::app);
    if (!out) throw TrainError("cannot append to experiment log '" + log_path_ + "'");
    json line{{"phase", to_string(log.phase)},
              {"epoch", log.epoch},
              {"g_loss", log.g_loss},
              {"content", log.content},
              {"adversarial", log.adversarial},
              {"val_ssim", log.val_ssim},
              {"wall_time", log.wall_seconds},
              {"step", log.step}};
    line["d_loss"] = log.d_loss ? json(*log.d_loss) : json(nullptr);
    line["val_psnr"] = log.val_psnr_db ? json(*log.val_psnr_db) : json(nullptr);
    out << line.dump() << '\n';
}

Trainer::Batch Trainer::make_batch(const std::vector<SliceImage>& hr_slices,
                                   const std::vector<int>& order, size_t start, size_t count) const {
    Batch b;
    b.hr = Tensor({static_cast<int>(count), 1, train_cfg_.hr_crop_h, train_cfg_.hr_crop_w});
    b.lr = Tensor({static_cast<int>(count), 1, train_cfg_.hr_crop_h / degradation_.factor_h,
                   train_cfg_.hr_crop_w / degradation_.factor_w});
    const int64_t hr_px = static_cast<int64_t>(train_cfg_.hr_crop_h) * train_cfg_.hr_crop_w;
    const int64_t lr_px = b.lr.numel() / static_cast<int64_t>(count);
    for (size_t i = 0; i < count; ++i) {
        const SliceImage& hr = hr_slices[static_cast<size_t>(order[start + i])];
        if (hr.h != train_cfg_.hr_crop_h || hr.w != train_cfg_.hr_crop_w)
            throw ShapeError("training slice is " + std::to_string(hr.h) + "x" + std::to_string(hr.w) +
                             ", expected " + std::to_string(train_cfg_.hr_crop_h) + "x" +
                             std::to_string(train_cfg_.hr_crop_w) + "; crop or pad during preparation");
        const SliceImage lr = downsample(hr, degradation_);
        std::copy(hr.pixels.begin(), hr.pixels.end(), b.hr.data() + static_cast<int64_t>(i) * hr_px);
        std::copy(lr.pixels.begin(), lr.pixels.end(), b.lr.data() + static_cast<int64_t>(i) * lr_px);
    }
    return b;
}

std::vector<int> Trainer::validation_indices(size_t n) const {
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng vrng(train_cfg_.seed + 3 * kGolden);
    vrng.shuffle(order);
    const size_t keep = std::min(static_cast<size_t>(train_cfg_.validation_batch), n);
    order.resize(keep);
    return order;
}

void Trainer::validate_epoch(const std::vector<SliceImage>& train_hr, EpochLog& log) {
    const auto idx = validation_indices(train_hr.size());
    double psnr_acc = 0.0, ssim_acc = 0.0;
    int psnr_n = 0;
    for (int i : idx) {
        const SliceImage& hr = train_hr[static_cast<size_t>(i)];
        const SliceImage lr = downsample(hr, degradation_);
        const Tensor sr_t = g_.forward(to_tensor(lr), false);
        const SliceImage sr = to_slice(sr_t, hr.provenance);
        const PsnrResult pr = psnr(sr, hr);
        if (!pr.identical) {
            psnr_acc += pr.db;
            ++psnr_n;
        }
        ssim_acc += ssim(sr, hr);
    }
    if (psnr_n > 0) log.val_psnr_db = psnr_acc / psnr_n;
    log.val_ssim = ssim_acc / static_cast<double>(idx.size());
}

void Trainer::check_finite(double value, const char* what) {
    if (!std::isfinite(value) || std::abs(value) > train_cfg_.divergence_threshold)
        throw DivergenceError(std::string(what) + " = " + std::to_string(value) + " at step " +
                              std::to_string(global_step_) +
                              (auto_checkpoint_.empty()
                                   ? std::string()
                                   : "; last finished epoch kept at " + auto_checkpoint_));
}

void Trainer::after_epoch(EpochLog log) {
    ++epoch_in_phase_;
    log.step = global_step_;
    if (!auto_checkpoint_.empty()) save_checkpoint(auto_checkpoint_);
    write_log_line(log);
    if (events_.on_epoch) events_.on_epoch(log);
    logs_.push_back(std::move(log));
}

void Trainer::run_epoch(const std::vector<SliceImage>& train_hr, bool adversarial_phase) {
    const auto start_time = std::chrono::steady_clock::now();
    const size_t n = train_hr.size();
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    rng_.shuffle(order);

    double g_acc = 0.0, d_acc = 0.0, content_acc = 0.0, adv_acc = 0.0;
    int batches = 0;

    for (size_t start = 0; start < n; start += static_cast<size_t>(train_cfg_.batch_size)) {
        const size_t count = std::min(static_cast<size_t>(train_cfg_.batch_size), n - start);
        Batch batch = make_batch(train_hr, order, start, count);

        // One generator forward per batch feeds both the discriminator
        // update and the generator update.
        Tensor sr = g_.forward(batch.lr, true);

        if (!adversarial_phase) {
            auto loss = pixel_mse_loss(sr, batch.hr);
            check_finite(loss.value, "pretrain loss");
            g_.zero_grad();
            g_.backward(loss.grad);
            opt_g_.step();
            ++global_step_;
            if (events_.on_step) events_.on_step(global_step_, 'G');
            g_acc += loss.value;
            ++batches;
            continue;
        }

        // Discriminator step. Backward runs directly after each forward
        // because layer contexts hold only the latest pass.
        d_.zero_grad();
        double d_loss_value = 0.0;
        {
            const int64_t total = 2 * static_cast<int64_t>(count);
            Tensor d_real = d_.forward(batch.hr, true);
            Tensor grad_real(d_real.dims());
            for (int64_t i = 0; i < d_real.numel(); ++i) {
                const double p = std::min(std::max(static_cast<double>(d_real[i]), kProbEps), 1.0 - kProbEps);
                d_loss_value += -std::log(p);
                grad_real[i] = static_cast<float>(-1.0 / (p * static_cast<double>(total)));
            }
            d_.backward(grad_real);

            Tensor d_fake = d_.forward(sr, true);
            Tensor grad_fake(d_fake.dims());
            for (int64_t i = 0; i < d_fake.numel(); ++i) {
                const double p = std::min(std::max(static_cast<double>(d_fake[i]), kProbEps), 1.0 - kProbEps);
                d_loss_value += -std::log(1.0 - p);
                grad_fake[i] = static_cast<float>(1.0 / ((1.0 - p) * static_cast<double>(total)));
            }
            d_.backward(grad_fake);
            d_loss_value /= static_cast<double>(total);
        }
        check_finite(d_loss_value, "discriminator loss");
        opt_d_.step();
        ++global_step_;
        if (events_.on_step) events_.on_step(global_step_, 'D');

        // Generator step on the same sr, against the just-updated
        // discriminator.
        auto content = content_loss(features_, sr, batch.hr);
        Tensor d_sr = d_.forward(sr, true);
        auto adv = adversarial_generator_loss(d_sr);
        Tensor d_sr_grad = d_.backward(adv.grad); // discriminator grads discarded at its next step

        const double g_loss_value = perceptual_total(train_cfg_.perceptual, content.value, adv.value);
        check_finite(g_loss_value, "generator loss");

        Tensor d_total(content.grad.dims());
        for (int64_t i = 0; i < d_total.numel(); ++i)
            d_total[i] = static_cast<float>(train_cfg_.perceptual.content * content.grad[i] +
                                            train_cfg_.perceptual.adversarial * d_sr_grad[i]);
        g_.zero_grad();
        g_.backward(d_total);
        opt_g_.step();
        ++global_step_;
        if (events_.on_step) events_.on_step(global_step_, 'G');

        g_acc += g_loss_value;
        d_acc += d_loss_value;
        content_acc += content.value;
        adv_acc += adv.value;
        ++batches;
    }

    EpochLog log;
    log.phase = adversarial_phase ? TrainPhase::kAdversarial : TrainPhase::kPretrain;
    log.epoch = epoch_in_phase_ + 1;
    log.g_loss = g_acc / batches;
    if (adversarial_phase) {
        log.d_loss = d_acc / batches;
        log.content = content_acc / batches;
        log.adversarial = adv_acc / batches;
    }
    validate_epoch(train_hr, log);
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    after_epoch(std::move(log));
}

void Trainer::pretrain(const std::vector<SliceImage>& train_hr) {
    if (train_hr.empty()) throw TrainError("empty training set");
    if (phase_ != TrainPhase::kPretrain) throw TrainError("pretraining phase already finished");
    while (epoch_in_phase_ < train_cfg_.pretrain_epochs) run_epoch(train_hr, false);
    phase_ = TrainPhase::kAdversarial;
    epoch_in_phase_ = 0;
}

void Trainer::adversarial(const std::vector<SliceImage>& train_hr) {
    if (train_hr.empty()) throw TrainError("empty training set");
    if (phase_ != TrainPhase::kAdversarial)
        throw TrainError("run the pretraining phase before adversarial training");
    if (!adv_optimizers_reset_) {
        // Fresh optimizer moments for the new objective.
        opt_g_ = Adam(train_cfg_.lr, train_cfg_.beta1, train_cfg_.beta2, train_cfg_.adam_eps);
        opt_g_.attach(g_.parameters());
        opt_d_ = Adam(train_cfg_.lr, train_cfg_.beta1, train_cfg_.beta2, train_cfg_.adam_eps);
        opt_d_.attach(d_.parameters());
        adv_optimizers_reset_ = true;
    }
    while (epoch_in_phase_ < train_cfg_.adversarial_epochs) run_epoch(train_hr, true);
}

void Trainer::save_checkpoint(const std::string& path) {
    json arrays = json::array();
    std::vector<unsigned char> payload;

    auto add_tensor = [&](const std::string& name, const Tensor& t) {
        arrays.push_back({{"name", name}, {"numel", t.numel()}});
        append_bytes(payload, t.data(), static_cast<size_t>(t.numel()) * sizeof(float));
    };

    for (auto& p : g_.parameters()) add_tensor("g:" + p.name, *p.value);
    for (auto& p : d_.parameters()) add_tensor("d:" + p.name, *p.value);
    for (size_t i = 0; i < opt_g_.slot_count(); ++i) {
        add_tensor("gm:" + opt_g_.slot_name(i), opt_g_.slot_m(i));
        add_tensor("gv:" + opt_g_.slot_name(i), opt_g_.slot_v(i));
    }
    for (size_t i = 0; i < opt_d_.slot_count(); ++i) {
        add_tensor("dm:" + opt_d_.slot_name(i), opt_d_.slot_m(i));
        add_tensor("dv:" + opt_d_.slot_name(i), opt_d_.slot_v(i));
    }

    json rng_state = json::array();
    for (uint64_t word : rng_.save_state()) rng_state.push_back(u64_hex(word));

    json meta{{"phase", to_string(phase_)},
              {"epoch_in_phase", epoch_in_phase_},
              {"global_step", global_step_},
              {"adv_optimizers_reset", adv_optimizers_reset_},
              {"rng", rng_state},
              {"adam_g_t", opt_g_.t()},
              {"adam_d_t", opt_d_.t()},
              {"generator", generator_config_json(gen_cfg_)},
              {"discriminator",
               json{{"channels", disc_cfg_.channels}, {"in_h", disc_cfg_.in_h}, {"in_w", disc_cfg_.in_w}}},
              {"train", train_config_json(train_cfg_)},
              {"degradation", degradation_json(degradation_)},
              {"features_hash", features_.weights_hash()},
              {"arrays", arrays}};
    const std::string header = meta.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + path + "' for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    const uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), 4);
    const uint32_t header_len = static_cast<uint32_t>(header.size());
    out.write(reinterpret_cast<const char*>(&header_len), 4);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw CheckpointError("short write to checkpoint '" + path + "'");
}

std::unique_ptr<Trainer> Trainer::load_checkpoint(const std::string& path,
                                                  const FeatureWeights& features) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
    uint32_t version = 0, header_len = 0;
    if (!in.read(reinterpret_cast<char*>(&version), 4)) throw CheckpointError("truncated checkpoint");
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                              " (expected " + std::to_string(kCheckpointVersion) + ")");
    if (!in.read(reinterpret_cast<char*>(&header_len), 4)) throw CheckpointError("truncated checkpoint");
    std::string header(header_len, '\0');
    if (!in.read(header.data(), header_len)) throw CheckpointError("truncated checkpoint header");

    json meta;
    try {
        meta = json::parse(header);
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("checkpoint metadata is not valid JSON: ") + e.what());
    }

    DiscriminatorConfig disc_cfg;
    disc_cfg.channels = meta.at("discriminator").at("channels").get<int>();
    disc_cfg.in_h = meta.at("discriminator").at("in_h").get<int>();
    disc_cfg.in_w = meta.at("discriminator").at("in_w").get<int>();

    auto trainer = std::make_unique<Trainer>(generator_config_from_json(meta.at("generator")),
                                             disc_cfg, train_config_from_json(meta.at("train")),
                                             degradation_from_json(meta.at("degradation")), features);

    if (trainer->features_.weights_hash() != meta.at("features_hash").get<std::string>())
        throw CheckpointError("feature weights differ from the ones used at save time");

    trainer->phase_ = train_phase_from_string(meta.at("phase").get<std::string>());
    trainer->epoch_in_phase_ = meta.at("epoch_in_phase").get<int>();
    trainer->global_step_ = meta.at("global_step").get<int64_t>();
    trainer->adv_optimizers_reset_ = meta.at("adv_optimizers_reset").get<bool>();
    trainer->opt_g_.set_t(meta.at("adam_g_t").get<int64_t>());
    trainer->opt_d_.set_t(meta.at("adam_d_t").get<int64_t>());

    std::array<uint64_t, 6> rng_state{};
    const auto& jr = meta.at("rng");
    if (jr.size() != rng_state.size()) throw CheckpointError("bad rng state length");
    for (size_t i = 0; i < rng_state.size(); ++i)
        rng_state[i] = u64_from_hex(jr.at(i).get<std::string>());
    trainer->rng_.load_state(rng_state);

    std::vector<std::pair<std::string, Tensor*>> slots;
    for (auto& p : trainer->g_.parameters()) slots.emplace_back("g:" + p.name, p.value);
    for (auto& p : trainer->d_.parameters()) slots.emplace_back("d:" + p.name, p.value);
    for (size_t i = 0; i < trainer->opt_g_.slot_count(); ++i) {
        slots.emplace_back("gm:" + trainer->opt_g_.slot_name(i), &trainer->opt_g_.slot_m(i));
        slots.emplace_back("gv:" + trainer->opt_g_.slot_name(i), &trainer->opt_g_.slot_v(i));
    }
    for (size_t i = 0; i < trainer->opt_d_.slot_count(); ++i) {
        slots.emplace_back("dm:" + trainer->opt_d_.slot_name(i), &trainer->opt_d_.slot_m(i));
        slots.emplace_back("dv:" + trainer->opt_d_.slot_name(i), &trainer->opt_d_.slot_v(i));
    }

    const auto& arrays = meta.at("arrays");
    if (arrays.size() != slots.size())
        throw CheckpointError("checkpoint holds " + std::to_string(arrays.size()) +
                              " arrays, expected " + std::to_string(slots.size()));
    for (size_t i = 0; i < slots.size(); ++i) {
        const std::string name = arrays.at(i).at("name").get<std::string>();
        const int64_t numel = arrays.at(i).at("numel").get<int64_t>();
        if (name != slots[i].first)
            throw CheckpointError("checkpoint array '" + name + "' does not match expected '" +
                                  slots[i].first + "'");
        if (numel != slots[i].second->numel())
            throw CheckpointError("checkpoint array '" + name + "' has " + std::to_string(numel) +
                                  " elements, expected " + std::to_string(slots[i].second->numel()));
        if (!in.read(reinterpret_cast<char*>(slots[i].second->data()),
                     static_cast<std::streamsize>(numel * sizeof(float))))
            throw CheckpointError("checkpoint payload truncated at array '" + name + "'");
    }
    char extra;
    if (in.read(&extra, 1)) throw CheckpointError("checkpoint has trailing bytes");
    return trainer;
}

} // namespace mrsr
