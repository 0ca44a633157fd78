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

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mrsr/degradation.hpp"
#include "mrsr/features.hpp"
#include "mrsr/image.hpp"
#include "mrsr/losses.hpp"
#include "mrsr/model.hpp"
#include "mrsr/rng.hpp"

namespace mrsr {

template <typename T>
class AdamT {
public:
    AdamT() = default;
    AdamT(double lr, double beta1, double beta2, double eps)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Captures the learnable entries; the model must stay at a fixed
    // address afterwards.
    void attach(const std::vector<ParamRef<T>>& params) {
        params_.clear();
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            if (!p.grad) continue;
            params_.push_back(p);
            m_.emplace_back(p.value->dims());
            v_.emplace_back(p.value->dims());
        }
        t_ = 0;
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            TensorT<T>& p = *params_[i].value;
            const TensorT<T>& g = *params_[i].grad;
            TensorT<T>& m = m_[i];
            TensorT<T>& v = v_[i];
            for (int64_t j = 0; j < p.numel(); ++j) {
                const double gj = static_cast<double>(g[j]);
                const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
                const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
                m[j] = static_cast<T>(mj);
                v[j] = static_cast<T>(vj);
                p[j] = static_cast<T>(p[j] - lr_ * (mj / bc1) / (std::sqrt(vj / bc2) + eps_));
            }
        }
    }

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    int64_t t() const { return t_; }
    void set_t(int64_t t) { t_ = t; }

    size_t slot_count() const { return params_.size(); }
    const std::string& slot_name(size_t i) const { return params_[i].name; }
    TensorT<T>& slot_m(size_t i) { return m_[i]; }
    TensorT<T>& slot_v(size_t i) { return v_[i]; }

private:
    double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int64_t t_ = 0;
    std::vector<ParamRef<T>> params_;
    std::vector<TensorT<T>> m_, v_;
};

using Adam = AdamT<float>;

enum class TrainPhase { kPretrain, kAdversarial };

const char* to_string(TrainPhase phase);
TrainPhase train_phase_from_string(const std::string& s);

struct TrainConfig {
    int batch_size = 16;
    int pretrain_epochs = 20;
    int adversarial_epochs = 50;
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    PerceptualWeights perceptual{};
    double divergence_threshold = 1e4;
    uint64_t seed = 0;
    int hr_crop_h = 224;
    int hr_crop_w = 224;
    int validation_batch = 16;

    void validate() const;
};

struct EpochLog {
    TrainPhase phase = TrainPhase::kPretrain;
    int epoch = 0; // 1-based within the phase
    double g_loss = 0.0;
    std::optional<double> d_loss; // absent during pretraining
    double content = 0.0;
    double adversarial = 0.0;
    std::optional<double> val_psnr_db; // absent when validation output is identical
    double val_ssim = 0.0;
    double wall_seconds = 0.0;
    int64_t step = 0;
};

// Test and logging hooks; on_step reports each optimizer step as 'D' or 'G'.
struct TrainEvents {
    std::function<void(int64_t step, char which)> on_step;
    std::function<void(const EpochLog&)> on_epoch;
};

// Two-phase training driver: generator warm-up on pixel MSE, then
// adversarial training against the discriminator with the perceptual
// objective. Per batch the discriminator updates first, then the
// generator. Non-copyable because the optimizers hold parameter
// addresses.
class Trainer {
public:
    Trainer(GeneratorConfig gen_cfg, DiscriminatorConfig disc_cfg, TrainConfig train_cfg,
            DegradationSpec degradation, const FeatureWeights& features);

    Trainer(const Trainer&) = delete;
    Trainer& operator=(const Trainer&) = delete;

    void set_events(TrainEvents events) { events_ = std::move(events); }

    // Path written after every epoch; on divergence it retains the last
    // finished epoch.
    void set_auto_checkpoint(const std::string& path) { auto_checkpoint_ = path; }

    // Experiment log (JSON lines). Opens for append and writes a header
    // line echoing the configuration.
    void attach_log(const std::string& path);

    // Runs the remaining epochs of each phase. Both throw DivergenceError
    // when a loss leaves the configured range.
    void pretrain(const std::vector<SliceImage>& train_hr);
    void adversarial(const std::vector<SliceImage>& train_hr);

    Generator& generator() { return g_; }
    Discriminator& discriminator() { return d_; }
    FeatureExtractor& features() { return features_; }

    TrainPhase phase() const { return phase_; }
    int epoch_in_phase() const { return epoch_in_phase_; }
    int64_t global_step() const { return global_step_; }
    const TrainConfig& train_config() const { return train_cfg_; }
    const GeneratorConfig& generator_config() const { return gen_cfg_; }
    const DegradationSpec& degradation() const { return degradation_; }
    const std::vector<EpochLog>& logs() const { return logs_; }

    void save_checkpoint(const std::string& path);
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path,
                                                    const FeatureWeights& features);

private:
    struct Batch {
        Tensor lr;
        Tensor hr;
    };

    Batch make_batch(const std::vector<SliceImage>& hr_slices, const std::vector<int>& order,
                     size_t start, size_t count) const;
    std::vector<int> validation_indices(size_t n) const;
    void validate_epoch(const std::vector<SliceImage>& train_hr, EpochLog& log);
    void run_epoch(const std::vector<SliceImage>& train_hr, bool adversarial_phase);
    void check_finite(double value, const char* what);
    void after_epoch(EpochLog log);
    void write_log_line(const EpochLog& log);

    GeneratorConfig gen_cfg_;
    DiscriminatorConfig disc_cfg_;
    TrainConfig train_cfg_;
    DegradationSpec degradation_;
    Generator g_;
    Discriminator d_;
    FeatureExtractor features_;
    Adam opt_g_, opt_d_;
    Rng rng_;
    TrainPhase phase_ = TrainPhase::kPretrain;
    int epoch_in_phase_ = 0;
    int64_t global_step_ = 0;
    bool adv_optimizers_reset_ = false;
    TrainEvents events_;
    std::vector<EpochLog> logs_;
    std::string auto_checkpoint_;
    std::string log_path_;
};

} // namespace mrsr
