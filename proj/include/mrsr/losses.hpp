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

#include <cmath>

#include "mrsr/errors.hpp"
#include "mrsr/features.hpp"
#include "mrsr/tensor.hpp"

namespace mrsr {

// Probabilities are clamped away from 0 and 1 before any log; the clamp is
// treated as identity in the backward pass.
constexpr double kProbEps = 1e-7;

template <typename T>
struct LossResult {
    double value = 0.0;
    TensorT<T> grad;
};

namespace detail {

template <typename T>
double clamped_prob(T p) {
    const double v = static_cast<double>(p);
    if (!(v >= 0.0) || !(v <= 1.0))
        throw DomainError("probability " + std::to_string(v) + " outside [0,1]");
    return std::min(std::max(v, kProbEps), 1.0 - kProbEps);
}

} // namespace detail

// Mean squared error over all pixels, with its gradient w.r.t. the first
// argument.
template <typename T>
LossResult<T> pixel_mse_loss(const TensorT<T>& sr, const TensorT<T>& hr) {
    if (sr.dims() != hr.dims())
        throw ShapeError("pixel loss shape mismatch: " + sr.shape_str() + " vs " + hr.shape_str());
    const int64_t n = sr.numel();
    LossResult<T> out;
    out.grad = TensorT<T>(sr.dims());
    double acc = 0.0;
    const double scale = 2.0 / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(sr[i]) - static_cast<double>(hr[i]);
        acc += d * d;
        out.grad[i] = static_cast<T>(scale * d);
    }
    out.value = acc / static_cast<double>(n);
    return out;
}

// MSE between tap features of the super-resolved and reference images,
// with the gradient mapped back through the frozen extractor to sr.
template <typename T>
LossResult<T> content_loss(FeatureExtractorT<T>& features, const TensorT<T>& sr, const TensorT<T>& hr) {
    if (sr.dims() != hr.dims())
        throw ShapeError("content loss shape mismatch: " + sr.shape_str() + " vs " + hr.shape_str());
    TensorT<T> f_hr = features.forward(hr, false);
    TensorT<T> f_sr = features.forward(sr, true);
    auto feat = pixel_mse_loss(f_sr, f_hr);
    LossResult<T> out;
    out.value = feat.value;
    out.grad = features.backward_to_input(feat.grad);
    return out;
}

// Generator-side adversarial term: mean of -log D(sr).
template <typename T>
LossResult<T> adversarial_generator_loss(const TensorT<T>& d_sr) {
    const int64_t n = d_sr.numel();
    if (n == 0) throw ShapeError("adversarial loss needs at least one probability");
    LossResult<T> out;
    out.grad = TensorT<T>(d_sr.dims());
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double p = detail::clamped_prob(d_sr[i]);
        acc += -std::log(p);
        out.grad[i] = static_cast<T>(-1.0 / (p * static_cast<double>(n)));
    }
    out.value = acc / static_cast<double>(n);
    return out;
}

template <typename T>
struct DiscriminatorLossResult {
    double value = 0.0;
    TensorT<T> grad_real;
    TensorT<T> grad_fake;
};

// Binary cross-entropy with target 1 for reference images and 0 for
// generated ones, averaged over every sample of both batches.
template <typename T>
DiscriminatorLossResult<T> discriminator_loss(const TensorT<T>& d_real, const TensorT<T>& d_fake) {
    const int64_t n = d_real.numel() + d_fake.numel();
    if (n == 0) throw ShapeError("discriminator loss needs at least one probability");
    DiscriminatorLossResult<T> out;
    out.grad_real = TensorT<T>(d_real.dims());
    out.grad_fake = TensorT<T>(d_fake.dims());
    double acc = 0.0;
    for (int64_t i = 0; i < d_real.numel(); ++i) {
        const double p = detail::clamped_prob(d_real[i]);
        acc += -std::log(p);
        out.grad_real[i] = static_cast<T>(-1.0 / (p * static_cast<double>(n)));
    }
    for (int64_t i = 0; i < d_fake.numel(); ++i) {
        const double p = detail::clamped_prob(d_fake[i]);
        acc += -std::log(1.0 - p);
        out.grad_fake[i] = static_cast<T>(1.0 / ((1.0 - p) * static_cast<double>(n)));
    }
    out.value = acc / static_cast<double>(n);
    return out;
}

struct PerceptualWeights {
    double content = 1.0;
    double adversarial = 1e-3;
};

inline double perceptual_total(const PerceptualWeights& w, double content, double adversarial) {
    return w.content * content + w.adversarial * adversarial;
}

} // namespace mrsr
