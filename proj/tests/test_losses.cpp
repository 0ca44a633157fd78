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

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mrsr/features.hpp"
#include "mrsr/losses.hpp"
#include "mrsr/rng.hpp"

using namespace mrsr;

namespace {

using DTensor = TensorT<double>;

DTensor random_dtensor(std::vector<int> dims, uint64_t seed, double lo, double hi) {
    DTensor t(std::move(dims));
    Rng rng(seed);
    for (auto& v : t.storage()) v = lo + (hi - lo) * rng.uniform();
    return t;
}

// Central-difference check of d(loss)/d(x[i]) for a scalar-valued loss.
void check_grad(DTensor& x, const DTensor& analytic,
                const std::function<double()>& loss, double rtol = 1e-6) {
    const double h = 1e-6;
    for (size_t i = 0; i < x.storage().size(); ++i) {
        const double saved = x.storage()[i];
        x.storage()[i] = saved + h;
        const double lp = loss();
        x.storage()[i] = saved - h;
        const double lm = loss();
        x.storage()[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double a = analytic.storage()[i];
        CHECK(std::abs(numeric - a) <= 1e-9 + rtol * std::max(std::abs(numeric), std::abs(a)));
    }
}

} // namespace

TEST_SUITE("losses") {

TEST_CASE("pixel mse matches hand computed values") {
    DTensor sr({1, 1, 2, 2});
    DTensor hr({1, 1, 2, 2});
    sr.storage() = {0.1, 0.2, 0.3, 0.4};
    hr.storage() = {0.0, 0.0, 0.0, 0.0};

    const auto r = pixel_mse_loss(sr, hr);
    // (0.01 + 0.04 + 0.09 + 0.16) / 4 = 0.075
    CHECK(r.value == doctest::Approx(0.075).epsilon(1e-12));
    // Gradient 2 * (sr - hr) / n with n = 4.
    CHECK(r.grad.storage()[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(r.grad.storage()[3] == doctest::Approx(0.2).epsilon(1e-12));

    DTensor other({1, 1, 4, 1});
    CHECK_THROWS_AS(pixel_mse_loss(sr, other), ShapeError);
}

TEST_CASE("pixel mse gradient matches finite differences") {
    DTensor sr = random_dtensor({2, 1, 3, 3}, 5u, 0.0, 1.0);
    const DTensor hr = random_dtensor({2, 1, 3, 3}, 6u, 0.0, 1.0);
    const auto r = pixel_mse_loss(sr, hr);
    check_grad(sr, r.grad, [&]() { return pixel_mse_loss(sr, hr).value; });
}

TEST_CASE("adversarial generator loss is the mean negative log probability") {
    DTensor p({4, 1});
    p.storage() = {0.5, 0.5, 0.5, 0.5};
    const auto half = adversarial_generator_loss(p);
    // -ln 0.5 = 0.6931471805599453
    CHECK(half.value == doctest::Approx(0.6931471805599453).epsilon(1e-12));

    p.storage() = {0.25, 0.25, 0.25, 0.25};
    const auto quarter = adversarial_generator_loss(p);
    // -ln 0.25 = 1.3862943611198906
    CHECK(quarter.value == doctest::Approx(1.3862943611198906).epsilon(1e-12));

    // Gradient of mean(-log p) is -1 / (p * n).
    CHECK(quarter.grad.storage()[0] == doctest::Approx(-1.0 / (0.25 * 4.0)).epsilon(1e-12));
}

TEST_CASE("adversarial generator loss gradient matches finite differences") {
    DTensor p = random_dtensor({5, 1}, 7u, 0.1, 0.9);
    const auto r = adversarial_generator_loss(p);
    check_grad(p, r.grad, [&]() { return adversarial_generator_loss(p).value; });
}

TEST_CASE("probabilities outside the unit interval are rejected") {
    DTensor p({2, 1});
    p.storage() = {0.5, 1.2};
    CHECK_THROWS_AS(adversarial_generator_loss(p), DomainError);
    p.storage() = {-0.01, 0.5};
    CHECK_THROWS_AS(adversarial_generator_loss(p), DomainError);
    p.storage() = {std::nan(""), 0.5};
    CHECK_THROWS_AS(adversarial_generator_loss(p), DomainError);

    DTensor q({1, 1});
    q.storage() = {1.5};
    DTensor ok({1, 1});
    ok.storage() = {0.5};
    CHECK_THROWS_AS(discriminator_loss(q, ok), DomainError);
    CHECK_THROWS_AS(discriminator_loss(ok, q), DomainError);

    DTensor empty({0, 1});
    CHECK_THROWS_AS(adversarial_generator_loss(empty), ShapeError);
    CHECK_THROWS_AS(discriminator_loss(empty, empty), ShapeError);
}

TEST_CASE("exact zero and one probabilities are clamped, not infinite") {
    DTensor p({2, 1});
    p.storage() = {0.0, 1.0};
    const auto r = adversarial_generator_loss(p);
    CHECK(std::isfinite(r.value));
    // The p = 0 sample contributes -ln(eps) / 2.
    CHECK(r.value == doctest::Approx((-std::log(kProbEps) - std::log(1.0 - kProbEps)) / 2.0)
                         .epsilon(1e-9));
    for (double g : r.grad.storage()) CHECK(std::isfinite(g));
}

TEST_CASE("discriminator loss averages over both batches") {
    DTensor real({1, 1});
    DTensor fake({1, 1});
    real.storage() = {0.9};
    fake.storage() = {0.2};
    const auto r = discriminator_loss(real, fake);
    // -(ln 0.9 + ln 0.8) / 2 = 0.16425203348472652
    CHECK(r.value == doctest::Approx(0.16425203348472652).epsilon(1e-12));
    CHECK(r.grad_real.storage()[0] == doctest::Approx(-1.0 / (0.9 * 2.0)).epsilon(1e-12));
    CHECK(r.grad_fake.storage()[0] == doctest::Approx(1.0 / (0.8 * 2.0)).epsilon(1e-12));
}

TEST_CASE("discriminator loss handles uneven batch sizes") {
    DTensor real({3, 1});
    DTensor fake({1, 1});
    real.storage() = {0.5, 0.5, 0.5};
    fake.storage() = {0.5};
    const auto r = discriminator_loss(real, fake);
    // All four samples contribute -ln 0.5, normalized by n = 4.
    CHECK(r.value == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    CHECK(r.grad_real.storage()[0] == doctest::Approx(-1.0 / (0.5 * 4.0)).epsilon(1e-12));
    CHECK(r.grad_fake.storage()[0] == doctest::Approx(1.0 / (0.5 * 4.0)).epsilon(1e-12));
}

TEST_CASE("discriminator loss gradients match finite differences") {
    DTensor real = random_dtensor({3, 1}, 8u, 0.1, 0.9);
    DTensor fake = random_dtensor({2, 1}, 9u, 0.1, 0.9);
    const auto r = discriminator_loss(real, fake);
    check_grad(real, r.grad_real, [&]() { return discriminator_loss(real, fake).value; });
    check_grad(fake, r.grad_fake, [&]() { return discriminator_loss(real, fake).value; });
}

TEST_CASE("content loss is zero for identical inputs and positive otherwise") {
    const FeatureWeights weights = make_synthetic_features(7u);
    FeatureExtractorT<double> features(weights);

    const DTensor a = random_dtensor({1, 1, 8, 8}, 10u, 0.0, 1.0);
    const auto same = content_loss(features, a, a);
    CHECK(same.value == 0.0);
    for (double g : same.grad.storage()) CHECK(g == 0.0);

    const DTensor b = random_dtensor({1, 1, 8, 8}, 11u, 0.0, 1.0);
    const auto diff = content_loss(features, a, b);
    CHECK(diff.value > 0.0);
    CHECK(diff.grad.dims() == a.dims());
}

TEST_CASE("content loss gradient matches finite differences") {
    const FeatureWeights weights = make_synthetic_features(7u);
    FeatureExtractorT<double> features(weights);

    DTensor sr = random_dtensor({1, 1, 6, 6}, 12u, 0.2, 0.8);
    const DTensor hr = random_dtensor({1, 1, 6, 6}, 13u, 0.2, 0.8);
    const auto r = content_loss(features, sr, hr);
    check_grad(sr, r.grad, [&]() { return content_loss(features, sr, hr).value; }, 1e-4);
}

TEST_CASE("perceptual total combines content and adversarial terms") {
    const PerceptualWeights w;
    CHECK(w.content == 1.0);
    CHECK(w.adversarial == 1e-3);
    CHECK(perceptual_total(w, 0.5, 2.0) == doctest::Approx(0.5 + 2e-3).epsilon(1e-15));

    PerceptualWeights custom;
    custom.content = 2.0;
    custom.adversarial = 0.1;
    CHECK(perceptual_total(custom, 0.25, 1.0) == doctest::Approx(0.6).epsilon(1e-15));
}

} // TEST_SUITE
