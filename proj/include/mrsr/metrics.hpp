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
#include <optional>
#include <string>
#include <vector>

#include "mrsr/degradation.hpp"
#include "mrsr/image.hpp"

namespace mrsr {

struct MetricParams {
    double data_range = 1.0;
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
};

// PSNR is undefined for identical images; the flag is the only signal,
// never an inf or NaN stand-in.
struct PsnrResult {
    bool identical = false;
    double db = 0.0;
};

double mean_squared_error(const SliceImage& a, const SliceImage& b);

// The formula itself; mse must be positive.
double psnr_from_mse(double mse, double data_range);

PsnrResult psnr(const SliceImage& a, const SliceImage& b, const MetricParams& params = {});

// Gaussian-windowed SSIM over the valid region (no border padding).
double ssim(const SliceImage& a, const SliceImage& b, const MetricParams& params = {});

// One reconstruction route under evaluation: how to degrade the reference
// and how to bring the low-res result back up.
using SrFn = std::function<SliceImage(const SliceImage&)>;

struct EvalMethod {
    std::string name;
    DegradationSpec degradation;
    SrFn sr;
};

struct EvalImage {
    std::string id;
    SliceImage hr;
};

struct ImageEval {
    std::string image_id;
    bool identical = false;
    double psnr_db = 0.0;
    double ssim_value = 0.0;
};

struct MethodReport {
    std::string name;
    int n_images = 0;
    int n_identical = 0;
    std::optional<double> mean_psnr_db; // absent when every pair was identical
    double mean_ssim = 0.0;
    std::vector<ImageEval> images;
};

struct EvalReport {
    std::vector<MethodReport> methods;
};

// Runs every method over every reference image. A method failure is
// rethrown as EvalError naming the method.
EvalReport evaluate_methods(const std::vector<EvalImage>& references,
                            const std::vector<EvalMethod>& methods,
                            const MetricParams& params = {});

// Plain-text summary with methods as columns and PSNR/SSIM as rows.
std::string eval_table(const EvalReport& report);

std::string eval_report_json_string(const EvalReport& report);

// JSON summary plus a JSONL file with one line per (method, image).
void save_eval_report(const std::string& json_path, const std::string& jsonl_path,
                      const EvalReport& report);

} // namespace mrsr
