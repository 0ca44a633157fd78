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

#include "mrsr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mrsr/errors.hpp"

namespace mrsr {

using nlohmann::json;

namespace {

void check_same_shape(const SliceImage& a, const SliceImage& b, const char* what) {
    if (a.h != b.h || a.w != b.w)
        throw ShapeError(std::string(what) + " shape mismatch: " + std::to_string(a.h) + "x" +
                         std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" + std::to_string(b.w));
}

std::vector<double> gaussian_kernel(int window, double sigma) {
    std::vector<double> k(static_cast<size_t>(window));
    const double c = (window - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < window; ++i) {
        const double d = (i - c) / sigma;
        k[static_cast<size_t>(i)] = std::exp(-0.5 * d * d);
        sum += k[static_cast<size_t>(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable valid-mode filtering: rows first, then columns.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& kernel) {
    const int k = static_cast<int>(kernel.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> rows(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kernel[static_cast<size_t>(i)] * img[static_cast<size_t>(y) * w + x + i];
            rows[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += kernel[static_cast<size_t>(i)] * rows[static_cast<size_t>(y + i) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

} // namespace

double mean_squared_error(const SliceImage& a, const SliceImage& b) {
    check_same_shape(a, b, "mse");
    const size_t n = a.pixels.size();
    if (n == 0) throw ShapeError("mse of empty images");
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

double psnr_from_mse(double mse, double data_range) {
    if (!(data_range > 0.0)) throw DomainError("psnr data_range must be positive");
    if (!(mse > 0.0)) throw DomainError("psnr needs a positive mse; identical images have no psnr");
    return 10.0 * std::log10(data_range * data_range / mse);
}

PsnrResult psnr(const SliceImage& a, const SliceImage& b, const MetricParams& params) {
    const double mse = mean_squared_error(a, b);
    PsnrResult r;
    if (mse == 0.0) {
        r.identical = true;
        return r;
    }
    r.db = psnr_from_mse(mse, params.data_range);
    return r;
}

double ssim(const SliceImage& a, const SliceImage& b, const MetricParams& params) {
    check_same_shape(a, b, "ssim");
    const int win = params.ssim_window;
    if (win < 1 || win % 2 == 0) throw DomainError("ssim window must be odd and positive");
    if (a.h < win || a.w < win)
        throw ShapeError("image " + std::to_string(a.h) + "x" + std::to_string(a.w) +
                         " smaller than ssim window " + std::to_string(win));

    const int h = a.h, w = a.w;
    const size_t n = static_cast<size_t>(h) * w;
    std::vector<double> ia(n), ib(n), iaa(n), ibb(n), iab(n);
    for (size_t i = 0; i < n; ++i) {
        const double va = a.pixels[i], vb = b.pixels[i];
        ia[i] = va;
        ib[i] = vb;
        iaa[i] = va * va;
        ibb[i] = vb * vb;
        iab[i] = va * vb;
    }

    const auto kernel = gaussian_kernel(win, params.ssim_sigma);
    const auto mu_a = filter_valid(ia, h, w, kernel);
    const auto mu_b = filter_valid(ib, h, w, kernel);
    const auto e_aa = filter_valid(iaa, h, w, kernel);
    const auto e_bb = filter_valid(ibb, h, w, kernel);
    const auto e_ab = filter_valid(iab, h, w, kernel);

    const double c1 = params.ssim_k1 * params.data_range * params.ssim_k1 * params.data_range;
    const double c2 = params.ssim_k2 * params.data_range * params.ssim_k2 * params.data_range;

    double acc = 0.0;
    for (size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        // The volatile stores force each product through a rounded double so
        // the compiler cannot fuse them into the subtractions below; a fused
        // multiply-add on one side only would break the exact num == den
        // cancellation that makes ssim(a, a) equal one.
        volatile double pa_store = ma * ma;
        volatile double pb_store = mb * mb;
        volatile double pab_store = ma * mb;
        const double pa = pa_store, pb = pb_store, pab = pab_store;
        const double va = e_aa[i] - pa;
        const double vb = e_bb[i] - pb;
        const double cov = e_ab[i] - pab;
        const double num = (pab + pab + c1) * (cov + cov + c2);
        const double den = (pa + pb + c1) * (va + vb + c2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_a.size());
}

EvalReport evaluate_methods(const std::vector<EvalImage>& references,
                            const std::vector<EvalMethod>& methods,
                            const MetricParams& params) {
    if (references.empty()) throw EvalError("no reference images to evaluate");
    EvalReport report;
    for (const auto& method : methods) {
        MethodReport mr;
        mr.name = method.name;
        double psnr_acc = 0.0, ssim_acc = 0.0;
        int psnr_n = 0;
        try {
            method.degradation.validate();
            for (const auto& ref : references) {
                const SliceImage lr = downsample(ref.hr, method.degradation);
                const SliceImage sr = method.sr(lr);
                if (sr.h != ref.hr.h || sr.w != ref.hr.w)
                    throw ShapeError("produced " + std::to_string(sr.h) + "x" + std::to_string(sr.w) +
                                     " for a " + std::to_string(ref.hr.h) + "x" +
                                     std::to_string(ref.hr.w) + " reference");
                ImageEval ie;
                ie.image_id = ref.id;
                const PsnrResult pr = psnr(sr, ref.hr, params);
                ie.identical = pr.identical;
                if (pr.identical) {
                    ++mr.n_identical;
                } else {
                    ie.psnr_db = pr.db;
                    psnr_acc += pr.db;
                    ++psnr_n;
                }
                ie.ssim_value = ssim(sr, ref.hr, params);
                ssim_acc += ie.ssim_value;
                mr.images.push_back(std::move(ie));
                ++mr.n_images;
            }
        } catch (const std::exception& e) {
            throw EvalError("method '" + method.name + "' failed: " + e.what());
        }
        if (psnr_n > 0) mr.mean_psnr_db = psnr_acc / psnr_n;
        mr.mean_ssim = ssim_acc / mr.n_images;
        report.methods.push_back(std::move(mr));
    }
    return report;
}

std::string eval_table(const EvalReport& report) {
    auto fmt = [](double v, int prec) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
        return std::string(buf);
    };
    size_t name_w = 9; // "psnr (db)"
    for (const auto& m : report.methods) name_w = std::max(name_w, m.name.size());
    const size_t col_w = std::max<size_t>(name_w + 2, 12);

    std::ostringstream out;
    auto cell = [&](const std::string& s) {
        out << s;
        for (size_t i = s.size(); i < col_w; ++i) out << ' ';
    };
    cell("");
    for (const auto& m : report.methods) cell(m.name);
    out << '\n';
    cell("psnr (db)");
    for (const auto& m : report.methods)
        cell(m.mean_psnr_db ? fmt(*m.mean_psnr_db, 2) : std::string("identical"));
    out << '\n';
    cell("ssim");
    for (const auto& m : report.methods) cell(fmt(m.mean_ssim, 4));
    out << '\n';
    return out.str();
}

namespace {

json report_to_json(const EvalReport& report) {
    json methods = json::array();
    for (const auto& m : report.methods) {
        json jm{{"name", m.name},
                {"n_images", m.n_images},
                {"n_identical", m.n_identical},
                {"mean_ssim", m.mean_ssim}};
        if (m.mean_psnr_db)
            jm["mean_psnr_db"] = *m.mean_psnr_db;
        else
            jm["mean_psnr_db"] = nullptr;
        methods.push_back(std::move(jm));
    }
    return json{{"methods", methods}};
}

} // namespace

std::string eval_report_json_string(const EvalReport& report) {
    return report_to_json(report).dump(2);
}

void save_eval_report(const std::string& json_path, const std::string& jsonl_path,
                      const EvalReport& report) {
    {
        std::ofstream out(json_path);
        if (!out) throw EvalError("cannot open '" + json_path + "' for writing");
        out << eval_report_json_string(report) << '\n';
    }
    std::ofstream out(jsonl_path);
    if (!out) throw EvalError("cannot open '" + jsonl_path + "' for writing");
    for (const auto& m : report.methods) {
        for (const auto& ie : m.images) {
            json line{{"method", m.name},
                      {"image", ie.image_id},
                      {"identical", ie.identical},
                      {"ssim", ie.ssim_value}};
            if (ie.identical)
                line["psnr_db"] = nullptr;
            else
                line["psnr_db"] = ie.psnr_db;
            out << line.dump() << '\n';
        }
    }
}

} // namespace mrsr
