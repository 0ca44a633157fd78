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
#include <string>
#include <vector>

#include "mrsr/rng.hpp"
#include "mrsr/tensor.hpp"

namespace mrsr {

// Layers run in float for training and in double for the finite-difference
// gradient checks, hence the scalar template parameter throughout.
//
// forward(x, train) caches whatever backward() needs only when train is set;
// inference passes keep no per-layer state. backward(dy) accumulates into the
// parameter gradients and returns the gradient w.r.t. the layer input.

template <typename T>
struct ParamRef {
    std::string name;
    TensorT<T>* value = nullptr;
    TensorT<T>* grad = nullptr; // null for buffers such as BN running stats
};

namespace detail {

// im2col over a row band [y0, y1) of the output grid. col is
// (c_in*k*k) x ((y1-y0)*out_w), zero-padded where taps fall outside.
template <typename T>
void im2col_rows(const T* x, int c_in, int h, int w, int k, int stride, int pad,
                 int out_w, int y0, int y1, T* col) {
    const int band_w = (y1 - y0) * out_w;
    for (int ic = 0; ic < c_in; ++ic) {
        const T* xc = x + static_cast<int64_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + (static_cast<int64_t>(ic) * k * k + ky * k + kx) * band_w;
                for (int oy = y0; oy < y1; ++oy) {
                    const int sy = oy * stride - pad + ky;
                    T* dst = row + static_cast<int64_t>(oy - y0) * out_w;
                    if (sy < 0 || sy >= h) {
                        std::fill(dst, dst + out_w, T(0));
                        continue;
                    }
                    const T* src = xc + static_cast<int64_t>(sy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int sx = ox * stride - pad + kx;
                        dst[ox] = (sx >= 0 && sx < w) ? src[sx] : T(0);
                    }
                }
            }
        }
    }
}

// Scatter-add inverse of im2col_rows.
template <typename T>
void col2im_rows_add(const T* col, int c_in, int h, int w, int k, int stride, int pad,
                     int out_w, int y0, int y1, T* dx) {
    const int band_w = (y1 - y0) * out_w;
    for (int ic = 0; ic < c_in; ++ic) {
        T* xc = dx + static_cast<int64_t>(ic) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + (static_cast<int64_t>(ic) * k * k + ky * k + kx) * band_w;
                for (int oy = y0; oy < y1; ++oy) {
                    const int sy = oy * stride - pad + ky;
                    if (sy < 0 || sy >= h) continue;
                    const T* src = row + static_cast<int64_t>(oy - y0) * out_w;
                    T* dst = xc + static_cast<int64_t>(sy) * w;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int sx = ox * stride - pad + kx;
                        if (sx >= 0 && sx < w) dst[sx] += src[ox];
                    }
                }
            }
        }
    }
}

// Cap on the scratch im2col buffer, in elements.
constexpr int64_t kConvChunkElems = int64_t(1) << 22;

} // namespace detail

template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_c, int out_c, int k, int stride = 1, int pad = 0)
        : name_(std::move(name)), in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad),
          w_({out_c, in_c, k, k}), gw_({out_c, in_c, k, k}), b_({out_c}), gb_({out_c}) {}

    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / (static_cast<double>(in_c_) * k_ * k_));
        for (int64_t i = 0; i < w_.numel(); ++i) w_[i] = static_cast<T>(rng.normal() * stddev);
        b_.fill(T(0));
    }

    int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
    int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }
    int in_channels() const { return in_c_; }
    int out_channels() const { return out_c_; }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        check_input(x);
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int oh = out_h(h), ow = out_w(w);
        if (oh < 1 || ow < 1)
            throw ShapeError(name_ + ": input " + x.shape_str() + " too small for kernel");
        TensorT<T> y({n, out_c_, oh, ow});

        const int kk = in_c_ * k_ * k_;
        const int rows_per_chunk = chunk_rows(kk, ow, oh);
        std::vector<T> col(static_cast<size_t>(kk) * rows_per_chunk * ow);

        for (int s = 0; s < n; ++s) {
            const T* xs = x.data() + static_cast<int64_t>(s) * in_c_ * h * w;
            T* ys = y.data() + static_cast<int64_t>(s) * out_c_ * oh * ow;
            for (int y0 = 0; y0 < oh; y0 += rows_per_chunk) {
                const int y1 = std::min(oh, y0 + rows_per_chunk);
                const int band = (y1 - y0) * ow;
                detail::im2col_rows(xs, in_c_, h, w, k_, stride_, pad_, ow, y0, y1, col.data());
                // y band = W (out_c x kk) * col (kk x band)
                std::vector<T> band_out(static_cast<size_t>(out_c_) * band);
                gemm(w_.data(), col.data(), band_out.data(), out_c_, kk, band, false);
                for (int oc = 0; oc < out_c_; ++oc) {
                    const T bias = b_[oc];
                    const T* src = band_out.data() + static_cast<int64_t>(oc) * band;
                    T* dst = ys + static_cast<int64_t>(oc) * oh * ow + static_cast<int64_t>(y0) * ow;
                    for (int i = 0; i < band; ++i) dst[i] = src[i] + bias;
                }
            }
        }
        if (train) {
            in_dims_ = x.dims();
            if (!frozen_) x_ = x;
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (in_dims_.empty()) throw Error(name_ + ": backward called without a training forward");
        const int n = in_dims_[0], h = in_dims_[2], w = in_dims_[3];
        const int oh = out_h(h), ow = out_w(w);
        TensorT<T> dx({n, in_c_, h, w});

        const int kk = in_c_ * k_ * k_;
        const int rows_per_chunk = chunk_rows(kk, ow, oh);
        std::vector<T> col(static_cast<size_t>(kk) * rows_per_chunk * ow);
        std::vector<T> col_grad(col.size());
        std::vector<T> band_in(static_cast<size_t>(out_c_) * rows_per_chunk * ow);

        for (int s = 0; s < n; ++s) {
            const T* dys = dy.data() + static_cast<int64_t>(s) * out_c_ * oh * ow;
            T* dxs = dx.data() + static_cast<int64_t>(s) * in_c_ * h * w;
            for (int y0 = 0; y0 < oh; y0 += rows_per_chunk) {
                const int y1 = std::min(oh, y0 + rows_per_chunk);
                const int band = (y1 - y0) * ow;
                // Gather the dy band contiguously per channel.
                for (int oc = 0; oc < out_c_; ++oc) {
                    const T* src = dys + static_cast<int64_t>(oc) * oh * ow + static_cast<int64_t>(y0) * ow;
                    std::copy(src, src + band, band_in.data() + static_cast<int64_t>(oc) * band);
                }
                if (!frozen_) {
                    const T* xs = x_.data() + static_cast<int64_t>(s) * in_c_ * h * w;
                    detail::im2col_rows(xs, in_c_, h, w, k_, stride_, pad_, ow, y0, y1, col.data());
                    // dW += dy_band (out_c x band) * col^T (band x kk)
                    gemm_bt(band_in.data(), col.data(), gw_.data(), out_c_, band, kk, true);
                }
                // dcol = W^T (kk x out_c) * dy_band (out_c x band)
                gemm_at(w_.data(), band_in.data(), col_grad.data(), kk, out_c_, band, false);
                detail::col2im_rows_add(col_grad.data(), in_c_, h, w, k_, stride_, pad_, ow, y0, y1, dxs);
                if (!frozen_) {
                    for (int oc = 0; oc < out_c_; ++oc) {
                        const T* src = band_in.data() + static_cast<int64_t>(oc) * band;
                        T acc = T(0);
                        for (int i = 0; i < band; ++i) acc += src[i];
                        gb_[oc] += acc;
                    }
                }
            }
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out) {
        out.push_back({name_ + ".w", &w_, &gw_});
        out.push_back({name_ + ".b", &b_, &gb_});
    }

    // Frozen layers keep backward-to-input but skip weight gradients.
    void set_frozen(bool f) { frozen_ = f; }

    TensorT<T>& weight() { return w_; }
    TensorT<T>& bias() { return b_; }
    int64_t param_count() const { return w_.numel() + b_.numel(); }

private:
    void check_input(const TensorT<T>& x) const {
        if (x.ndim() != 4 || x.dim(1) != in_c_)
            throw ShapeError(name_ + ": expected (n," + std::to_string(in_c_) +
                             ",h,w) input, got " + x.shape_str());
    }

    int chunk_rows(int kk, int ow, int oh) const {
        const int64_t per_row = static_cast<int64_t>(kk) * ow;
        int rows = static_cast<int>(std::max<int64_t>(1, detail::kConvChunkElems / std::max<int64_t>(per_row, 1)));
        return std::min(rows, oh);
    }

    std::string name_;
    int in_c_ = 0, out_c_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    bool frozen_ = false;
    TensorT<T> w_, gw_, b_, gb_;
    TensorT<T> x_;
    std::vector<int> in_dims_;
};

template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    BatchNorm2d(std::string name, int channels, double momentum = 0.1, double eps = 1e-5)
        : name_(std::move(name)), c_(channels), momentum_(momentum), eps_(eps),
          gamma_({channels}), g_gamma_({channels}), beta_({channels}), g_beta_({channels}),
          running_mean_({channels}), running_var_({channels}) {
        gamma_.fill(T(1));
        running_var_.fill(T(1));
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        if (x.ndim() != 4 || x.dim(1) != c_)
            throw ShapeError(name_ + ": expected (n," + std::to_string(c_) + ",h,w), got " + x.shape_str());
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int64_t ns = static_cast<int64_t>(n) * h * w;
        TensorT<T> y(x.dims());

        if (!train) {
            for (int c = 0; c < c_; ++c) {
                const T scale = gamma_[c] / static_cast<T>(std::sqrt(static_cast<double>(running_var_[c]) + eps_));
                const T shift = beta_[c] - scale * running_mean_[c];
                apply_channel(x, y, c, scale, shift);
            }
            return y;
        }

        x_hat_ = TensorT<T>(x.dims());
        inv_std_ = TensorT<T>({c_});
        for (int c = 0; c < c_; ++c) {
            double sum = 0.0, sum_sq = 0.0;
            for_channel(x, c, [&](T v) {
                sum += static_cast<double>(v);
                sum_sq += static_cast<double>(v) * v;
            });
            const double mean = sum / static_cast<double>(ns);
            const double var = std::max(0.0, sum_sq / static_cast<double>(ns) - mean * mean);
            const double inv_std = 1.0 / std::sqrt(var + eps_);
            inv_std_[c] = static_cast<T>(inv_std);

            const int64_t hw = static_cast<int64_t>(h) * w;
            for (int s = 0; s < n; ++s) {
                const T* src = x.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                T* xh = x_hat_.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                T* dst = y.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    const T v = static_cast<T>((static_cast<double>(src[i]) - mean) * inv_std);
                    xh[i] = v;
                    dst[i] = gamma_[c] * v + beta_[c];
                }
            }

            const double unbiased = ns > 1 ? var * static_cast<double>(ns) / static_cast<double>(ns - 1) : var;
            running_mean_[c] = static_cast<T>((1.0 - momentum_) * running_mean_[c] + momentum_ * mean);
            running_var_[c] = static_cast<T>((1.0 - momentum_) * running_var_[c] + momentum_ * unbiased);
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (x_hat_.empty()) throw Error(name_ + ": backward called without a training forward");
        const int n = dy.dim(0), h = dy.dim(2), w = dy.dim(3);
        const int64_t ns = static_cast<int64_t>(n) * h * w;
        const int64_t hw = static_cast<int64_t>(h) * w;
        TensorT<T> dx(dy.dims());

        for (int c = 0; c < c_; ++c) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int s = 0; s < n; ++s) {
                const T* dys = dy.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                const T* xh = x_hat_.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    sum_dy += static_cast<double>(dys[i]);
                    sum_dy_xhat += static_cast<double>(dys[i]) * xh[i];
                }
            }
            g_gamma_[c] += static_cast<T>(sum_dy_xhat);
            g_beta_[c] += static_cast<T>(sum_dy);

            const double k = static_cast<double>(gamma_[c]) * inv_std_[c] / static_cast<double>(ns);
            for (int s = 0; s < n; ++s) {
                const T* dys = dy.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                const T* xh = x_hat_.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                T* dxs = dx.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    dxs[i] = static_cast<T>(k * (static_cast<double>(ns) * dys[i] - sum_dy -
                                                 static_cast<double>(xh[i]) * sum_dy_xhat));
                }
            }
        }
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out) {
        out.push_back({name_ + ".gamma", &gamma_, &g_gamma_});
        out.push_back({name_ + ".beta", &beta_, &g_beta_});
        out.push_back({name_ + ".running_mean", &running_mean_, nullptr});
        out.push_back({name_ + ".running_var", &running_var_, nullptr});
    }

    int64_t param_count() const { return gamma_.numel() + beta_.numel(); }

private:
    template <typename F>
    void for_channel(const TensorT<T>& x, int c, F f) const {
        const int n = x.dim(0);
        const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
        for (int s = 0; s < n; ++s) {
            const T* src = x.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
            for (int64_t i = 0; i < hw; ++i) f(src[i]);
        }
    }

    void apply_channel(const TensorT<T>& x, TensorT<T>& y, int c, T scale, T shift) const {
        const int n = x.dim(0);
        const int64_t hw = static_cast<int64_t>(x.dim(2)) * x.dim(3);
        for (int s = 0; s < n; ++s) {
            const T* src = x.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
            T* dst = y.data() + (static_cast<int64_t>(s) * c_ + c) * hw;
            for (int64_t i = 0; i < hw; ++i) dst[i] = scale * src[i] + shift;
        }
    }

    std::string name_;
    int c_ = 0;
    double momentum_ = 0.1, eps_ = 1e-5;
    TensorT<T> gamma_, g_gamma_, beta_, g_beta_;
    TensorT<T> running_mean_, running_var_;
    TensorT<T> x_hat_, inv_std_;
};

// PReLU with a single learned slope, shared across channels.
template <typename T>
class PReLU {
public:
    PReLU() = default;
    explicit PReLU(std::string name, double initial_slope = 0.25)
        : name_(std::move(name)), a_({1}), ga_({1}) {
        a_[0] = static_cast<T>(initial_slope);
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        TensorT<T> y(x.dims());
        const T a = a_[0];
        for (int64_t i = 0; i < x.numel(); ++i)
            y[i] = x[i] > T(0) ? x[i] : a * x[i];
        if (train) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (x_.empty()) throw Error(name_ + ": backward called without a training forward");
        TensorT<T> dx(dy.dims());
        const T a = a_[0];
        double ga = 0.0;
        for (int64_t i = 0; i < dy.numel(); ++i) {
            if (x_[i] > T(0)) {
                dx[i] = dy[i];
            } else {
                dx[i] = a * dy[i];
                ga += static_cast<double>(dy[i]) * x_[i];
            }
        }
        ga_[0] += static_cast<T>(ga);
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out) { out.push_back({name_ + ".a", &a_, &ga_}); }
    int64_t param_count() const { return 1; }

private:
    std::string name_;
    TensorT<T> a_, ga_;
    TensorT<T> x_;
};

template <typename T>
class LeakyReLU {
public:
    LeakyReLU() = default;
    explicit LeakyReLU(double slope) : slope_(static_cast<T>(slope)) {}

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        TensorT<T> y(x.dims());
        for (int64_t i = 0; i < x.numel(); ++i)
            y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
        if (train) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (x_.empty()) throw Error("LeakyReLU: backward called without a training forward");
        TensorT<T> dx(dy.dims());
        for (int64_t i = 0; i < dy.numel(); ++i)
            dx[i] = x_[i] > T(0) ? dy[i] : slope_ * dy[i];
        return dx;
    }

private:
    T slope_ = T(0.2);
    TensorT<T> x_;
};

template <typename T>
class ReLU {
public:
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        TensorT<T> y(x.dims());
        for (int64_t i = 0; i < x.numel(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
        if (train) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (x_.empty()) throw Error("ReLU: backward called without a training forward");
        TensorT<T> dx(dy.dims());
        for (int64_t i = 0; i < dy.numel(); ++i) dx[i] = x_[i] > T(0) ? dy[i] : T(0);
        return dx;
    }

private:
    TensorT<T> x_;
};

// Bounded output head: y = (tanh(x) + 1) / 2 keeps images inside [0,1].
template <typename T>
class Tanh01 {
public:
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        TensorT<T> y(x.dims());
        TensorT<T> t(x.dims());
        for (int64_t i = 0; i < x.numel(); ++i) {
            t[i] = static_cast<T>(std::tanh(static_cast<double>(x[i])));
            y[i] = (t[i] + T(1)) / T(2);
        }
        if (train) t_ = std::move(t);
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (t_.empty()) throw Error("Tanh01: backward called without a training forward");
        TensorT<T> dx(dy.dims());
        for (int64_t i = 0; i < dy.numel(); ++i)
            dx[i] = dy[i] * (T(1) - t_[i] * t_[i]) / T(2);
        return dx;
    }

private:
    TensorT<T> t_;
};

template <typename T>
class Sigmoid {
public:
    TensorT<T> forward(const TensorT<T>& x, bool train) {
        TensorT<T> y(x.dims());
        for (int64_t i = 0; i < x.numel(); ++i)
            y[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
        if (train) p_ = y;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (p_.empty()) throw Error("Sigmoid: backward called without a training forward");
        TensorT<T> dx(dy.dims());
        for (int64_t i = 0; i < dy.numel(); ++i)
            dx[i] = dy[i] * p_[i] * (T(1) - p_[i]);
        return dx;
    }

private:
    TensorT<T> p_;
};

template <typename T>
class Dense {
public:
    Dense() = default;
    Dense(std::string name, int in_dim, int out_dim)
        : name_(std::move(name)), in_(in_dim), out_(out_dim),
          w_({out_dim, in_dim}), gw_({out_dim, in_dim}), b_({out_dim}), gb_({out_dim}) {}

    void init(Rng& rng) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_));
        for (int64_t i = 0; i < w_.numel(); ++i) w_[i] = static_cast<T>(rng.normal() * stddev);
        b_.fill(T(0));
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        if (x.ndim() != 2 || x.dim(1) != in_)
            throw ShapeError(name_ + ": expected (n," + std::to_string(in_) + "), got " + x.shape_str());
        const int n = x.dim(0);
        TensorT<T> y({n, out_});
        gemm_bt(x.data(), w_.data(), y.data(), n, in_, out_, false);
        for (int s = 0; s < n; ++s)
            for (int o = 0; o < out_; ++o)
                y[static_cast<int64_t>(s) * out_ + o] += b_[o];
        if (train) x_ = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (x_.empty()) throw Error(name_ + ": backward called without a training forward");
        const int n = dy.dim(0);
        gemm_at(dy.data(), x_.data(), gw_.data(), out_, n, in_, true);
        for (int s = 0; s < n; ++s)
            for (int o = 0; o < out_; ++o)
                gb_[o] += dy[static_cast<int64_t>(s) * out_ + o];
        TensorT<T> dx({n, in_});
        gemm(dy.data(), w_.data(), dx.data(), n, out_, in_, false);
        return dx;
    }

    void collect(std::vector<ParamRef<T>>& out) {
        out.push_back({name_ + ".w", &w_, &gw_});
        out.push_back({name_ + ".b", &b_, &gb_});
    }

    int64_t param_count() const { return w_.numel() + b_.numel(); }

private:
    std::string name_;
    int in_ = 0, out_ = 0;
    TensorT<T> w_, gw_, b_, gb_;
    TensorT<T> x_;
};

template <typename T>
class MaxPool2d {
public:
    explicit MaxPool2d(int k = 2) : k_(k) {}

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const int oh = h / k_, ow = w / k_;
        if (oh < 1 || ow < 1) throw ShapeError("MaxPool2d: input too small");
        TensorT<T> y({n, c, oh, ow});
        if (train) {
            argmax_.assign(static_cast<size_t>(y.numel()), 0);
            in_dims_ = x.dims();
        }
        int64_t oi = 0;
        for (int s = 0; s < n; ++s) {
            for (int ch = 0; ch < c; ++ch) {
                const T* xc = x.data() + (static_cast<int64_t>(s) * c + ch) * h * w;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox, ++oi) {
                        T best = xc[static_cast<int64_t>(oy) * k_ * w + ox * k_];
                        int64_t best_idx = static_cast<int64_t>(oy) * k_ * w + ox * k_;
                        for (int dy = 0; dy < k_; ++dy) {
                            for (int dx = 0; dx < k_; ++dx) {
                                const int64_t idx = (static_cast<int64_t>(oy) * k_ + dy) * w + ox * k_ + dx;
                                if (xc[idx] > best) {
                                    best = xc[idx];
                                    best_idx = idx;
                                }
                            }
                        }
                        y[oi] = best;
                        if (train)
                            argmax_[static_cast<size_t>(oi)] = (static_cast<int64_t>(s) * c + ch) * h * w + best_idx;
                    }
                }
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        if (in_dims_.empty()) throw Error("MaxPool2d: backward called without a training forward");
        TensorT<T> dx(in_dims_);
        for (int64_t i = 0; i < dy.numel(); ++i)
            dx[argmax_[static_cast<size_t>(i)]] += dy[i];
        return dx;
    }

private:
    int k_ = 2;
    std::vector<int64_t> argmax_;
    std::vector<int> in_dims_;
};

// Sub-pixel rearrangement with independent height/width rates:
// out[n, c, y*rh + i, x*rw + j] = in[n, c*rh*rw + i*rw + j, y, x].
// Pure index permutation; no arithmetic on values.
template <typename T>
TensorT<T> pixel_shuffle_aniso(const TensorT<T>& x, int rh, int rw) {
    if (rh < 1 || rw < 1) throw ShapeError("pixel_shuffle_aniso: rates must be >= 1");
    if (x.ndim() != 4) throw ShapeError("pixel_shuffle_aniso: expected 4D input");
    const int n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
    const int r = rh * rw;
    if (c_in % r != 0)
        throw ShapeError("pixel_shuffle_aniso: channels " + std::to_string(c_in) +
                         " not divisible by rh*rw = " + std::to_string(r));
    const int c_out = c_in / r;
    TensorT<T> y({n, c_out, h * rh, w * rw});
    for (int s = 0; s < n; ++s)
        for (int c = 0; c < c_out; ++c)
            for (int i = 0; i < rh; ++i)
                for (int j = 0; j < rw; ++j)
                    for (int yy = 0; yy < h; ++yy)
                        for (int xx = 0; xx < w; ++xx)
                            y.at(s, c, yy * rh + i, xx * rw + j) = x.at(s, c * r + i * rw + j, yy, xx);
    return y;
}

// Exact inverse of pixel_shuffle_aniso.
template <typename T>
TensorT<T> pixel_unshuffle_aniso(const TensorT<T>& y, int rh, int rw) {
    if (rh < 1 || rw < 1) throw ShapeError("pixel_unshuffle_aniso: rates must be >= 1");
    if (y.ndim() != 4) throw ShapeError("pixel_unshuffle_aniso: expected 4D input");
    const int n = y.dim(0), c_out = y.dim(1), oh = y.dim(2), ow = y.dim(3);
    if (oh % rh != 0 || ow % rw != 0)
        throw ShapeError("pixel_unshuffle_aniso: spatial dims not divisible by rates");
    const int h = oh / rh, w = ow / rw, r = rh * rw;
    TensorT<T> x({n, c_out * r, h, w});
    for (int s = 0; s < n; ++s)
        for (int c = 0; c < c_out; ++c)
            for (int i = 0; i < rh; ++i)
                for (int j = 0; j < rw; ++j)
                    for (int yy = 0; yy < h; ++yy)
                        for (int xx = 0; xx < w; ++xx)
                            x.at(s, c * r + i * rw + j, yy, xx) = y.at(s, c, yy * rh + i, xx * rw + j);
    return x;
}

template <typename T>
class PixelShuffle {
public:
    PixelShuffle() = default;
    PixelShuffle(int rh, int rw) : rh_(rh), rw_(rw) {}

    TensorT<T> forward(const TensorT<T>& x, bool) { return pixel_shuffle_aniso(x, rh_, rw_); }
    TensorT<T> backward(const TensorT<T>& dy) { return pixel_unshuffle_aniso(dy, rh_, rw_); }

private:
    int rh_ = 1, rw_ = 1;
};

} // namespace mrsr
