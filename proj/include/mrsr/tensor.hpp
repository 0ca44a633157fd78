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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrsr/errors.hpp"

namespace mrsr {

// Dense row-major tensor. Image batches use NCHW order. The scalar type is a
// template parameter so the gradient checks can run the whole network in
// double while the training path stays in float.
template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> dims) : dims_(std::move(dims)) {
        data_.assign(static_cast<size_t>(numel_of(dims_)), T(0));
    }

    static TensorT zeros(std::vector<int> dims) { return TensorT(std::move(dims)); }

    static TensorT full(std::vector<int> dims, T value) {
        TensorT t(std::move(dims));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    int ndim() const { return static_cast<int>(dims_.size()); }
    int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
    const std::vector<int>& dims() const { return dims_; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // 4D accessors (n, c, h, w).
    T& at(int n, int c, int y, int x) {
        return data_[static_cast<size_t>(((static_cast<int64_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x)];
    }
    const T& at(int n, int c, int y, int x) const {
        return data_[static_cast<size_t>(((static_cast<int64_t>(n) * dims_[1] + c) * dims_[2] + y) * dims_[3] + x)];
    }

    bool same_shape(const TensorT& o) const { return dims_ == o.dims_; }

    // Reinterprets the buffer with a new shape of identical element count.
    TensorT reshaped(std::vector<int> dims) const {
        if (numel_of(dims) != numel())
            throw ShapeError("reshape: element count mismatch");
        TensorT t;
        t.dims_ = std::move(dims);
        t.data_ = data_;
        return t;
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    void add_(const TensorT& o) {
        if (!same_shape(o)) throw ShapeError("add_: shape mismatch");
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }

    void scale_(T s) {
        for (auto& v : data_) v *= s;
    }

    bool all_finite() const {
        for (const auto& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (size_t i = 0; i < dims_.size(); ++i)
            os << dims_[i] << (i + 1 < dims_.size() ? "," : "");
        os << ')';
        return os.str();
    }

    static int64_t numel_of(const std::vector<int>& dims) {
        int64_t n = 1;
        for (int d : dims) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= d;
        }
        return n;
    }

private:
    std::vector<int> dims_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;

// C (m x n) = A (m x k) * B (k x n) on raw row-major buffers, optionally
// accumulating into C.
template <typename T>
inline void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a, m, k);
    Eigen::Map<const Mat> mb(b, k, n);
    Eigen::Map<Mat> mc(c, m, n);
    if (accumulate)
        mc.noalias() += ma * mb;
    else
        mc.noalias() = ma * mb;
}

// C (m x n) = A^T (m x k, stored k x m) * B (k x n).
template <typename T>
inline void gemm_at(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a, k, m);
    Eigen::Map<const Mat> mb(b, k, n);
    Eigen::Map<Mat> mc(c, m, n);
    if (accumulate)
        mc.noalias() += ma.transpose() * mb;
    else
        mc.noalias() = ma.transpose() * mb;
}

// C (m x n) = A (m x k) * B^T (n x k).
template <typename T>
inline void gemm_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Mat> ma(a, m, k);
    Eigen::Map<const Mat> mb(b, n, k);
    Eigen::Map<Mat> mc(c, m, n);
    if (accumulate)
        mc.noalias() += ma * mb.transpose();
    else
        mc.noalias() = ma * mb.transpose();
}

} // namespace mrsr
