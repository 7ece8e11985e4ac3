// SPDX-License-Identifier: Apache-2.0
//
// fddmimo - covariance-assisted downlink training and channel estimation
// Copyright (C) 2026 The fddmimo authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "fddmimo/kernels.hpp"

#include <cmath>

namespace fddmimo::kernels::scalar
{
    void axpy(cx alpha, std::span<const cx> x, std::span<cx> y)
    {
        const double ar = alpha.real(), ai = alpha.imag();
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double xr = x[i].real(), xi = x[i].imag();
            y[i] = {y[i].real() + (ar * xr - ai * xi), y[i].imag() + (ar * xi + ai * xr)};
        }
    }

    cx dotc(std::span<const cx> x, std::span<const cx> y)
    {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double xr = x[i].real(), xi = x[i].imag();
            const double yr = y[i].real(), yi = y[i].imag();
            re += xr * yr + xi * yi;
            im += xr * yi - xi * yr;
        }
        return {re, im};
    }

    double norm_sq(std::span<const cx> x)
    {
        double s = 0.0;
        for (const cx &v : x)
            s += v.real() * v.real() + v.imag() * v.imag();
        return s;
    }

    double abs_sum(std::span<const cx> x)
    {
        double s = 0.0;
        for (const cx &v : x)
            s += std::sqrt(v.real() * v.real() + v.imag() * v.imag());
        return s;
    }

    void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out)
    {
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double xr = x[i].real(), xi = x[i].imag();
            const double mag = std::sqrt(xr * xr + xi * xi);
            const double scale = 1.0 - tau / mag;
            if (scale > 0.0)
                out[i] = {xr * scale, xi * scale};
            else
                out[i] = {0.0, 0.0};
        }
    }

    void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R)
    {
        const std::size_t n = a.size();
        for (std::size_t col = 0; col < n; ++col)
            axpy(weight * std::conj(a[col]), a, R.subspan(col * n, n));
    }
}
