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

// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include "fddmimo/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace fddmimo::kernels::avx2
{
    namespace
    {
        inline const double *dp(const cx *p) { return reinterpret_cast<const double *>(p); }
        inline double *dp(cx *p) { return reinterpret_cast<double *>(p); }

        inline double hsum(__m256d v)
        {
            __m128d lo = _mm256_castpd256_pd128(v);
            __m128d hi = _mm256_extractf128_pd(v, 1);
            lo = _mm_add_pd(lo, hi);
            return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
        }

        // alpha * x for two packed complex values: fmaddsub(x, ar, swap(x) * ai)
        inline __m256d cmul_scalar(__m256d x, __m256d ar, __m256d ai)
        {
            const __m256d xs = _mm256_permute_pd(x, 0b0101);
            return _mm256_fmaddsub_pd(x, ar, _mm256_mul_pd(xs, ai));
        }
    }

    void axpy(cx alpha, std::span<const cx> x, std::span<cx> y)
    {
        const std::size_t n = x.size();
        const __m256d ar = _mm256_set1_pd(alpha.real());
        const __m256d ai = _mm256_set1_pd(alpha.imag());
        const double *xp = dp(x.data());
        double *yp = dp(y.data());

        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
        {
            __m256d x0 = _mm256_loadu_pd(xp + 2 * i);
            __m256d x1 = _mm256_loadu_pd(xp + 2 * i + 4);
            __m256d y0 = _mm256_loadu_pd(yp + 2 * i);
            __m256d y1 = _mm256_loadu_pd(yp + 2 * i + 4);
            _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(y0, cmul_scalar(x0, ar, ai)));
            _mm256_storeu_pd(yp + 2 * i + 4, _mm256_add_pd(y1, cmul_scalar(x1, ar, ai)));
        }
        for (; i + 2 <= n; i += 2)
        {
            __m256d x0 = _mm256_loadu_pd(xp + 2 * i);
            __m256d y0 = _mm256_loadu_pd(yp + 2 * i);
            _mm256_storeu_pd(yp + 2 * i, _mm256_add_pd(y0, cmul_scalar(x0, ar, ai)));
        }
        if (i < n)
        {
            const double xr = x[i].real(), xi = x[i].imag();
            const double re = std::fma(alpha.real(), xr, -(alpha.imag() * xi));
            const double im = std::fma(alpha.real(), xi, alpha.imag() * xr);
            y[i] = {y[i].real() + re, y[i].imag() + im};
        }
    }

    cx dotc(std::span<const cx> x, std::span<const cx> y)
    {
        const std::size_t n = x.size();
        const double *xp = dp(x.data());
        const double *yp = dp(y.data());
        // acc_re lanes: xr*yr, xi*yi  -> real part is the full sum
        // acc_im lanes: xr*yi, xi*yr  -> imag part is even lanes minus odd lanes
        __m256d acc_re = _mm256_setzero_pd();
        __m256d acc_im = _mm256_setzero_pd();

        std::size_t i = 0;
        for (; i + 2 <= n; i += 2)
        {
            __m256d xv = _mm256_loadu_pd(xp + 2 * i);
            __m256d yv = _mm256_loadu_pd(yp + 2 * i);
            acc_re = _mm256_fmadd_pd(xv, yv, acc_re);
            acc_im = _mm256_fmadd_pd(xv, _mm256_permute_pd(yv, 0b0101), acc_im);
        }
        const __m256d sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
        double re = hsum(acc_re);
        double im = hsum(_mm256_mul_pd(acc_im, sign));
        if (i < n)
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
        const std::size_t n = x.size();
        const double *xp = dp(x.data());
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
        {
            __m256d a = _mm256_loadu_pd(xp + 2 * i);
            __m256d b = _mm256_loadu_pd(xp + 2 * i + 4);
            acc0 = _mm256_fmadd_pd(a, a, acc0);
            acc1 = _mm256_fmadd_pd(b, b, acc1);
        }
        for (; i + 2 <= n; i += 2)
        {
            __m256d a = _mm256_loadu_pd(xp + 2 * i);
            acc0 = _mm256_fmadd_pd(a, a, acc0);
        }
        double s = hsum(_mm256_add_pd(acc0, acc1));
        if (i < n)
            s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
        return s;
    }

    double abs_sum(std::span<const cx> x)
    {
        const std::size_t n = x.size();
        const double *xp = dp(x.data());
        __m256d acc = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
        {
            __m256d a = _mm256_loadu_pd(xp + 2 * i);
            __m256d b = _mm256_loadu_pd(xp + 2 * i + 4);
            // hadd -> |x0|^2 |x2|^2 |x1|^2 |x3|^2 (lane order is irrelevant for a sum)
            __m256d m2 = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
            acc = _mm256_add_pd(acc, _mm256_sqrt_pd(m2));
        }
        double s = hsum(acc);
        for (; i < n; ++i)
            s += std::sqrt(x[i].real() * x[i].real() + x[i].imag() * x[i].imag());
        return s;
    }

    void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out)
    {
        const std::size_t n = x.size();
        const double *xp = dp(x.data());
        double *op = dp(out.data());
        const __m256d one = _mm256_set1_pd(1.0);
        const __m256d vtau = _mm256_set1_pd(tau);
        const __m256d zero = _mm256_setzero_pd();

        std::size_t i = 0;
        for (; i + 2 <= n; i += 2)
        {
            __m256d v = _mm256_loadu_pd(xp + 2 * i);
            __m256d sq = _mm256_mul_pd(v, v);
            __m256d m2 = _mm256_add_pd(sq, _mm256_permute_pd(sq, 0b0101));
            __m256d scale = _mm256_sub_pd(one, _mm256_div_pd(vtau, _mm256_sqrt_pd(m2)));
            __m256d keep = _mm256_cmp_pd(scale, zero, _CMP_GT_OQ);
            _mm256_storeu_pd(op + 2 * i, _mm256_and_pd(keep, _mm256_mul_pd(v, scale)));
        }
        if (i < n)
        {
            const double xr = x[i].real(), xi = x[i].imag();
            const double scale = 1.0 - tau / std::sqrt(xr * xr + xi * xi);
            out[i] = scale > 0.0 ? cx{xr * scale, xi * scale} : cx{0.0, 0.0};
        }
    }

    void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R)
    {
        const std::size_t n = a.size();
        for (std::size_t col = 0; col < n; ++col)
            axpy(weight * std::conj(a[col]), a, R.subspan(col * n, n));
    }
}
