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

#ifndef FDDMIMO_KERNELS_HPP
#define FDDMIMO_KERNELS_HPP

// Data-parallel inner loops over interleaved complex<double> buffers.
//
// Each kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2/FMA variant. The variant is chosen once at startup from CPUID and can
// be pinned with FDDMIMO_SIMD=scalar|avx2 or set_backend(). Reductions in the
// vector variants associate differently from the scalar loops, so results agree
// to rounding, not bit-for-bit; within one backend every kernel is deterministic.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace fddmimo::kernels
{
    using cx = std::complex<double>;

    enum class Backend
    {
        Scalar,
        Avx2
    };

    // y += alpha * x
    void axpy(cx alpha, std::span<const cx> x, std::span<cx> y);

    // sum_i conj(x_i) * y_i
    cx dotc(std::span<const cx> x, std::span<const cx> y);

    // sum_i |x_i|^2
    double norm_sq(std::span<const cx> x);

    // sum_i |x_i|
    double abs_sum(std::span<const cx> x);

    // out_i = x_i * max(0, 1 - tau / |x_i|); in-place allowed.
    void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out);

    // R += weight * a a^H with R stored column-major, n x n, n = a.size().
    void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R);

    Backend active_backend();
    bool backend_available(Backend b);

    // Throws DomainError if the requested backend is not available on this CPU.
    void set_backend(Backend b);

    std::string_view backend_name(Backend b);

    // Direct entry points, used by the equivalence tests.
    namespace scalar
    {
        void axpy(cx alpha, std::span<const cx> x, std::span<cx> y);
        cx dotc(std::span<const cx> x, std::span<const cx> y);
        double norm_sq(std::span<const cx> x);
        double abs_sum(std::span<const cx> x);
        void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out);
        void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R);
    }

    namespace avx2
    {
        void axpy(cx alpha, std::span<const cx> x, std::span<cx> y);
        cx dotc(std::span<const cx> x, std::span<const cx> y);
        double norm_sq(std::span<const cx> x);
        double abs_sum(std::span<const cx> x);
        void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out);
        void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R);
    }
}

#endif
