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
#include "fddmimo/common.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace fddmimo::kernels
{
    namespace
    {
        struct Table
        {
            void (*axpy)(cx, std::span<const cx>, std::span<cx>);
            cx (*dotc)(std::span<const cx>, std::span<const cx>);
            double (*norm_sq)(std::span<const cx>);
            double (*abs_sum)(std::span<const cx>);
            void (*soft_threshold)(std::span<const cx>, double, std::span<cx>);
            void (*hermitian_rank1_update)(double, std::span<const cx>, std::span<cx>);
        };

        constexpr Table scalar_table{scalar::axpy, scalar::dotc, scalar::norm_sq,
                                     scalar::abs_sum, scalar::soft_threshold,
                                     scalar::hermitian_rank1_update};
#if defined(FDDMIMO_HAVE_AVX2)
        constexpr Table avx2_table{avx2::axpy, avx2::dotc, avx2::norm_sq,
                                   avx2::abs_sum, avx2::soft_threshold,
                                   avx2::hermitian_rank1_update};
#endif

        bool cpu_has_avx2()
        {
#if defined(FDDMIMO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            __builtin_cpu_init();
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        }

        const Table *table_for(Backend b)
        {
#if defined(FDDMIMO_HAVE_AVX2)
            if (b == Backend::Avx2)
                return &avx2_table;
#endif
            (void)b;
            return &scalar_table;
        }

        Backend initial_backend()
        {
            const char *env = std::getenv("FDDMIMO_SIMD");
            if (env != nullptr && std::string(env) == "scalar")
                return Backend::Scalar;
            return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
        }

        struct State
        {
            std::atomic<Backend> backend{initial_backend()};
            std::atomic<const Table *> table{table_for(backend.load())};
        };

        State &state()
        {
            static State s;
            return s;
        }

        const Table &t() { return *state().table.load(std::memory_order_relaxed); }
    }

    void axpy(cx alpha, std::span<const cx> x, std::span<cx> y)
    {
        if (x.size() != y.size())
            throw DomainError("kernels::axpy: length mismatch");
        t().axpy(alpha, x, y);
    }

    cx dotc(std::span<const cx> x, std::span<const cx> y)
    {
        if (x.size() != y.size())
            throw DomainError("kernels::dotc: length mismatch");
        return t().dotc(x, y);
    }

    double norm_sq(std::span<const cx> x) { return t().norm_sq(x); }

    double abs_sum(std::span<const cx> x) { return t().abs_sum(x); }

    void soft_threshold(std::span<const cx> x, double tau, std::span<cx> out)
    {
        if (x.size() != out.size())
            throw DomainError("kernels::soft_threshold: length mismatch");
        t().soft_threshold(x, tau, out);
    }

    void hermitian_rank1_update(double weight, std::span<const cx> a, std::span<cx> R)
    {
        if (R.size() != a.size() * a.size())
            throw DomainError("kernels::hermitian_rank1_update: R must be n x n");
        t().hermitian_rank1_update(weight, a, R);
    }

    Backend active_backend() { return state().backend.load(); }

    bool backend_available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

    void set_backend(Backend b)
    {
        if (!backend_available(b))
            throw DomainError("kernels::set_backend: " + std::string(backend_name(b)) + " not supported on this CPU");
        state().backend.store(b);
        state().table.store(table_for(b));
    }

    std::string_view backend_name(Backend b)
    {
        return b == Backend::Avx2 ? "avx2" : "scalar";
    }
}
