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

#ifndef FDDMIMO_COMMON_HPP
#define FDDMIMO_COMMON_HPP

#include <armadillo>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace fddmimo
{
    using cx = std::complex<double>;

    // Every random draw in the library goes through an explicitly passed engine.
    using Rng = std::mt19937_64;

    inline constexpr double pi = std::numbers::pi;

    // Precondition or shape violation on caller-supplied data.
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // A numeric routine failed (EVD non-convergence, non-finite iterate, ...).
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Overlapping angular sectors handed to the multi-user pilot builder.
    class SectorConflictError : public DomainError
    {
    public:
        using DomainError::DomainError;
    };

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    inline cx complex_gaussian(Rng &rng, double variance)
    {
        std::normal_distribution<double> n(0.0, std::sqrt(0.5 * variance));
        double re = n(rng);
        double im = n(rng);
        return {re, im};
    }

    inline arma::cx_vec complex_gaussian_vec(Rng &rng, arma::uword n, double variance)
    {
        arma::cx_vec v(n);
        for (arma::uword i = 0; i < n; ++i)
            v(i) = complex_gaussian(rng, variance);
        return v;
    }

    inline arma::cx_mat complex_gaussian_mat(Rng &rng, arma::uword rows, arma::uword cols, double variance)
    {
        // Row-major draw order so that a T x M pilot and its first T' < T rows agree.
        arma::cx_mat m(rows, cols);
        for (arma::uword r = 0; r < rows; ++r)
            for (arma::uword c = 0; c < cols; ++c)
                m(r, c) = complex_gaussian(rng, variance);
        return m;
    }

    // splitmix64 finalizer; stable across platforms and releases.
    inline std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    inline double deg2rad(double deg) { return deg * pi / 180.0; }
    inline double rad2deg(double rad) { return rad * 180.0 / pi; }
}

#endif
