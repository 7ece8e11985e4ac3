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

#ifndef FDDMIMO_COVARIANCE_HPP
#define FDDMIMO_COVARIANCE_HPP

#include "fddmimo/channel_model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fddmimo
{
    /// Eigen-decomposition of a Hermitian PSD matrix, eigenvalues descending and
    /// clamped at zero, eigenvectors column-aligned.
    struct SpectralDecomposition
    {
        arma::vec eigenvalues;
        arma::cx_mat eigenvectors;
    };

    /// Hermitian EVD with descending order and negative eigenvalues clamped to 0.
    /// Throws NumericalError if LAPACK does not converge.
    SpectralDecomposition hermitian_eig(const arma::cx_mat &A);

    /// M x M channel covariance. Immutable; the spectral decomposition is
    /// computed once at construction and shared between copies.
    class CovarianceMatrix
    {
    public:
        enum class Kind
        {
            Numeric,
            Parametric,
            Other
        };

        /// Checks Hermitian symmetry (1e-12 relative) and PSD (1e-10 relative);
        /// stores the exactly-Hermitian part.
        explicit CovarianceMatrix(const arma::cx_mat &R, Kind kind = Kind::Other);

        const arma::cx_mat &matrix() const { return R_; }
        arma::uword size() const { return R_.n_rows; }
        Kind kind() const { return kind_; }
        double trace() const;

        const SpectralDecomposition &spectral() const;

        /// R^{1/2} through the clamped spectral decomposition.
        arma::cx_mat sqrt_matrix() const;

    private:
        struct Cache;
        arma::cx_mat R_;
        Kind kind_;
        std::shared_ptr<Cache> cache_;
    };

    std::string to_string(CovarianceMatrix::Kind k);

    /// xi^2 / N * sum_i a(theta_i) a(theta_i)^H over N draws of the AoA law.
    CovarianceMatrix covariance_numeric(const OneRingModel &model, arma::uword num_samples, Rng &rng);

    /// Small-spread sinc approximation of the uniform-AoA covariance:
    ///   R_mn = xi^2 exp(-j A_mn cos(mean)) sinc(A_mn sin(mean) spread),  A_mn = 2 pi (m - n) d/chi.
    /// The phase sign follows the steering convention so that R approximates E[a a^H].
    CovarianceMatrix covariance_parametric(const ArrayGeometry &geometry, double mean_angle, double spread,
                                           double path_power = 1.0);

    /// sin(x)/x with a Taylor fallback near zero.
    double sinc(double x);

    inline const SpectralDecomposition &spectral(const CovarianceMatrix &R) { return R.spectral(); }

    /// Smallest r whose top-r eigenvalues carry at least energy_fraction of the trace.
    arma::uword effective_rank(const CovarianceMatrix &R, double energy_fraction);

    enum class DftOrdering
    {
        Centered, // omega_m = -1 + 2(m-1)/M
        Natural   // omega_s = 2(s-1)/M, wrapped into (-1, 1]
    };

    /// Unitary DFT dictionary F = M^{-1/2} [alpha(omega_1) ... alpha(omega_M)]
    /// with alpha(x) = [1, e^{-j pi x}, ..., e^{-j pi (M-1) x}]^T.
    ///
    /// Both orderings hold the same columns; Natural is the plain FFT order and is
    /// what the peak-index angle formula in ec_mmse assumes.
    class DftBasis
    {
    public:
        DftBasis(arma::uword M, DftOrdering ordering);

        const arma::cx_mat &columns() const { return F_; }
        const arma::vec &coordinates() const { return omega_; }
        DftOrdering ordering() const { return ordering_; }
        arma::uword size() const { return F_.n_cols; }

    private:
        arma::cx_mat F_;
        arma::vec omega_;
        DftOrdering ordering_;
    };

    struct SectorSelection
    {
        arma::uvec indices;   // 0-based column indices into the basis
        arma::cx_mat columns; // M x k
        bool empty = true;
    };

    /// DFT columns whose coordinates lie in [2(d/chi)cos(theta_max), 2(d/chi)cos(theta_min)].
    SectorSelection dft_sector_basis(const DftBasis &basis, double theta_min, double theta_max,
                                     const ArrayGeometry &geometry);

    /// The k DFT columns carrying the most energy f^H R f, ordered by decreasing energy.
    SectorSelection matched_dft_sector(const CovarianceMatrix &R, const DftBasis &basis, arma::uword k);

    /// f_i^H R f_i for the selected columns (same order as `sector.indices`).
    arma::vec sector_energy_profile(const CovarianceMatrix &R, const SectorSelection &sector);

    /// Chordal distance sqrt(k - ||Ua^H Ub||_F^2) between two k-dimensional spans,
    /// evaluated as ||(I - Ua Ua^H) Ub||_F. Inputs must have orthonormal columns.
    double subspace_distance(const arma::cx_mat &Ua, const arma::cx_mat &Ub);

    /// The eigenvectors of the top-k eigenvalues.
    arma::cx_mat dominant_eigenvectors(const CovarianceMatrix &R, arma::uword k);
}

#endif
