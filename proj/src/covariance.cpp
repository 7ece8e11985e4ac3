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

#include "fddmimo/covariance.hpp"
#include "fddmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

namespace fddmimo
{
    SpectralDecomposition hermitian_eig(const arma::cx_mat &A)
    {
        if (!A.is_square())
            throw DomainError("hermitian_eig: matrix is not square");

        arma::vec values;
        arma::cx_mat vectors;
        const arma::cx_mat H = 0.5 * (A + A.t());
        if (!arma::eig_sym(values, vectors, H, "dc") && !arma::eig_sym(values, vectors, H, "std"))
            throw NumericalError("hermitian_eig: EVD failed to converge (n = " + std::to_string(A.n_rows) +
                                 ", fro = " + std::to_string(arma::norm(A, "fro")) + ")");

        SpectralDecomposition sd;
        sd.eigenvalues = arma::flipud(values);
        sd.eigenvectors = arma::fliplr(vectors);
        sd.eigenvalues.transform([](double v) { return v < 0.0 ? 0.0 : v; });
        return sd;
    }

    struct CovarianceMatrix::Cache
    {
        SpectralDecomposition spectral;
    };

    CovarianceMatrix::CovarianceMatrix(const arma::cx_mat &R, Kind kind) : kind_(kind)
    {
        if (!R.is_square() || R.n_rows == 0)
            throw DomainError("CovarianceMatrix: expected a non-empty square matrix");
        if (!R.is_finite())
            throw DomainError("CovarianceMatrix: non-finite entries");

        const double scale = arma::norm(R, "fro");
        const double asym = arma::norm(R - R.t(), "fro");
        if (asym > 1e-12 * scale)
            throw DomainError("CovarianceMatrix: not Hermitian (relative asymmetry " +
                              std::to_string(asym / scale) + ")");
        R_ = 0.5 * (R + R.t());

        arma::vec raw;
        arma::cx_mat vectors;
        if (!arma::eig_sym(raw, vectors, R_, "dc") && !arma::eig_sym(raw, vectors, R_, "std"))
            throw NumericalError("CovarianceMatrix: EVD failed to converge");
        const double top = raw.is_empty() ? 0.0 : raw.max();
        if (raw.min() < -1e-10 * std::max(top, 0.0))
            throw DomainError("CovarianceMatrix: not positive semidefinite (min eigenvalue " +
                              std::to_string(raw.min()) + ")");

        auto cache = std::make_shared<Cache>();
        cache->spectral.eigenvalues = arma::flipud(raw);
        cache->spectral.eigenvectors = arma::fliplr(vectors);
        cache->spectral.eigenvalues.transform([](double v) { return v < 0.0 ? 0.0 : v; });
        cache_ = std::move(cache);
    }

    double CovarianceMatrix::trace() const { return std::real(arma::trace(R_)); }

    const SpectralDecomposition &CovarianceMatrix::spectral() const { return cache_->spectral; }

    arma::cx_mat CovarianceMatrix::sqrt_matrix() const
    {
        const auto &sd = spectral();
        const arma::cx_mat scaled = sd.eigenvectors * arma::diagmat(arma::conv_to<arma::cx_vec>::from(arma::sqrt(sd.eigenvalues)));
        return scaled * sd.eigenvectors.t();
    }

    std::string to_string(CovarianceMatrix::Kind k)
    {
        switch (k)
        {
        case CovarianceMatrix::Kind::Numeric:
            return "numeric";
        case CovarianceMatrix::Kind::Parametric:
            return "parametric";
        default:
            return "other";
        }
    }

    CovarianceMatrix covariance_numeric(const OneRingModel &model, arma::uword num_samples, Rng &rng)
    {
        model.validate();
        if (num_samples < 1)
            throw DomainError("covariance_numeric: num_samples must be >= 1");

        const arma::uword M = model.geometry.num_antennas();
        const double weight = model.path_power / static_cast<double>(num_samples);
        arma::cx_mat R(M, M, arma::fill::zeros);
        std::span<cx> Rs(R.memptr(), R.n_elem);
        for (arma::uword i = 0; i < num_samples; ++i)
        {
            const arma::cx_vec a = steering_vector(model.geometry, model.aoa.sample(rng));
            kernels::hermitian_rank1_update(weight, std::span<const cx>(a.memptr(), M), Rs);
        }
        R = 0.5 * (R + R.t());
        // |a_m|^2 = 1, so every diagonal entry is xi^2 exactly; pin it rather than
        // keep the rounding accumulated over num_samples updates.
        R.diag().fill(cx(model.path_power, 0.0));
        return CovarianceMatrix(R, CovarianceMatrix::Kind::Numeric);
    }

    double sinc(double x)
    {
        if (std::abs(x) < 1e-4)
        {
            const double x2 = x * x;
            return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
        }
        return std::sin(x) / x;
    }

    CovarianceMatrix covariance_parametric(const ArrayGeometry &geometry, double mean_angle, double spread,
                                           double path_power)
    {
        if (!(mean_angle > 0.0 && mean_angle < pi))
            throw DomainError("covariance_parametric: mean_angle must lie in (0, pi)");
        if (!(spread >= 0.0))
            throw DomainError("covariance_parametric: spread must be >= 0");
        if (!(path_power > 0.0))
            throw DomainError("covariance_parametric: path_power must be > 0");

        const arma::uword M = geometry.num_antennas();
        const double c = std::cos(mean_angle);
        const double s = std::sin(mean_angle);

        // Toeplitz: R_mn depends only on the lag m - n; negative lags are conjugates.
        arma::cx_vec lag(M);
        for (arma::uword k = 0; k < M; ++k)
        {
            const double A = 2.0 * pi * static_cast<double>(k) * geometry.spacing_ratio();
            lag(k) = path_power * std::polar(1.0, -A * c) * sinc(A * s * spread);
        }

        arma::cx_mat R(M, M);
        for (arma::uword n = 0; n < M; ++n)
            for (arma::uword m = 0; m < M; ++m)
                R(m, n) = m >= n ? lag(m - n) : std::conj(lag(n - m));
        return CovarianceMatrix(R, CovarianceMatrix::Kind::Parametric);
    }

    arma::uword effective_rank(const CovarianceMatrix &R, double energy_fraction)
    {
        if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
            throw DomainError("effective_rank: energy_fraction must lie in (0, 1]");
        const arma::vec &lambda = R.spectral().eigenvalues;
        const double total = arma::accu(lambda);
        if (!(total > 0.0))
            throw DomainError("effective_rank: zero matrix");

        const double target = energy_fraction * total * (1.0 - 1e-12);
        double running = 0.0;
        for (arma::uword r = 0; r < lambda.n_elem; ++r)
        {
            running += lambda(r);
            if (running >= target)
                return r + 1;
        }
        return lambda.n_elem;
    }

    DftBasis::DftBasis(arma::uword M, DftOrdering ordering) : F_(M, M), omega_(M), ordering_(ordering)
    {
        if (M < 1)
            throw DomainError("DftBasis: M must be >= 1");
        const double Md = static_cast<double>(M);
        for (arma::uword m = 0; m < M; ++m)
        {
            if (ordering == DftOrdering::Centered)
                omega_(m) = -1.0 + 2.0 * static_cast<double>(m) / Md;
            else
                omega_(m) = m <= M / 2 ? 2.0 * static_cast<double>(m) / Md : 2.0 * static_cast<double>(m) / Md - 2.0;
        }
        const double norm = 1.0 / std::sqrt(Md);
        for (arma::uword col = 0; col < M; ++col)
            for (arma::uword i = 0; i < M; ++i)
                F_(i, col) = std::polar(norm, -pi * static_cast<double>(i) * omega_(col));
    }

    SectorSelection dft_sector_basis(const DftBasis &basis, double theta_min, double theta_max,
                                     const ArrayGeometry &geometry)
    {
        if (!(theta_min >= 0.0 && theta_min < theta_max && theta_max <= pi))
            throw DomainError("dft_sector_basis: need 0 <= theta_min < theta_max <= pi");
        if (basis.size() != geometry.num_antennas())
            throw DomainError("dft_sector_basis: basis size does not match the array");

        const double lo = angular_coordinate(geometry, theta_max);
        const double hi = angular_coordinate(geometry, theta_min);
        const double tol = 1e-12;
        std::vector<arma::uword> picked;
        for (arma::uword m = 0; m < basis.size(); ++m)
        {
            const double w = basis.coordinates()(m);
            if (w >= lo - tol && w <= hi + tol)
                picked.push_back(m);
        }

        SectorSelection sel;
        sel.indices = arma::uvec(picked);
        sel.empty = picked.empty();
        sel.columns = sel.empty ? arma::cx_mat(basis.size(), 0) : arma::cx_mat(basis.columns().cols(sel.indices));
        return sel;
    }

    SectorSelection matched_dft_sector(const CovarianceMatrix &R, const DftBasis &basis, arma::uword k)
    {
        if (basis.size() != R.size())
            throw DomainError("matched_dft_sector: basis size does not match R");
        if (k > basis.size())
            throw DomainError("matched_dft_sector: k exceeds M");

        const arma::vec energy = arma::real(arma::sum(arma::conj(basis.columns()) % (R.matrix() * basis.columns()), 0)).t();
        std::vector<arma::uword> order(basis.size());
        std::iota(order.begin(), order.end(), arma::uword{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](arma::uword a, arma::uword b) { return energy(a) > energy(b); });
        order.resize(k);

        SectorSelection sel;
        sel.indices = arma::uvec(order);
        sel.empty = order.empty();
        sel.columns = sel.empty ? arma::cx_mat(basis.size(), 0) : arma::cx_mat(basis.columns().cols(sel.indices));
        return sel;
    }

    arma::vec sector_energy_profile(const CovarianceMatrix &R, const SectorSelection &sector)
    {
        if (sector.columns.n_rows != R.size())
            throw DomainError("sector_energy_profile: dimension mismatch");
        return arma::real(arma::sum(arma::conj(sector.columns) % (R.matrix() * sector.columns), 0)).t();
    }

    double subspace_distance(const arma::cx_mat &Ua, const arma::cx_mat &Ub)
    {
        if (Ua.n_rows != Ub.n_rows || Ua.n_cols != Ub.n_cols)
            throw DomainError("subspace_distance: shapes differ");
        // ||(I - Ua Ua^H) Ub||_F equals sqrt(k - ||Ua^H Ub||_F^2) for orthonormal
        // inputs but does not lose precision when the spans nearly coincide.
        return arma::norm(Ub - Ua * (Ua.t() * Ub), "fro");
    }

    arma::cx_mat dominant_eigenvectors(const CovarianceMatrix &R, arma::uword k)
    {
        if (k > R.size())
            throw DomainError("dominant_eigenvectors: k exceeds M");
        if (k == 0)
            return arma::cx_mat(R.size(), 0);
        return R.spectral().eigenvectors.cols(0, k - 1);
    }
}
