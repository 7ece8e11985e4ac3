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

#include "fddmimo/estimators.hpp"
#include "fddmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace fddmimo
{
    namespace
    {
        std::span<const cx> view(const arma::cx_vec &v) { return {v.memptr(), v.n_elem}; }
        std::span<cx> view(arma::cx_vec &v) { return {v.memptr(), v.n_elem}; }
        std::span<const cx> column(const arma::cx_mat &B, arma::uword j) { return {B.colptr(j), B.n_rows}; }

        // out = B z, accumulated column by column.
        void apply(const arma::cx_mat &B, const arma::cx_vec &z, arma::cx_vec &out)
        {
            out.zeros(B.n_rows);
            for (arma::uword j = 0; j < B.n_cols; ++j)
                if (z(j) != cx{0.0, 0.0})
                    kernels::axpy(z(j), column(B, j), view(out));
        }

        // out = B^H r
        void apply_adjoint(const arma::cx_mat &B, const arma::cx_vec &r, arma::cx_vec &out)
        {
            out.set_size(B.n_cols);
            for (arma::uword j = 0; j < B.n_cols; ++j)
                out(j) = kernels::dotc(column(B, j), view(r));
        }

        void check_dims(const CovarianceMatrix &R, const ObservationModel &obs)
        {
            obs.validate();
            if (R.size() != obs.pilot.num_antennas())
                throw DomainError("estimator: covariance is " + std::to_string(R.size()) + "x" +
                                  std::to_string(R.size()) + " but pilot has " +
                                  std::to_string(obs.pilot.num_antennas()) + " columns");
        }

        // Lower Cholesky factor of X R X^H + s2 I.
        arma::cx_mat innovation_factor(const CovarianceMatrix &R, const ObservationModel &obs)
        {
            const arma::cx_mat &X = obs.pilot.entries();
            arma::cx_mat K = X * R.matrix() * X.t();
            K = 0.5 * (K + K.t());
            K.diag() += obs.noise_var;
            arma::cx_mat L;
            if (!arma::chol(L, K, "lower"))
                throw NumericalError("mmse: Cholesky of X R X^H + s2 I failed");
            return L;
        }
    }

    void ObservationModel::validate() const
    {
        if (!(noise_var > 0.0) || !std::isfinite(noise_var))
            throw DomainError("ObservationModel: noise variance must be finite and > 0");
    }

    arma::cx_vec mmse_estimate(const CovarianceMatrix &R, const ObservationModel &obs, const arma::cx_vec &y)
    {
        check_dims(R, obs);
        if (y.n_elem != obs.pilot.num_symbols())
            throw DomainError("mmse_estimate: y has " + std::to_string(y.n_elem) + " entries, expected " +
                              std::to_string(obs.pilot.num_symbols()));

        const arma::cx_mat L = innovation_factor(R, obs);
        const arma::cx_vec u = arma::solve(arma::trimatl(L), y);
        const arma::cx_vec z = arma::solve(arma::trimatu(L.t()), u);
        return R.matrix() * (obs.pilot.entries().t() * z);
    }

    double mmse_mse_closed_form(const CovarianceMatrix &R, const ObservationModel &obs)
    {
        check_dims(R, obs);
        const arma::cx_mat L = innovation_factor(R, obs);
        // R X^H K^{-1} X R = W^H W with W = L^{-1} X R
        const arma::cx_mat W = arma::solve(arma::trimatl(L), obs.pilot.entries() * R.matrix());
        const double explained = std::pow(arma::norm(W, "fro"), 2);
        return std::clamp(R.trace() - explained, 0.0, R.trace());
    }

    double EigenFormTerms::residual(arma::uword r) const
    {
        double s = 0.0;
        for (arma::uword i = r; i < weight.n_elem; ++i)
            s += weight(i);
        return s;
    }

    EigenFormTerms mmse_eigen_terms(const CovarianceMatrix &R, const ObservationModel &obs)
    {
        check_dims(R, obs);
        const arma::cx_mat S = R.sqrt_matrix();
        const arma::cx_mat XS = obs.pilot.entries() * S;
        const SpectralDecomposition phi = hermitian_eig(XS.t() * XS);

        EigenFormTerms terms;
        terms.gamma = phi.eigenvalues;
        terms.weight = arma::real(arma::sum(arma::conj(phi.eigenvectors) % (R.matrix() * phi.eigenvectors), 0)).t();
        for (arma::uword i = 0; i < terms.gamma.n_elem; ++i)
            terms.total += terms.weight(i) / (1.0 + terms.gamma(i) / obs.noise_var);
        return terms;
    }

    void SparseRecoveryConfig::validate() const
    {
        if (!(regularization > 0.0))
            throw DomainError("SparseRecoveryConfig: regularization must be > 0");
        if (max_iters < 1)
            throw DomainError("SparseRecoveryConfig: max_iters must be >= 1");
        if (!(tolerance > 0.0))
            throw DomainError("SparseRecoveryConfig: tolerance must be > 0");
    }

    double default_regularization(double noise_var, arma::uword M, double scale)
    {
        return scale * std::sqrt(noise_var) * std::sqrt(2.0 * std::log(static_cast<double>(M)));
    }

    double lasso_objective(const arma::cx_mat &B, const arma::cx_vec &y, const arma::cx_vec &z, double lambda)
    {
        arma::cx_vec r;
        apply(B, z, r);
        r -= y;
        return 0.5 * kernels::norm_sq(view(r)) + lambda * kernels::abs_sum(view(z));
    }

    SparseRecoveryResult fista_recover(const ObservationModel &obs, const arma::cx_vec &y,
                                       const SparseRecoveryConfig &config)
    {
        obs.validate();
        config.validate();
        const arma::uword M = obs.pilot.num_antennas();
        if (config.basis.size() != M)
            throw DomainError("fista_recover: basis size does not match the pilot");
        if (y.n_elem != obs.pilot.num_symbols())
            throw DomainError("fista_recover: y length does not match the pilot");

        const arma::cx_mat B = obs.pilot.entries() * config.basis.columns();
        const double lambda = config.regularization;

        SparseRecoveryResult res;
        res.angular.zeros(M);

        const double L = std::pow(arma::norm(B, 2), 2);
        double f_x = lasso_objective(B, y, res.angular, lambda);
        res.objective.push_back(f_x);
        if (!(L > 0.0))
        {
            res.channel = config.basis.columns() * res.angular;
            res.converged = true;
            return res;
        }

        const double threshold = lambda / L;
        arma::cx_vec x = res.angular, v = x, next(M), grad(M), resid;
        double t = 1.0;

        // next = prox(from - B^H (B from - y) / L)
        auto prox_step = [&](const arma::cx_vec &from) {
            apply(B, from, resid);
            resid -= y;
            apply_adjoint(B, resid, grad);
            next = from;
            kernels::axpy(cx{-1.0 / L, 0.0}, view(grad), view(next));
            kernels::soft_threshold(view(next), threshold, view(next));
            return lasso_objective(B, y, next, lambda);
        };

        for (arma::uword it = 1; it <= config.max_iters; ++it)
        {
            double f_next = prox_step(v);
            double t_next;
            if (config.adaptive_restart && f_next > f_x)
            {
                f_next = prox_step(x);
                t_next = 1.0;
                v = next;
            }
            else
            {
                t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
                v = next + ((t - 1.0) / t_next) * (next - x);
            }
            if (!std::isfinite(f_next))
                throw NumericalError("fista_recover: non-finite objective at iteration " + std::to_string(it));

            const arma::cx_vec delta = next - x;
            const double change = std::sqrt(kernels::norm_sq(view(delta)));
            x = next;
            f_x = f_next;
            t = t_next;
            res.objective.push_back(f_x);
            res.iterations = it;
            if (change <= config.tolerance * std::sqrt(kernels::norm_sq(view(x))))
            {
                res.converged = true;
                break;
            }
        }

        res.angular = x;
        res.channel = config.basis.columns() * x;
        return res;
    }

    double nmse(const arma::cx_vec &estimate, const arma::cx_vec &truth)
    {
        if (estimate.n_elem != truth.n_elem)
            throw DomainError("nmse: length mismatch");
        const double denom = kernels::norm_sq(view(truth));
        if (!(denom > 0.0))
            throw DomainError("nmse: truth has zero norm");
        const arma::cx_vec diff = estimate - truth;
        return kernels::norm_sq(view(diff)) / denom;
    }
}
