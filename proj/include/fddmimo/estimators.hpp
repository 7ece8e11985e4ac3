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

#ifndef FDDMIMO_ESTIMATORS_HPP
#define FDDMIMO_ESTIMATORS_HPP

#include "fddmimo/pilot.hpp"

#include <vector>

namespace fddmimo
{
    /// y = X h + w, w ~ CN(0, noise_var I).
    struct ObservationModel
    {
        PilotMatrix pilot;
        double noise_var;

        void validate() const;
    };

    /// R X^H (X R X^H + s2 I)^{-1} y, solved through a Cholesky factor of the T x T system.
    arma::cx_vec mmse_estimate(const CovarianceMatrix &R, const ObservationModel &obs, const arma::cx_vec &y);

    /// tr(R - R X^H (X R X^H + s2 I)^{-1} X R), clamped to [0, tr R].
    double mmse_mse_closed_form(const CovarianceMatrix &R, const ObservationModel &obs);

    /// Per-direction terms of the eigen-form MSE.
    ///
    /// With Phi = R^{1/2} X^H X R^{1/2} = V Gamma V^H (gamma descending),
    /// MSE = sum_i weight_i / (1 + gamma_i / s2),  weight_i = v_i^H R v_i.
    struct EigenFormTerms
    {
        arma::vec gamma;
        arma::vec weight;
        double total = 0.0;

        /// sum_{i >= r} weight_i: the part of the MSE that no noise reduction removes
        /// once gamma_i = 0 for i >= r.
        double residual(arma::uword r) const;
    };

    EigenFormTerms mmse_eigen_terms(const CovarianceMatrix &R, const ObservationModel &obs);

    inline double mmse_mse_eigen_form(const CovarianceMatrix &R, const ObservationModel &obs)
    {
        return mmse_eigen_terms(R, obs).total;
    }

    /// l1-regularized least squares over an angular dictionary A.
    struct SparseRecoveryConfig
    {
        double regularization;
        arma::uword max_iters = 1000;
        double tolerance = 1e-6;
        DftBasis basis;
        bool adaptive_restart = true;

        void validate() const;
    };

    /// c * sigma * sqrt(2 ln M)
    double default_regularization(double noise_var, arma::uword M, double scale = 1.0);

    struct SparseRecoveryResult
    {
        arma::cx_vec angular; // h-tilde
        arma::cx_vec channel; // A h-tilde
        arma::uword iterations = 0;
        bool converged = false;
        std::vector<double> objective; // value after every iteration, objective[0] at the zero start
    };

    /// FISTA on 0.5 ||y - X A z||^2 + lambda ||z||_1 with step 1/L, L = ||X A||_2^2.
    /// With adaptive restart enabled, a step that increases the objective is
    /// replaced by a plain proximal-gradient step from the last iterate and the
    /// momentum is reset, which makes the objective sequence non-increasing.
    SparseRecoveryResult fista_recover(const ObservationModel &obs, const arma::cx_vec &y,
                                       const SparseRecoveryConfig &config);

    /// 0.5 ||y - B z||^2 + lambda ||z||_1
    double lasso_objective(const arma::cx_mat &B, const arma::cx_vec &y, const arma::cx_vec &z, double lambda);

    /// ||estimate - truth||^2 / ||truth||^2
    double nmse(const arma::cx_vec &estimate, const arma::cx_vec &truth);
}

#endif
