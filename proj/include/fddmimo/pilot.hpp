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

#ifndef FDDMIMO_PILOT_HPP
#define FDDMIMO_PILOT_HPP

#include "fddmimo/covariance.hpp"

#include <vector>

namespace fddmimo
{
    /// T x M training matrix X together with the power budget it was built for.
    class PilotMatrix
    {
    public:
        /// Throws DomainError if tr(X X^H) exceeds the budget by more than 1e-10 relative.
        PilotMatrix(arma::cx_mat entries, double power_budget);

        const arma::cx_mat &entries() const { return X_; }
        double power_budget() const { return power_budget_; }
        arma::uword num_symbols() const { return X_.n_rows; }
        arma::uword num_antennas() const { return X_.n_cols; }
        double power() const;

    private:
        arma::cx_mat X_;
        double power_budget_;
    };

    struct WaterfillSolution
    {
        arma::vec levels;       // delta_i^2, length T
        double water_level = 0; // mu
        arma::uvec active_set;  // indices with delta_i^2 > 0
    };

    /// A pilot plus the power allocation that produced it.
    struct DesignedPilot
    {
        PilotMatrix pilot;
        WaterfillSolution allocation;
    };

    /// i.i.d. CN(0, 1) entries rescaled so that tr(X X^H) equals the budget.
    PilotMatrix random_pilot(arma::uword T, arma::uword M, double power_budget, Rng &rng);

    /// delta_i^2 = max(0, mu - noise_var / lambda_i) with sum delta_i^2 = power_budget.
    ///
    /// mu comes from an active-set sweep: for k = r..1 the closed form
    /// mu_k = (P + sum_{i<=k} noise_var / lambda_i) / k is tested against the
    /// weakest active eigenvalue and the first consistent k is accepted.
    /// Eigenvalues must be non-negative and descending.
    WaterfillSolution waterfill(const arma::vec &eigenvalues, double noise_var, double power_budget);

    /// X = [Delta 0] B^H where B holds `directions` sorted by decreasing `profile`
    /// and Delta is water-filled over the top-T profile entries. Rows beyond the
    /// number of directions are zero.
    DesignedPilot shaped_pilot(const arma::cx_mat &directions, const arma::vec &profile, arma::uword T,
                               double noise_var, double power_budget);

    /// MSE-optimal single-user pilot: shaped_pilot over the eigenvectors of R.
    DesignedPilot design_single_user_pilot(const CovarianceMatrix &R, arma::uword T, double noise_var,
                                           double power_budget);

    inline PilotMatrix optimal_pilot_single_user(const CovarianceMatrix &R, arma::uword T, double noise_var,
                                                 double power_budget)
    {
        return design_single_user_pilot(R, T, noise_var, power_budget).pilot;
    }

    /// One user's share of an overlayed pilot: a set of DFT columns and the
    /// channel energy each of them carries.
    struct UserSector
    {
        SectorSelection sector;
        arma::vec profile;
    };

    struct OverlayedPilot
    {
        PilotMatrix pilot;                          // sum over users
        std::vector<arma::cx_mat> per_user;         // X_k, each T x M
        std::vector<WaterfillSolution> allocations; // one per user
    };

    /// X = sum_k X_k, X_k = shaped_pilot(U_k, profile_k, T, noise_var, P_k), T = max_k r_k.
    /// Sectors must be pairwise disjoint sets of columns of the same DFT basis;
    /// overlap raises SectorConflictError.
    OverlayedPilot overlayed_pilot(const std::vector<UserSector> &users, const std::vector<double> &per_user_power,
                                   double noise_var);

    /// Equal split P_k = P / K.
    OverlayedPilot overlayed_pilot(const std::vector<UserSector> &users, double total_power, double noise_var);
}

#endif
