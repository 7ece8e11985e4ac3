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

#include "fddmimo/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace fddmimo
{
    PilotMatrix::PilotMatrix(arma::cx_mat entries, double power_budget)
        : X_(std::move(entries)), power_budget_(power_budget)
    {
        if (!(power_budget_ > 0.0))
            throw DomainError("PilotMatrix: power budget must be > 0");
        if (X_.n_rows < 1 || X_.n_cols < 1)
            throw DomainError("PilotMatrix: empty pilot");
        if (power() > power_budget_ * (1.0 + 1e-10))
            throw DomainError("PilotMatrix: tr(XX^H) = " + std::to_string(power()) + " exceeds budget " +
                              std::to_string(power_budget_));
    }

    double PilotMatrix::power() const { return std::pow(arma::norm(X_, "fro"), 2); }

    PilotMatrix random_pilot(arma::uword T, arma::uword M, double power_budget, Rng &rng)
    {
        if (T < 1 || M < 1)
            throw DomainError("random_pilot: T and M must be >= 1");
        if (!(power_budget > 0.0))
            throw DomainError("random_pilot: power budget must be > 0");

        arma::cx_mat X = complex_gaussian_mat(rng, T, M, 1.0);
        const double energy = std::pow(arma::norm(X, "fro"), 2);
        X *= std::sqrt(power_budget / energy);
        return PilotMatrix(std::move(X), power_budget);
    }

    WaterfillSolution waterfill(const arma::vec &eigenvalues, double noise_var, double power_budget)
    {
        if (!(noise_var > 0.0))
            throw DomainError("waterfill: noise variance must be > 0");
        if (!(power_budget > 0.0))
            throw DomainError("waterfill: power budget must be > 0");
        if (eigenvalues.is_empty())
            throw DomainError("waterfill: no eigenvalues");
        for (arma::uword i = 0; i < eigenvalues.n_elem; ++i)
        {
            if (!(eigenvalues(i) >= 0.0))
                throw DomainError("waterfill: eigenvalues must be non-negative");
            if (i > 0 && eigenvalues(i) > eigenvalues(i - 1))
                throw DomainError("waterfill: eigenvalues must be sorted in descending order");
        }

        arma::uword positive = 0;
        while (positive < eigenvalues.n_elem && eigenvalues(positive) > 0.0)
            ++positive;
        if (positive == 0)
            throw DomainError("waterfill: all eigenvalues are zero, nothing to train");

        // floor_i = noise_var / lambda_i is ascending over the positive prefix.
        arma::vec floor(positive);
        for (arma::uword i = 0; i < positive; ++i)
            floor(i) = noise_var / eigenvalues(i);

        double mu = 0.0;
        arma::uword active = 0;
        for (arma::uword k = positive; k >= 1; --k)
        {
            const double candidate = (power_budget + arma::accu(floor.head(k))) / static_cast<double>(k);
            if (candidate > floor(k - 1))
            {
                mu = candidate;
                active = k;
                break;
            }
        }

        WaterfillSolution sol;
        sol.water_level = mu;
        sol.levels.zeros(eigenvalues.n_elem);
        for (arma::uword i = 0; i < active; ++i)
            sol.levels(i) = mu - floor(i);
        sol.active_set = arma::regspace<arma::uvec>(0, active - 1);
        return sol;
    }

    DesignedPilot shaped_pilot(const arma::cx_mat &directions, const arma::vec &profile, arma::uword T,
                               double noise_var, double power_budget)
    {
        if (T < 1)
            throw DomainError("shaped_pilot: T must be >= 1");
        if (directions.n_cols != profile.n_elem || directions.n_cols == 0)
            throw DomainError("shaped_pilot: need one profile entry per direction");

        const arma::uvec order = arma::stable_sort_index(profile, "descend");
        const arma::uword used = std::min<arma::uword>(T, profile.n_elem);

        arma::vec lambda(T, arma::fill::zeros);
        for (arma::uword i = 0; i < used; ++i)
            lambda(i) = std::max(0.0, profile(order(i)));

        WaterfillSolution alloc = waterfill(lambda, noise_var, power_budget);

        arma::cx_mat X(T, directions.n_rows, arma::fill::zeros);
        for (arma::uword i = 0; i < used; ++i)
            if (alloc.levels(i) > 0.0)
                X.row(i) = std::sqrt(alloc.levels(i)) * directions.col(order(i)).t();

        return DesignedPilot{PilotMatrix(std::move(X), power_budget), std::move(alloc)};
    }

    DesignedPilot design_single_user_pilot(const CovarianceMatrix &R, arma::uword T, double noise_var,
                                           double power_budget)
    {
        const auto &sd = R.spectral();
        return shaped_pilot(sd.eigenvectors, sd.eigenvalues, T, noise_var, power_budget);
    }

    OverlayedPilot overlayed_pilot(const std::vector<UserSector> &users, const std::vector<double> &per_user_power,
                                   double noise_var)
    {
        if (users.empty())
            throw DomainError("overlayed_pilot: no users");
        if (per_user_power.size() != users.size())
            throw DomainError("overlayed_pilot: one power per user required");

        const arma::uword M = users.front().sector.columns.n_rows;
        std::set<arma::uword> taken;
        arma::uword T = 0;
        for (std::size_t k = 0; k < users.size(); ++k)
        {
            const auto &u = users[k];
            if (u.sector.empty || u.sector.indices.is_empty())
                throw DomainError("overlayed_pilot: user " + std::to_string(k) + " has an empty sector");
            if (u.sector.columns.n_rows != M || u.sector.columns.n_cols != u.sector.indices.n_elem)
                throw DomainError("overlayed_pilot: inconsistent sector shapes");
            for (arma::uword idx : u.sector.indices)
                if (!taken.insert(idx).second)
                    throw SectorConflictError("overlayed_pilot: DFT column " + std::to_string(idx) +
                                              " is claimed by more than one user");
            T = std::max<arma::uword>(T, u.sector.indices.n_elem);
        }

        const double total = std::accumulate(per_user_power.begin(), per_user_power.end(), 0.0);
        OverlayedPilot out{PilotMatrix(arma::cx_mat(T, M, arma::fill::zeros), total), {}, {}};
        arma::cx_mat X(T, M, arma::fill::zeros);
        for (std::size_t k = 0; k < users.size(); ++k)
        {
            DesignedPilot d = shaped_pilot(users[k].sector.columns, users[k].profile, T, noise_var, per_user_power[k]);
            X += d.pilot.entries();
            out.per_user.push_back(d.pilot.entries());
            out.allocations.push_back(std::move(d.allocation));
        }
        out.pilot = PilotMatrix(std::move(X), total);
        return out;
    }

    OverlayedPilot overlayed_pilot(const std::vector<UserSector> &users, double total_power, double noise_var)
    {
        if (users.empty())
            throw DomainError("overlayed_pilot: no users");
        return overlayed_pilot(users, std::vector<double>(users.size(), total_power / static_cast<double>(users.size())),
                               noise_var);
    }
}
