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

#include "fddmimo/ec_mmse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fddmimo
{
    namespace
    {
        // Natural-order coordinate of 0-based bin s.
        double natural_coordinate(arma::uword s, arma::uword M)
        {
            const double x = 2.0 * static_cast<double>(s) / static_cast<double>(M);
            return s <= M / 2 ? x : x - 2.0;
        }

        // Keeps the estimate inside the open interval the sinc model is defined on.
        constexpr double edge_margin = 1e-6;
    }

    double peak_index_angle(arma::uword s, const ArrayGeometry &geometry)
    {
        const arma::uword M = geometry.num_antennas();
        if (s < 1 || s > M)
            throw DomainError("peak_index_angle: index " + std::to_string(s) + " outside 1.." + std::to_string(M));
        const double frac = static_cast<double>(s - 1) / static_cast<double>(M);
        const double arg = (s - 1 <= M / 2 ? frac : frac - 1.0) / geometry.spacing_ratio();
        return std::acos(std::clamp(arg, -1.0, 1.0));
    }

    arma::uword coordinate_index(const ArrayGeometry &geometry, double theta)
    {
        const auto M = static_cast<long long>(geometry.num_antennas());
        const double omega = angular_coordinate(geometry, theta);
        long long s = std::llround(omega * static_cast<double>(M) / 2.0) % M;
        if (s < 0)
            s += M;
        return static_cast<arma::uword>(s) + 1;
    }

    AngleEstimate estimate_mean_angle(const arma::cx_vec &angular, const ArrayGeometry &geometry)
    {
        if (angular.n_elem != geometry.num_antennas())
            throw DomainError("estimate_mean_angle: length does not match the array");

        arma::uword best = 0;
        double best_mag = 0.0;
        for (arma::uword m = 0; m < angular.n_elem; ++m)
        {
            const double mag = std::norm(angular(m));
            if (mag > best_mag)
            {
                best_mag = mag;
                best = m;
            }
        }
        if (!(best_mag > 0.0))
            throw DomainError("estimate_mean_angle: angular vector is zero");

        AngleEstimate est;
        est.peak_index = best + 1;
        est.mean_angle = peak_index_angle(est.peak_index, geometry);
        return est;
    }

    AngleEstimate estimate_angular_spread(const arma::cx_vec &angular, arma::uword peak_index, double energy_fraction,
                                          const ArrayGeometry &geometry)
    {
        const arma::uword M = geometry.num_antennas();
        if (angular.n_elem != M)
            throw DomainError("estimate_angular_spread: length does not match the array");
        if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
            throw DomainError("estimate_angular_spread: energy_fraction must lie in (0, 1]");
        if (peak_index < 1 || peak_index > M)
            throw DomainError("estimate_angular_spread: peak index out of range");

        const arma::vec power = arma::square(arma::abs(angular));
        const double total = arma::accu(power);
        if (!(total > 0.0))
            throw DomainError("estimate_angular_spread: angular vector is zero");

        const arma::uword s = peak_index - 1;
        const double target = energy_fraction * total * (1.0 - 1e-12);
        arma::uword w = 0;
        double captured = power(s);
        while (captured < target && 2 * w + 1 < M)
        {
            ++w;
            captured += power((s + w) % M);
            if (2 * w + 1 <= M) // the two ends meet on the circle for even M
                captured += power((s + M - w) % M);
        }

        const double centre = natural_coordinate(s, M);
        const double reach = static_cast<double>(2 * w + 1) / static_cast<double>(M);
        const double widest = angle_from_coordinate(geometry, centre - reach);
        const double narrowest = angle_from_coordinate(geometry, centre + reach);

        AngleEstimate est;
        est.peak_index = peak_index;
        est.mean_angle = peak_index_angle(peak_index, geometry);
        est.half_width = w;
        est.spread = 0.5 * (widest - narrowest);
        est.captured_energy_fraction = std::min(1.0, captured / total);
        return est;
    }

    arma::cx_vec ec_mmse_apply(const CovarianceMatrix &estimated, const ObservationModel &obs, const arma::cx_vec &y)
    {
        return mmse_estimate(estimated, obs, y);
    }

    EcMmseResult ec_mmse_estimate(const ObservationModel &obs, const arma::cx_vec &y,
                                  const SparseRecoveryConfig &recovery, const ArrayGeometry &geometry,
                                  double energy_fraction)
    {
        if (recovery.basis.ordering() != DftOrdering::Natural)
            throw DomainError("ec_mmse_estimate: the recovery basis must use natural DFT ordering");

        if (geometry.num_antennas() != obs.pilot.num_antennas())
            throw DomainError("ec_mmse_estimate: geometry does not match the pilot");
        SparseRecoveryResult rec = fista_recover(obs, y, recovery);
        return ec_mmse_estimate(obs, y, std::move(rec), geometry, energy_fraction);
    }

    EcMmseResult ec_mmse_estimate(const ObservationModel &obs, const arma::cx_vec &y, SparseRecoveryResult recovery,
                                  const ArrayGeometry &geometry, double energy_fraction)
    {
        if (geometry.num_antennas() != obs.pilot.num_antennas() || recovery.angular.n_elem != geometry.num_antennas())
            throw DomainError("ec_mmse_estimate: geometry, pilot and recovery sizes disagree");

        const bool back_projected = !arma::any(arma::abs(recovery.angular) > 0.0);
        arma::cx_vec angular;
        if (back_projected)
            angular = DftBasis(geometry.num_antennas(), DftOrdering::Natural).columns().t() * (obs.pilot.entries().t() * y);
        const arma::cx_vec &source = back_projected ? angular : recovery.angular;

        const AngleEstimate peak = estimate_mean_angle(source, geometry);
        AngleEstimate angles = estimate_angular_spread(source, peak.peak_index, energy_fraction, geometry);

        const double mean = std::clamp(angles.mean_angle, edge_margin, pi - edge_margin);
        CovarianceMatrix R_hat = covariance_parametric(geometry, mean, angles.spread, 1.0);
        arma::cx_vec h = ec_mmse_apply(R_hat, obs, y);
        return EcMmseResult{std::move(h), angles, std::move(R_hat), std::move(recovery), back_projected};
    }

    CovarianceMatrix perturbed_covariance(double true_mean, double true_spread, double mean_offset,
                                          double spread_offset, const ArrayGeometry &geometry)
    {
        const double mean = true_mean + mean_offset;
        const double spread = true_spread + spread_offset;
        if (!(mean > 0.0 && mean < pi))
            throw DomainError("perturbed_covariance: perturbed mean angle leaves (0, pi)");
        if (!(spread >= 0.0))
            throw DomainError("perturbed_covariance: perturbed spread is negative");
        return covariance_parametric(geometry, mean, spread, 1.0);
    }
}
