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

#ifndef FDDMIMO_EC_MMSE_HPP
#define FDDMIMO_EC_MMSE_HPP

#include "fddmimo/estimators.hpp"

namespace fddmimo
{
    struct AngleEstimate
    {
        double mean_angle = 0.0;  // radians
        double spread = 0.0;      // radians, half-width
        arma::uword peak_index = 0; // 1-based index into the natural-order DFT grid
        arma::uword half_width = 0; // window {s - w, ..., s + w}
        double captured_energy_fraction = 0.0;
    };

    /// Angle of the natural-order DFT bin s (1-based):
    /// arccos((chi/d)(s-1)/M) for s <= M/2 + 1, arccos((chi/d)((s-1)/M - 1)) otherwise.
    double peak_index_angle(arma::uword s, const ArrayGeometry &geometry);

    /// Natural-order DFT bin (1-based) whose coordinate is closest to angular_coordinate(theta).
    arma::uword coordinate_index(const ArrayGeometry &geometry, double theta);

    /// Mean angle from the strongest angular bin; ties go to the lowest index.
    AngleEstimate estimate_mean_angle(const arma::cx_vec &angular, const ArrayGeometry &geometry);

    /// Grows a window symmetric in bin index around `peak_index` (wrapping on
    /// the coordinate circle) until it holds energy_fraction of ||h-tilde||^2,
    /// then maps the window edges back to angles. The result also carries the
    /// mean angle of `peak_index`.
    AngleEstimate estimate_angular_spread(const arma::cx_vec &angular, arma::uword peak_index, double energy_fraction,
                                          const ArrayGeometry &geometry);

    struct EcMmseResult
    {
        arma::cx_vec channel;
        AngleEstimate angles;
        CovarianceMatrix covariance; // unit-power parametric estimate
        SparseRecoveryResult recovery;
        bool back_projected = false; // angles taken from A^H X^H y because the sparse estimate was zero
    };

    /// Final filtering step: MMSE with an externally supplied covariance.
    arma::cx_vec ec_mmse_apply(const CovarianceMatrix &estimated, const ObservationModel &obs, const arma::cx_vec &y);

    /// Sparse angular recovery -> mean angle and spread -> parametric covariance
    /// (xi^2 = 1) -> MMSE. The recovery basis must use DftOrdering::Natural.
    /// When the l1 solution is identically zero (heavy regularization at low
    /// SNR) the angles are read from the back-projection A^H X^H y instead.
    EcMmseResult ec_mmse_estimate(const ObservationModel &obs, const arma::cx_vec &y,
                                  const SparseRecoveryConfig &recovery, const ArrayGeometry &geometry,
                                  double energy_fraction = 0.95);

    /// Same pipeline starting from an already computed sparse recovery.
    EcMmseResult ec_mmse_estimate(const ObservationModel &obs, const arma::cx_vec &y, SparseRecoveryResult recovery,
                                  const ArrayGeometry &geometry, double energy_fraction = 0.95);

    /// Parametric covariance at (true_mean + mean_offset, true_spread + spread_offset), unit power.
    CovarianceMatrix perturbed_covariance(double true_mean, double true_spread, double mean_offset,
                                          double spread_offset, const ArrayGeometry &geometry);
}

#endif
