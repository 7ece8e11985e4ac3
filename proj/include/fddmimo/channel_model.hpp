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

#ifndef FDDMIMO_CHANNEL_MODEL_HPP
#define FDDMIMO_CHANNEL_MODEL_HPP

#include "fddmimo/common.hpp"

namespace fddmimo
{
    /// Uniform linear array: M elements spaced d apart, carrier wavelength chi.
    /// Only the ratio d/chi enters the steering vectors.
    class ArrayGeometry
    {
    public:
        ArrayGeometry(arma::uword num_antennas, double spacing_ratio);

        arma::uword num_antennas() const { return num_antennas_; }
        double spacing_ratio() const { return spacing_ratio_; }

    private:
        arma::uword num_antennas_;
        double spacing_ratio_;
    };

    enum class AoaKind
    {
        Uniform,
        Gaussian
    };

    /// Angle-of-arrival law around a mean direction.
    ///
    /// For Uniform, `spread` is the half-width nu and samples are drawn uniformly
    /// from [mean - nu, mean + nu] intersected with [0, pi]; nu = 0 is a point
    /// mass. For Gaussian, `spread` is the standard deviation and samples falling
    /// outside [0, pi] are clipped to the nearest boundary.
    struct AoaDistribution
    {
        AoaKind kind = AoaKind::Uniform;
        double mean_angle = pi / 2;
        double spread = 0.0;

        void validate() const;
        double sample(Rng &rng) const;
    };

    struct OneRingModel
    {
        ArrayGeometry geometry;
        AoaDistribution aoa;
        arma::uword num_paths = 1;
        double path_power = 1.0; // xi^2

        void validate() const;
    };

    /// entry m = exp(-j 2 pi (d/chi) m cos(theta)), m = 0..M-1
    arma::cx_vec steering_vector(const ArrayGeometry &geometry, double theta);

    /// omega = 2 (d/chi) cos(theta); the virtual-beam coordinate of direction theta.
    double angular_coordinate(const ArrayGeometry &geometry, double theta);

    /// Inverse of angular_coordinate with the cosine argument clamped to [-1, 1].
    double angle_from_coordinate(const ArrayGeometry &geometry, double omega);

    /// h = P^{-1/2} sum_p alpha_p a(theta_p), alpha_p ~ CN(0, xi^2), theta_p ~ aoa.
    arma::cx_vec draw_channel(const OneRingModel &model, Rng &rng);
}

#endif
