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

#include "fddmimo/channel_model.hpp"
#include "fddmimo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace fddmimo
{
    ArrayGeometry::ArrayGeometry(arma::uword num_antennas, double spacing_ratio)
        : num_antennas_(num_antennas), spacing_ratio_(spacing_ratio)
    {
        if (num_antennas_ < 1)
            throw DomainError("ArrayGeometry: num_antennas must be >= 1");
        if (!(spacing_ratio_ > 0.0) || !std::isfinite(spacing_ratio_))
            throw DomainError("ArrayGeometry: spacing_ratio must be > 0");
    }

    void AoaDistribution::validate() const
    {
        if (!(mean_angle >= 0.0 && mean_angle <= pi))
            throw DomainError("AoaDistribution: mean_angle must lie in [0, pi]");
        if (kind == AoaKind::Uniform && !(spread >= 0.0))
            throw DomainError("AoaDistribution: uniform half-width must be >= 0");
        if (kind == AoaKind::Gaussian && !(spread > 0.0))
            throw DomainError("AoaDistribution: gaussian standard deviation must be > 0");
    }

    double AoaDistribution::sample(Rng &rng) const
    {
        if (kind == AoaKind::Uniform)
        {
            const double lo = std::max(0.0, mean_angle - spread);
            const double hi = std::min(pi, mean_angle + spread);
            if (!(hi > lo))
                return mean_angle;
            std::uniform_real_distribution<double> u(lo, hi);
            return u(rng);
        }
        std::normal_distribution<double> n(mean_angle, spread);
        return std::clamp(n(rng), 0.0, pi);
    }

    void OneRingModel::validate() const
    {
        aoa.validate();
        if (num_paths < 1)
            throw DomainError("OneRingModel: num_paths must be >= 1");
        if (!(path_power > 0.0))
            throw DomainError("OneRingModel: path_power must be > 0");
    }

    arma::cx_vec steering_vector(const ArrayGeometry &geometry, double theta)
    {
        if (!(theta >= 0.0 && theta <= pi))
            throw DomainError("steering_vector: theta = " + std::to_string(theta) + " outside [0, pi]");

        const arma::uword M = geometry.num_antennas();
        const double step = -2.0 * pi * geometry.spacing_ratio() * std::cos(theta);
        arma::cx_vec a(M);
        for (arma::uword m = 0; m < M; ++m)
            a(m) = std::polar(1.0, step * static_cast<double>(m));
        return a;
    }

    double angular_coordinate(const ArrayGeometry &geometry, double theta)
    {
        if (!(theta >= 0.0 && theta <= pi))
            throw DomainError("angular_coordinate: theta outside [0, pi]");
        return 2.0 * geometry.spacing_ratio() * std::cos(theta);
    }

    double angle_from_coordinate(const ArrayGeometry &geometry, double omega)
    {
        const double c = omega / (2.0 * geometry.spacing_ratio());
        return std::acos(std::clamp(c, -1.0, 1.0));
    }

    arma::cx_vec draw_channel(const OneRingModel &model, Rng &rng)
    {
        model.validate();
        const arma::uword M = model.geometry.num_antennas();
        const double scale = 1.0 / std::sqrt(static_cast<double>(model.num_paths));

        arma::cx_vec h(M, arma::fill::zeros);
        std::span<cx> hs(h.memptr(), M);
        for (arma::uword p = 0; p < model.num_paths; ++p)
        {
            const double theta = model.aoa.sample(rng);
            const cx alpha = complex_gaussian(rng, model.path_power);
            const arma::cx_vec a = steering_vector(model.geometry, theta);
            kernels::axpy(alpha * scale, std::span<const cx>(a.memptr(), M), hs);
        }
        return h;
    }
}
