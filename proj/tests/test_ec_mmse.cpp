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

#include <catch_amalgamated.hpp>

#include "fddmimo/ec_mmse.hpp"

#include <cmath>

using namespace fddmimo;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    const ArrayGeometry g64(64, 0.5);

    arma::cx_vec unit(arma::uword M, arma::uword i)
    {
        arma::cx_vec v(M, arma::fill::zeros);
        v(i) = 1.0;
        return v;
    }
}

TEST_CASE("peak index to angle examples", "[ec_mmse]")
{
    CHECK_THAT(peak_index_angle(1, g64), WithinAbs(pi / 2, 1e-15));
    CHECK_THAT(peak_index_angle(33, g64), WithinAbs(0.0, 1e-15));
    CHECK_THAT(peak_index_angle(49, g64), WithinAbs(std::acos(-0.5), 1e-15));
    CHECK_THAT(peak_index_angle(17, g64), WithinAbs(std::acos(0.5), 1e-15));
    CHECK_THROWS_AS(peak_index_angle(0, g64), DomainError);
    CHECK_THROWS_AS(peak_index_angle(65, g64), DomainError);
}

TEST_CASE("grid-aligned steering vectors give their own angle", "[ec_mmse]")
{
    for (const ArrayGeometry &g : {g64, ArrayGeometry(32, 0.5), ArrayGeometry(40, 0.5)})
    {
        const arma::uword M = g.num_antennas();
        const arma::cx_mat F = DftBasis(M, DftOrdering::Natural).columns();
        for (arma::uword s = 0; s < M; ++s)
        {
            // coordinate of bin s on (-1, 1], then theta = arccos(omega / (2 d/chi))
            const double omega = 2.0 * s / double(M) - (2 * s > M ? 2.0 : 0.0);
            const double theta = std::acos(omega);
            const AngleEstimate est = estimate_mean_angle(F.t() * steering_vector(g, theta), g);
            CHECK(est.peak_index == s + 1);
            CHECK_THAT(est.mean_angle, WithinAbs(theta, 1e-10));
            CHECK(coordinate_index(g, theta) == s + 1);
        }
    }
}

TEST_CASE("coordinate_index inverts peak_index_angle", "[ec_mmse][property]")
{
    for (arma::uword s = 1; s <= 64; ++s)
        CHECK(coordinate_index(g64, peak_index_angle(s, g64)) == s);
}

TEST_CASE("mean-angle tie-break and errors", "[ec_mmse]")
{
    arma::cx_vec v(64, arma::fill::zeros);
    v(7) = cx(0.0, 2.0);
    v(3) = cx(2.0, 0.0);
    CHECK(estimate_mean_angle(v, g64).peak_index == 4);
    CHECK_THROWS_AS(estimate_mean_angle(arma::cx_vec(64, arma::fill::zeros), g64), DomainError);
    CHECK_THROWS_AS(estimate_mean_angle(arma::cx_vec(63, arma::fill::ones), g64), DomainError);
}

TEST_CASE("spread of a one-sparse vector", "[ec_mmse]")
{
    for (arma::uword s : {0u, 10u, 40u})
    {
        const AngleEstimate est = estimate_angular_spread(unit(64, s), s + 1, 0.95, g64);
        CHECK(est.half_width == 0);
        CHECK(est.captured_energy_fraction == 1.0);
        const double omega = 2.0 * s / 64.0 - (2 * s > 64 ? 2.0 : 0.0);
        const double expect = 0.5 * (std::acos(std::clamp(omega - 1.0 / 64, -1.0, 1.0)) -
                                     std::acos(std::clamp(omega + 1.0 / 64, -1.0, 1.0)));
        CHECK_THAT(est.spread, WithinAbs(expect, 1e-12));
    }
}

TEST_CASE("spread window wraps and respects the energy fraction", "[ec_mmse][property]")
{
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep)
    {
        const arma::cx_vec v = complex_gaussian_vec(rng, 64, 1.0);
        const arma::uword peak = 1 + rep % 64;
        const double frac = 0.3 + 0.7 * (rep % 10) / 9.0;
        const AngleEstimate est = estimate_angular_spread(v, peak, frac, g64);
        CHECK(est.captured_energy_fraction >= frac * (1 - 1e-12));
        CHECK(est.spread >= 0.0);
        if (est.half_width > 0)
        {
            const arma::vec p = arma::square(arma::abs(v));
            double smaller = 0.0;
            for (long long k = -static_cast<long long>(est.half_width) + 1; k < static_cast<long long>(est.half_width); ++k)
                smaller += p((peak - 1 + 64 + k) % 64);
            CHECK(smaller < frac * arma::accu(p));
        }
    }
    CHECK(estimate_angular_spread(unit(64, 5), 6, 1.0, g64).half_width == 0);
    CHECK_THROWS_AS(estimate_angular_spread(unit(64, 5), 6, 0.0, g64), DomainError);
    CHECK_THROWS_AS(estimate_angular_spread(unit(64, 5), 65, 0.9, g64), DomainError);
}

TEST_CASE("spread estimate from a clean angular image tracks the true spread", "[ec_mmse][statistical]")
{
    Rng rng(12);
    const double mean = pi / 6, nu = pi / 10;
    const OneRingModel model{g64, {AoaKind::Uniform, mean, nu}, 100, 1.0};
    const arma::cx_mat F = DftBasis(64, DftOrdering::Natural).columns();
    // one DFT cell expressed as an angle around the mean direction
    const double cell = (2.0 / 64) / (2 * 0.5 * std::sin(mean));
    std::vector<double> mean_err, spread_err;
    for (int i = 0; i < 200; ++i)
    {
        const arma::cx_vec h = draw_channel(model, rng);
        const arma::cx_vec noisy = h + complex_gaussian_vec(rng, 64, 1e-3);
        const arma::cx_vec angular = F.t() * noisy;
        const AngleEstimate peak = estimate_mean_angle(angular, g64);
        const AngleEstimate est = estimate_angular_spread(angular, peak.peak_index, 0.95, g64);
        mean_err.push_back(std::abs(est.mean_angle - mean));
        spread_err.push_back(std::abs(est.spread - nu));
    }
    std::sort(mean_err.begin(), mean_err.end());
    std::sort(spread_err.begin(), spread_err.end());
    CHECK(mean_err[100] < nu + cell);
    CHECK(spread_err[100] < 2 * cell);
}

TEST_CASE("EC-MMSE pipeline", "[ec_mmse]")
{
    Rng rng(13);
    const OneRingModel model{g64, {AoaKind::Uniform, pi / 6, pi / 10}, 100, 1.0};
    const ObservationModel obs{random_pilot(20, 64, 20.0, rng), 0.01};
    const arma::cx_vec h = draw_channel(model, rng);
    const arma::cx_vec y = obs.pilot.entries() * h + complex_gaussian_vec(rng, 20, 0.01);
    const SparseRecoveryConfig cfg{.regularization = default_regularization(0.01, 64),
                                   .max_iters = 2000,
                                   .tolerance = 1e-8,
                                   .basis = DftBasis(64, DftOrdering::Natural)};

    const EcMmseResult res = ec_mmse_estimate(obs, y, cfg, g64);
    CHECK_FALSE(res.back_projected);
    CHECK(res.covariance.kind() == CovarianceMatrix::Kind::Parametric);
    CHECK(arma::norm(arma::real(res.covariance.matrix().diag()) - 1.0, "inf") < 1e-14);
    CHECK(res.covariance.spectral().eigenvalues.min() >= 0.0);
    CHECK(res.angles.mean_angle > 0.0);
    CHECK(res.angles.mean_angle < pi);

    SECTION("bypassing the sparse stage with the same covariance is bit-identical")
    {
        const arma::cx_vec direct = ec_mmse_apply(
            covariance_parametric(g64, res.angles.mean_angle, res.angles.spread, 1.0), obs, y);
        CHECK(arma::approx_equal(direct, res.channel, "absdiff", 0.0));
        const EcMmseResult again = ec_mmse_estimate(obs, y, res.recovery, g64);
        CHECK(arma::approx_equal(again.channel, res.channel, "absdiff", 0.0));
    }

    SECTION("deterministic")
    {
        const EcMmseResult again = ec_mmse_estimate(obs, y, cfg, g64);
        CHECK(arma::approx_equal(again.channel, res.channel, "absdiff", 0.0));
        CHECK(again.angles.peak_index == res.angles.peak_index);
    }

    SECTION("centred ordering is rejected")
    {
        SparseRecoveryConfig bad = cfg;
        bad.basis = DftBasis(64, DftOrdering::Centered);
        CHECK_THROWS_AS(ec_mmse_estimate(obs, y, bad, g64), DomainError);
    }

    SECTION("an all-zero sparse estimate falls back to back-projection")
    {
        SparseRecoveryConfig heavy = cfg;
        heavy.regularization = 1e6;
        const EcMmseResult fb = ec_mmse_estimate(obs, y, heavy, g64);
        CHECK(fb.back_projected);
        const arma::cx_vec bp = DftBasis(64, DftOrdering::Natural).columns().t() * (obs.pilot.entries().t() * y);
        CHECK(fb.angles.peak_index == estimate_mean_angle(bp, g64).peak_index);
        CHECK(arma::is_finite(fb.channel));
    }
}

TEST_CASE("perturbed covariance", "[ec_mmse]")
{
    const double mean = pi / 6, nu = pi / 10;
    const CovarianceMatrix same = perturbed_covariance(mean, nu, 0.0, 0.0, g64);
    CHECK(arma::approx_equal(same.matrix(), covariance_parametric(g64, mean, nu, 1.0).matrix(), "absdiff", 0.0));
    const CovarianceMatrix shifted = perturbed_covariance(mean, nu, 0.1, -0.05, g64);
    CHECK(arma::approx_equal(shifted.matrix(), covariance_parametric(g64, mean + 0.1, nu - 0.05, 1.0).matrix(),
                             "absdiff", 0.0));
    CHECK_THROWS_AS(perturbed_covariance(mean, nu, -1.0, 0.0, g64), DomainError);
    CHECK_THROWS_AS(perturbed_covariance(mean, nu, 3.0, 0.0, g64), DomainError);
    CHECK_THROWS_AS(perturbed_covariance(mean, nu, 0.0, -0.5, g64), DomainError);
}
