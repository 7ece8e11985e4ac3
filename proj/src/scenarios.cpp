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

#include "fddmimo/harness.hpp"

namespace fddmimo
{
    namespace
    {
        // M = 64, d/chi = 1/2, uniform AoA around 30 deg with 18 deg half-width, 100 unit-power paths.
        ExperimentConfig one_ring_base(Scenario s)
        {
            ExperimentConfig c;
            c.scenario = s;
            c.num_antennas = 64;
            c.spacing_ratio = 0.5;
            c.aoa_kind = AoaKind::Uniform;
            c.mean_angle_deg = 30.0;
            c.spread_deg = 18.0;
            c.num_paths = 100;
            c.path_power = 1.0;
            c.trials = 1000;
            c.seed = 20160101;
            return c;
        }

        const std::vector<double> inv_noise_grid{0, 10, 20, 30, 40, 50};
        const std::vector<double> snr_grid{0, 5, 10, 15, 20, 25, 30};
        const std::vector<double> t_grid{8, 12, 16, 20, 24, 28, 32};
    }

    std::vector<std::string> repro_targets()
    {
        return {"fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b"};
    }

    ExperimentConfig repro_config(const std::string &target)
    {
        ExperimentConfig c;
        if (target == "fig1a")
        {
            c = one_ring_base(Scenario::Fig1aExactRank);
            c.exact_rank = 15;
            c.t_values = {10, 15, 20};
            c.estimators = {"mmse_random", "mmse_optimal"};
            c.sweep_axis = SweepAxis::InvNoiseDb;
            c.sweep_grid = inv_noise_grid;
        }
        else if (target == "fig1b")
        {
            c = one_ring_base(Scenario::Fig1bOneRing);
            c.t_values = {10, 12, 20};
            c.estimators = {"mmse_random", "mmse_optimal"};
            c.sweep_axis = SweepAxis::InvNoiseDb;
            c.sweep_grid = inv_noise_grid;
        }
        else if (target == "fig2a" || target == "fig3")
        {
            c = one_ring_base(Scenario::Fig2SnrSweep);
            c.t_values = {20};
            c.sweep_axis = SweepAxis::SnrDb;
            c.sweep_grid = snr_grid;
            c.estimators = {"ec_mmse", "fista", "mmse_true_cov"};
            if (target == "fig3")
            {
                c.sweep_grid = {20};
                c.estimators = {"ec_mmse", "fista"};
                c.histogram_bins = 50;
            }
        }
        else if (target == "fig2b")
        {
            c = one_ring_base(Scenario::Fig2TSweep);
            c.snr_db = 20;
            c.sweep_axis = SweepAxis::T;
            c.sweep_grid = t_grid;
            c.estimators = {"ec_mmse", "fista", "mmse_true_cov"};
        }
        else if (target == "fig4a" || target == "fig4b")
        {
            c = one_ring_base(Scenario::Fig4Robustness);
            c.t_values = {15};
            c.noise_var = 0.1;
            c.estimators = {"mmse_perturbed"};
            if (target == "fig4a")
            {
                c.sweep_axis = SweepAxis::MeanOffsetDeg;
                c.sweep_grid = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
            }
            else
            {
                c.sweep_axis = SweepAxis::SpreadOffsetDeg;
                c.sweep_grid = {-10, -7.5, -5, -2.5, 0, 2.5, 5, 7.5, 10};
            }
        }
        else if (target == "fig5a" || target == "fig5b")
        {
            c = one_ring_base(Scenario::Fig5GaussianAoa);
            c.aoa_kind = AoaKind::Gaussian;
            c.spread_deg = 6.0; // standard deviation
            c.estimators = {"ec_mmse", "fista", "mmse_true_cov"};
            if (target == "fig5a")
            {
                c.t_values = {20};
                c.sweep_axis = SweepAxis::SnrDb;
                c.sweep_grid = snr_grid;
            }
            else
            {
                c.snr_db = 20;
                c.sweep_axis = SweepAxis::T;
                c.sweep_grid = t_grid;
            }
        }
        else
        {
            std::string known;
            for (const auto &t : repro_targets())
                known += (known.empty() ? "" : ", ") + t;
            throw DomainError("unknown repro target '" + target + "' (expected one of: " + known + ")");
        }
        c.validate();
        return c;
    }
}
