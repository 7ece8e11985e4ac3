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

// Command-line front end: Monte Carlo runs, bundled figure recipes and
// single-shot covariance / pilot / estimation tools.

#include "fddmimo/harness.hpp"
#include "fddmimo/kernels.hpp"
#include "fddmimo/matrix_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace fddmimo;
using json = nlohmann::ordered_json;

namespace
{
    struct Globals
    {
        std::uint64_t seed = 1;
        bool seed_set = false;
        arma::uword trials = 0; // 0: keep the config value
        std::string kernels = "auto";
    };

    json complex_to_json(const arma::cx_vec &v)
    {
        json a = json::array();
        for (const cx &z : v)
            a.push_back({z.real(), z.imag()});
        return a;
    }

    arma::cx_vec complex_from_json(const json &a, const char *what)
    {
        if (!a.is_array())
            throw DomainError(std::string(what) + " must be an array of [re, im] pairs");
        arma::cx_vec v(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            if (!a[i].is_array() || a[i].size() != 2)
                throw DomainError(std::string(what) + "[" + std::to_string(i) + "] is not a [re, im] pair");
            v(i) = cx(a[i][0].get<double>(), a[i][1].get<double>());
        }
        return v;
    }

    std::ifstream open_in(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw DomainError("cannot open " + path);
        return f;
    }

    json read_json(const std::string &path)
    {
        auto f = open_in(path);
        try
        {
            return json::parse(f);
        }
        catch (const json::parse_error &e)
        {
            throw DomainError(path + ": " + e.what());
        }
    }

    struct Observation
    {
        arma::cx_vec y;
        double noise_var = 0.0;
        std::optional<arma::cx_vec> h;
    };

    Observation read_observation(const std::string &path)
    {
        const json j = read_json(path);
        Observation o;
        if (!j.contains("y") || !j.contains("sigma2"))
            throw DomainError(path + ": observation needs 'y' and 'sigma2'");
        o.y = complex_from_json(j.at("y"), "y");
        o.noise_var = j.at("sigma2").get<double>();
        if (j.contains("h"))
            o.h = complex_from_json(j.at("h"), "h");
        return o;
    }

    // Writes to `path`, or stdout for "-".
    template <class F>
    void with_output(const std::string &path, F &&write)
    {
        if (path == "-")
        {
            write(std::cout);
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw DomainError("cannot write " + path);
        write(f);
    }

    json nullable(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

    void apply_overrides(ExperimentConfig &c, const Globals &g)
    {
        if (g.seed_set)
            c.seed = g.seed;
        if (g.trials > 0)
            c.trials = g.trials;
    }

    int run_and_write(ExperimentConfig c, const Globals &g, const std::string &out)
    {
        apply_overrides(c, g);
        const auto records = run_experiment(c);
        write_outputs(c, records, out);
        for (const auto &row : summarize(records))
            std::cout << row.estimator << "  " << to_string(c.sweep_axis) << "=" << row.sweep_value
                      << "  mean " << row.mean_nmse << "  median " << row.median_nmse << "  (+/- "
                      << row.stderr_nmse << ")\n";
        std::cout << records.size() << " records written to " << out << "\n";
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"fddmimo: pilot design and channel estimation for large antenna arrays"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed (overrides the config)")
        ->each([&](const std::string &) { g.seed_set = true; });
    app.add_option("--trials", g.trials, "Trials per sweep point (overrides the config)")
        ->check(CLI::PositiveNumber);
    app.add_option("--kernels", g.kernels, "Vector kernel backend")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    // simulate
    auto *sim = app.add_subcommand("simulate", "Run an experiment described by a JSON config");
    std::string sim_config, sim_out = "results";
    sim->add_option("--config", sim_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "Output directory");

    // repro
    auto *repro = app.add_subcommand("repro", "Run a bundled figure configuration");
    std::string repro_target, repro_out;
    bool repro_print = false;
    repro->add_option("target", repro_target, "Figure target")->required()->check(CLI::IsMember(repro_targets()));
    repro->add_option("--out", repro_out, "Output directory (default results/<target>)");
    repro->add_flag("--print-config", repro_print, "Print the resolved config and exit");

    // covariance
    auto *cov = app.add_subcommand("covariance", "Build a one-ring covariance matrix");
    std::string cov_kind = "parametric", cov_aoa = "uniform", cov_out = "-";
    arma::uword cov_M = 64, cov_paths = 100, cov_samples = 100000;
    double cov_mean = 30.0, cov_spread = 18.0, cov_spacing = 0.5, cov_power = 1.0;
    cov->add_option("--kind", cov_kind, "numeric (sample average) or parametric (sinc model)")
        ->check(CLI::IsMember({"numeric", "parametric"}));
    cov->add_option("--antennas,-M", cov_M, "Number of antennas")->check(CLI::PositiveNumber);
    cov->add_option("--spacing", cov_spacing, "Element spacing over wavelength");
    cov->add_option("--mean-deg", cov_mean, "Mean AoA in degrees");
    cov->add_option("--spread-deg", cov_spread, "Spread in degrees (uniform half-width or Gaussian std)");
    cov->add_option("--aoa", cov_aoa, "AoA law for the numeric kind")->check(CLI::IsMember({"uniform", "gaussian"}));
    cov->add_option("--samples", cov_samples, "AoA draws for the numeric kind")->check(CLI::PositiveNumber);
    cov->add_option("--path-power", cov_power, "Path power xi^2");
    cov->add_option("--out", cov_out, "Output file, - for stdout");

    // pilot
    auto *pil = app.add_subcommand("pilot", "Generate a pilot matrix and print a JSON summary");
    std::string pil_kind = "optimal", pil_out = "pilot.txt";
    std::vector<std::string> pil_covs;
    arma::uword pil_T = 20, pil_M = 64;
    double pil_power = 0.0, pil_noise = 0.1, pil_sector_frac = 0.99;
    pil->add_option("--kind", pil_kind, "random, optimal or overlayed")
        ->check(CLI::IsMember({"random", "optimal", "overlayed"}));
    pil->add_option("-T,--symbols", pil_T, "Pilot length (ignored for overlayed)")->check(CLI::PositiveNumber);
    pil->add_option("--antennas,-M", pil_M, "Antennas (random kind only)")->check(CLI::PositiveNumber);
    pil->add_option("--covariance", pil_covs, "Covariance file(s); one per user for overlayed")
        ->check(CLI::ExistingFile);
    pil->add_option("--power", pil_power, "Power budget (default: T)");
    pil->add_option("--noise-var", pil_noise, "Noise variance used for water-filling");
    pil->add_option("--sector-energy", pil_sector_frac, "Energy fraction defining each user's DFT sector");
    pil->add_option("--out", pil_out, "Pilot matrix output file");

    // observe
    auto *obs_cmd = app.add_subcommand("observe", "Draw a one-ring channel and its noisy observation");
    std::string obs_pilot, obs_out = "-", obs_aoa = "uniform";
    double obs_mean = 30.0, obs_spread = 18.0, obs_snr = 20.0, obs_spacing = 0.5;
    arma::uword obs_paths = 100;
    obs_cmd->add_option("--pilot", obs_pilot, "Pilot matrix file")->required()->check(CLI::ExistingFile);
    obs_cmd->add_option("--mean-deg", obs_mean, "Mean AoA in degrees");
    obs_cmd->add_option("--spread-deg", obs_spread, "AoA spread in degrees");
    obs_cmd->add_option("--aoa", obs_aoa, "AoA law")->check(CLI::IsMember({"uniform", "gaussian"}));
    obs_cmd->add_option("--paths", obs_paths, "Number of paths")->check(CLI::PositiveNumber);
    obs_cmd->add_option("--spacing", obs_spacing, "Element spacing over wavelength");
    obs_cmd->add_option("--snr-db", obs_snr, "SNR 10 log10(||Xh||^2 / (T sigma^2))");
    obs_cmd->add_option("--out", obs_out, "Observation JSON, - for stdout");

    // estimate
    auto *est = app.add_subcommand("estimate", "MMSE or FISTA estimate from a pilot and an observation");
    std::string est_pilot, est_cov, est_obs, est_kind = "mmse";
    est->add_option("--pilot", est_pilot, "Pilot matrix file")->required()->check(CLI::ExistingFile);
    est->add_option("--covariance", est_cov, "Covariance file (mmse)")->check(CLI::ExistingFile);
    est->add_option("--observation", est_obs, "Observation JSON {y, sigma2[, h]}")
        ->required()
        ->check(CLI::ExistingFile);
    est->add_option("--estimator", est_kind, "mmse or fista")->check(CLI::IsMember({"mmse", "fista"}));

    // ec-mmse
    auto *ec = app.add_subcommand("ec-mmse", "Estimated-covariance MMSE from a pilot and an observation");
    std::string ec_pilot, ec_obs;
    double ec_frac = 0.95, ec_spacing = 0.5, ec_reg_scale = 1.0;
    ec->add_option("--pilot", ec_pilot, "Pilot matrix file")->required()->check(CLI::ExistingFile);
    ec->add_option("--observation", ec_obs, "Observation JSON {y, sigma2[, h]}")
        ->required()
        ->check(CLI::ExistingFile);
    ec->add_option("--energy-fraction", ec_frac, "Energy captured by the spread window");
    ec->add_option("--spacing", ec_spacing, "Element spacing over wavelength");
    ec->add_option("--regularization-scale", ec_reg_scale, "Multiplier on sigma sqrt(2 ln M)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (g.kernels == "scalar")
            kernels::set_backend(kernels::Backend::Scalar);
        else if (g.kernels == "avx2")
            kernels::set_backend(kernels::Backend::Avx2);

        Rng rng(g.seed);

        if (*sim)
            return run_and_write(load_config(sim_config), g, sim_out);

        if (*repro)
        {
            ExperimentConfig c = repro_config(repro_target);
            if (repro_print)
            {
                apply_overrides(c, g);
                std::cout << config_to_json(c) << '\n';
                return 0;
            }
            return run_and_write(c, g, repro_out.empty() ? "results/" + repro_target : repro_out);
        }

        if (*cov)
        {
            const ArrayGeometry geometry(cov_M, cov_spacing);
            const AoaDistribution aoa{cov_aoa == "gaussian" ? AoaKind::Gaussian : AoaKind::Uniform,
                                      deg2rad(cov_mean), deg2rad(cov_spread)};
            const CovarianceMatrix R =
                cov_kind == "numeric"
                    ? covariance_numeric(OneRingModel{geometry, aoa, cov_paths, cov_power}, cov_samples, rng)
                    : covariance_parametric(geometry, aoa.mean_angle, aoa.spread, cov_power);
            with_output(cov_out, [&](std::ostream &os) { write_covariance(os, R); });
            return 0;
        }

        if (*pil)
        {
            json summary;
            if (pil_kind == "random")
            {
                const double P = pil_power > 0 ? pil_power : static_cast<double>(pil_T);
                const PilotMatrix X = random_pilot(pil_T, pil_M, P, rng);
                with_output(pil_out, [&](std::ostream &os) { write_pilot(os, X, pil_kind); });
                summary = {{"T", X.num_symbols()}, {"M", X.num_antennas()}, {"power", X.power()},
                           {"water_level", nullptr}, {"active_set", json::array()}};
            }
            else if (pil_kind == "optimal")
            {
                if (pil_covs.size() != 1)
                    throw DomainError("pilot --kind optimal needs exactly one --covariance");
                auto f = open_in(pil_covs.front());
                const CovarianceMatrix R = read_covariance(f);
                const double P = pil_power > 0 ? pil_power : static_cast<double>(pil_T);
                const DesignedPilot d = design_single_user_pilot(R, pil_T, pil_noise, P);
                with_output(pil_out, [&](std::ostream &os) { write_pilot(os, d.pilot, pil_kind); });
                summary = {{"T", d.pilot.num_symbols()},
                           {"M", d.pilot.num_antennas()},
                           {"power", d.pilot.power()},
                           {"water_level", d.allocation.water_level},
                           {"active_set", std::vector<arma::uword>(d.allocation.active_set.begin(),
                                                                   d.allocation.active_set.end())}};
            }
            else
            {
                if (pil_covs.size() < 2)
                    throw DomainError("pilot --kind overlayed needs one --covariance per user (at least two)");
                std::vector<UserSector> users;
                arma::uword T = 0;
                for (const auto &path : pil_covs)
                {
                    auto f = open_in(path);
                    const CovarianceMatrix R = read_covariance(f);
                    const DftBasis basis(R.size(), DftOrdering::Centered);
                    SectorSelection s = matched_dft_sector(R, basis, effective_rank(R, pil_sector_frac));
                    arma::vec profile = sector_energy_profile(R, s);
                    T = std::max<arma::uword>(T, s.indices.n_elem);
                    users.push_back(UserSector{std::move(s), std::move(profile)});
                }
                const double P = pil_power > 0 ? pil_power : static_cast<double>(T);
                const OverlayedPilot ov = overlayed_pilot(users, P, pil_noise);
                with_output(pil_out, [&](std::ostream &os) { write_pilot(os, ov.pilot, pil_kind); });
                json levels = json::array(), active = json::array();
                for (const auto &a : ov.allocations)
                {
                    levels.push_back(a.water_level);
                    active.push_back(std::vector<arma::uword>(a.active_set.begin(), a.active_set.end()));
                }
                summary = {{"T", ov.pilot.num_symbols()}, {"M", ov.pilot.num_antennas()}, {"power", ov.pilot.power()},
                           {"water_level", levels}, {"active_set", active}};
            }
            std::cout << summary.dump() << '\n';
            return 0;
        }

        if (*obs_cmd)
        {
            auto f = open_in(obs_pilot);
            const PilotMatrix X = read_pilot(f);
            const OneRingModel model{ArrayGeometry(X.num_antennas(), obs_spacing),
                                     AoaDistribution{obs_aoa == "gaussian" ? AoaKind::Gaussian : AoaKind::Uniform,
                                                     deg2rad(obs_mean), deg2rad(obs_spread)},
                                     obs_paths, 1.0};
            model.validate();
            const arma::cx_vec h = draw_channel(model, rng);
            const double noise_var = calibrate_noise(X, h, obs_snr);
            const arma::cx_vec y = X.entries() * h + complex_gaussian_vec(rng, X.num_symbols(), noise_var);
            const json j = {{"y", complex_to_json(y)}, {"sigma2", noise_var}, {"h", complex_to_json(h)}};
            with_output(obs_out, [&](std::ostream &os) { os << j.dump() << '\n'; });
            return 0;
        }

        if (*est)
        {
            auto pf = open_in(est_pilot);
            const ObservationModel model{read_pilot(pf), 0.0};
            const Observation o = read_observation(est_obs);
            const ObservationModel obs{model.pilot, o.noise_var};
            json out = {{"estimator", est_kind}};
            arma::cx_vec h_hat;
            std::optional<double> mse;
            if (est_kind == "mmse")
            {
                if (est_cov.empty())
                    throw DomainError("estimate --estimator mmse needs --covariance");
                auto cf = open_in(est_cov);
                const CovarianceMatrix R = read_covariance(cf);
                h_hat = mmse_estimate(R, obs, o.y);
                mse = mmse_mse_closed_form(R, obs);
            }
            else
            {
                const arma::uword M = obs.pilot.num_antennas();
                const SparseRecoveryConfig sc{.regularization = default_regularization(o.noise_var, M),
                                              .basis = DftBasis(M, DftOrdering::Natural)};
                h_hat = fista_recover(obs, o.y, sc).channel;
            }
            out["nmse"] = o.h ? json(nmse(h_hat, *o.h)) : json(nullptr);
            out["mse_closed_form"] = nullable(mse);
            out["h_hat"] = complex_to_json(h_hat);
            std::cout << out.dump() << '\n';
            return 0;
        }

        if (*ec)
        {
            auto pf = open_in(ec_pilot);
            PilotMatrix X = read_pilot(pf);
            const Observation o = read_observation(ec_obs);
            const ObservationModel obs{std::move(X), o.noise_var};
            const arma::uword M = obs.pilot.num_antennas();
            const SparseRecoveryConfig sc{.regularization = default_regularization(o.noise_var, M, ec_reg_scale),
                                          .basis = DftBasis(M, DftOrdering::Natural)};
            const EcMmseResult r = ec_mmse_estimate(obs, o.y, sc, ArrayGeometry(M, ec_spacing), ec_frac);
            const json out = {
                {"theta_hat_deg", rad2deg(r.angles.mean_angle)},
                {"nu_hat_deg", rad2deg(r.angles.spread)},
                {"nmse", o.h ? json(nmse(r.channel, *o.h)) : json(nullptr)},
                {"nmse_fista_baseline", o.h ? json(nmse(r.recovery.channel, *o.h)) : json(nullptr)},
                {"h_hat", complex_to_json(r.channel)},
            };
            std::cout << out.dump() << '\n';
            return 0;
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
