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
#include "fddmimo/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fddmimo
{
    using nlohmann::json;

    // ---------------------------------------------------------------- enums

    namespace
    {
        template <class E, std::size_t N>
        std::string enum_name(E v, const std::pair<E, const char *> (&table)[N])
        {
            for (const auto &[e, name] : table)
                if (e == v)
                    return name;
            return "unknown";
        }

        template <class E, std::size_t N>
        E enum_parse(const std::string &s, const std::pair<E, const char *> (&table)[N], const char *what)
        {
            for (const auto &[e, name] : table)
                if (s == name)
                    return e;
            std::string known;
            for (const auto &entry : table)
                known += std::string(known.empty() ? "" : ", ") + entry.second;
            throw DomainError(std::string("unknown ") + what + " '" + s + "' (expected one of: " + known + ")");
        }

        const std::pair<Scenario, const char *> scenario_names[] = {
            {Scenario::Fig1aExactRank, "fig1a_exact_rank"}, {Scenario::Fig1bOneRing, "fig1b_one_ring"},
            {Scenario::Fig2SnrSweep, "fig2_snr_sweep"},     {Scenario::Fig2TSweep, "fig2_t_sweep"},
            {Scenario::Fig4Robustness, "fig4_robustness"},  {Scenario::Fig5GaussianAoa, "fig5_gaussian_aoa"},
            {Scenario::MultiUser, "multi_user"}};

        const std::pair<PilotKind, const char *> pilot_names[] = {
            {PilotKind::Random, "random"}, {PilotKind::Optimal, "optimal"}, {PilotKind::Overlayed, "overlayed"}};

        const std::pair<SweepAxis, const char *> axis_names[] = {
            {SweepAxis::InvNoiseDb, "inv_noise_db"},         {SweepAxis::SnrDb, "snr_db"},
            {SweepAxis::T, "t"},                             {SweepAxis::MeanOffsetDeg, "mean_offset_deg"},
            {SweepAxis::SpreadOffsetDeg, "spread_offset_deg"}, {SweepAxis::NumAntennas, "num_antennas"}};

        const std::pair<AoaKind, const char *> aoa_names[] = {{AoaKind::Uniform, "uniform"},
                                                               {AoaKind::Gaussian, "gaussian"}};
    }

    std::string to_string(Scenario s) { return enum_name(s, scenario_names); }
    std::string to_string(PilotKind k) { return enum_name(k, pilot_names); }
    std::string to_string(SweepAxis a) { return enum_name(a, axis_names); }
    Scenario parse_scenario(const std::string &s) { return enum_parse(s, scenario_names, "scenario"); }
    PilotKind parse_pilot_kind(const std::string &s) { return enum_parse(s, pilot_names, "pilot kind"); }
    SweepAxis parse_sweep_axis(const std::string &s) { return enum_parse(s, axis_names, "sweep axis"); }

    // --------------------------------------------------------------- config

    namespace
    {
        bool is_fig1(Scenario s) { return s == Scenario::Fig1aExactRank || s == Scenario::Fig1bOneRing; }

        bool is_fig2_family(Scenario s)
        {
            return s == Scenario::Fig2SnrSweep || s == Scenario::Fig2TSweep || s == Scenario::Fig5GaussianAoa;
        }

        std::vector<std::string> allowed_estimators(Scenario s)
        {
            if (is_fig1(s))
                return {"mmse_random", "mmse_optimal"};
            if (is_fig2_family(s))
                return {"ec_mmse", "fista", "mmse_true_cov"};
            if (s == Scenario::Fig4Robustness)
                return {"mmse_perturbed", "mmse_true_cov"};
            return {"overlay", "single_user_optimal"};
        }

        std::vector<SweepAxis> allowed_axes(Scenario s)
        {
            switch (s)
            {
            case Scenario::Fig1aExactRank:
            case Scenario::Fig1bOneRing:
                return {SweepAxis::InvNoiseDb, SweepAxis::T};
            case Scenario::Fig2SnrSweep:
                return {SweepAxis::SnrDb};
            case Scenario::Fig2TSweep:
                return {SweepAxis::T};
            case Scenario::Fig5GaussianAoa:
                return {SweepAxis::SnrDb, SweepAxis::T};
            case Scenario::Fig4Robustness:
                return {SweepAxis::MeanOffsetDeg, SweepAxis::SpreadOffsetDeg};
            case Scenario::MultiUser:
                return {SweepAxis::NumAntennas};
            }
            return {};
        }

        std::vector<std::string> resolved_estimators(const ExperimentConfig &c)
        {
            if (!c.estimators.empty())
                return c.estimators;
            if (is_fig1(c.scenario))
                return {c.pilot_kind == PilotKind::Optimal ? "mmse_optimal" : "mmse_random"};
            return allowed_estimators(c.scenario);
        }

        bool is_integral(double v) { return std::isfinite(v) && v == std::floor(v); }
    }

    void ExperimentConfig::validate() const
    {
        const std::string who = "config (" + to_string(scenario) + "): ";
        if (trials < 1)
            throw DomainError(who + "trials must be >= 1");
        if (sweep_grid.empty())
            throw DomainError(who + "sweep grid is empty");
        if (!std::is_sorted(sweep_grid.begin(), sweep_grid.end()))
            throw DomainError(who + "sweep grid must be sorted ascending");
        for (double v : sweep_grid)
            if (!std::isfinite(v))
                throw DomainError(who + "sweep grid holds a non-finite value");

        const auto axes = allowed_axes(scenario);
        if (std::find(axes.begin(), axes.end(), sweep_axis) == axes.end())
            throw DomainError(who + "sweep axis '" + to_string(sweep_axis) + "' is not supported by this scenario");
        if (sweep_axis == SweepAxis::T || sweep_axis == SweepAxis::NumAntennas)
            for (double v : sweep_grid)
                if (!is_integral(v) || v < 1)
                    throw DomainError(who + "sweep values on axis '" + to_string(sweep_axis) +
                                      "' must be positive integers");

        (void)ArrayGeometry(num_antennas, spacing_ratio);
        AoaDistribution{aoa_kind, deg2rad(mean_angle_deg), deg2rad(spread_deg)}.validate();
        if (num_paths < 1)
            throw DomainError(who + "num_paths must be >= 1");
        if (!(path_power > 0.0))
            throw DomainError(who + "path_power must be > 0");
        if (t_values.empty())
            throw DomainError(who + "t_values is empty");
        for (auto t : t_values)
            if (t < 1)
                throw DomainError(who + "t_values entries must be >= 1");
        if (power_budget && !(*power_budget > 0.0))
            throw DomainError(who + "power_budget must be > 0");
        if (!(noise_var > 0.0))
            throw DomainError(who + "noise_var must be > 0");
        if (!std::isfinite(snr_db))
            throw DomainError(who + "snr_db must be finite");
        if (!(energy_fraction > 0.0 && energy_fraction <= 1.0))
            throw DomainError(who + "energy_fraction must lie in (0, 1]");
        if (!(sector_energy_fraction > 0.0 && sector_energy_fraction <= 1.0))
            throw DomainError(who + "sector_energy_fraction must lie in (0, 1]");
        if (!(fista.regularization_scale > 0.0) || fista.max_iters < 1 || !(fista.tolerance > 0.0))
            throw DomainError(who + "fista settings must be positive");

        if (scenario == Scenario::Fig1aExactRank && (exact_rank < 1 || exact_rank > num_antennas))
            throw DomainError(who + "exact_rank must lie in 1..num_antennas");
        if (scenario != Scenario::Fig1aExactRank && scenario != Scenario::MultiUser && covariance_samples < 1)
            throw DomainError(who + "covariance_samples must be >= 1");
        if (scenario == Scenario::Fig5GaussianAoa && aoa_kind != AoaKind::Gaussian)
            throw DomainError(who + "the Gaussian-AoA scenario needs aoa.kind = gaussian");

        if (scenario == Scenario::MultiUser)
        {
            if (pilot_kind != PilotKind::Overlayed)
                throw DomainError(who + "multi_user needs pilot_kind = overlayed");
            if (users.size() < 1)
                throw DomainError(who + "multi_user needs at least one user");
            for (const auto &u : users)
                AoaDistribution{AoaKind::Uniform, deg2rad(u.mean_angle_deg), deg2rad(u.spread_deg)}.validate();
        }
        else if (pilot_kind == PilotKind::Overlayed)
            throw DomainError(who + "overlayed pilots belong to the multi_user scenario");
        else if (!is_fig1(scenario) && pilot_kind != PilotKind::Random)
            throw DomainError(who + "this scenario trains with random pilots");

        const auto allowed = allowed_estimators(scenario);
        const auto chosen = resolved_estimators(*this);
        for (std::size_t i = 0; i < chosen.size(); ++i)
        {
            if (std::find(allowed.begin(), allowed.end(), chosen[i]) == allowed.end())
                throw DomainError(who + "estimator '" + chosen[i] + "' is not available in this scenario");
            if (std::find(chosen.begin(), chosen.begin() + static_cast<long>(i), chosen[i]) !=
                chosen.begin() + static_cast<long>(i))
                throw DomainError(who + "estimator '" + chosen[i] + "' listed twice");
        }
    }

    namespace
    {
        template <class T>
        void take(json &j, const char *key, T &out)
        {
            auto it = j.find(key);
            if (it == j.end())
                return;
            try
            {
                out = it->get<T>();
            }
            catch (const json::exception &e)
            {
                throw DomainError(std::string("config: bad value for '") + key + "': " + e.what());
            }
            j.erase(it);
        }

        void reject_leftovers(const json &j, const std::string &where)
        {
            if (!j.empty())
                throw DomainError("config: unknown key '" + j.begin().key() + "' in " + where);
        }

        json object_at(json &j, const char *key)
        {
            auto it = j.find(key);
            if (it == j.end())
                return json::object();
            if (!it->is_object())
                throw DomainError(std::string("config: '") + key + "' must be an object");
            json sub = *it;
            j.erase(it);
            return sub;
        }
    }

    ExperimentConfig parse_config(const std::string &json_text)
    {
        json j;
        try
        {
            j = json::parse(json_text);
        }
        catch (const json::parse_error &e)
        {
            throw DomainError(std::string("config: invalid JSON: ") + e.what());
        }
        if (!j.is_object())
            throw DomainError("config: top level must be an object");

        ExperimentConfig c;
        std::string s;
        if (s.clear(), take(j, "scenario", s), !s.empty())
            c.scenario = parse_scenario(s);
        else
            throw DomainError("config: 'scenario' is required");

        take(j, "num_antennas", c.num_antennas);
        take(j, "spacing_ratio", c.spacing_ratio);
        json aoa = object_at(j, "aoa");
        if (s.clear(), take(aoa, "kind", s), !s.empty())
            c.aoa_kind = enum_parse(s, aoa_names, "AoA kind");
        take(aoa, "mean_angle_deg", c.mean_angle_deg);
        take(aoa, "spread_deg", c.spread_deg);
        reject_leftovers(aoa, "aoa");
        take(j, "num_paths", c.num_paths);
        take(j, "path_power", c.path_power);

        if (s.clear(), take(j, "pilot_kind", s), !s.empty())
            c.pilot_kind = parse_pilot_kind(s);
        else if (c.scenario == Scenario::MultiUser)
            c.pilot_kind = PilotKind::Overlayed;
        take(j, "t_values", c.t_values);

        json sweep = object_at(j, "sweep");
        if (s.clear(), take(sweep, "axis", s), !s.empty())
            c.sweep_axis = parse_sweep_axis(s);
        else
            throw DomainError("config: 'sweep.axis' is required");
        take(sweep, "grid", c.sweep_grid);
        reject_leftovers(sweep, "sweep");

        take(j, "trials", c.trials);
        take(j, "seed", c.seed);
        if (auto it = j.find("power_budget"); it != j.end())
        {
            if (!it->is_null())
                c.power_budget = it->get<double>();
            j.erase(it);
        }
        take(j, "noise_var", c.noise_var);
        take(j, "snr_db", c.snr_db);
        take(j, "estimators", c.estimators);
        take(j, "covariance_samples", c.covariance_samples);
        take(j, "exact_rank", c.exact_rank);
        take(j, "energy_fraction", c.energy_fraction);

        json fista = object_at(j, "fista");
        take(fista, "regularization_scale", c.fista.regularization_scale);
        take(fista, "max_iters", c.fista.max_iters);
        take(fista, "tolerance", c.fista.tolerance);
        reject_leftovers(fista, "fista");

        take(j, "histogram_bins", c.histogram_bins);
        if (auto it = j.find("users"); it != j.end())
        {
            if (!it->is_array())
                throw DomainError("config: 'users' must be an array");
            for (json u : *it)
            {
                UserSpec spec;
                take(u, "mean_angle_deg", spec.mean_angle_deg);
                take(u, "spread_deg", spec.spread_deg);
                reject_leftovers(u, "users[]");
                c.users.push_back(spec);
            }
            j.erase(it);
        }
        take(j, "sector_energy_fraction", c.sector_energy_fraction);
        reject_leftovers(j, "config");

        c.validate();
        return c;
    }

    ExperimentConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw DomainError("config: cannot open " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }

    namespace
    {
        json config_json(const ExperimentConfig &c)
        {
            json j;
            j["scenario"] = to_string(c.scenario);
            j["num_antennas"] = c.num_antennas;
            j["spacing_ratio"] = c.spacing_ratio;
            j["aoa"] = {{"kind", enum_name(c.aoa_kind, aoa_names)},
                        {"mean_angle_deg", c.mean_angle_deg},
                        {"spread_deg", c.spread_deg}};
            j["num_paths"] = c.num_paths;
            j["path_power"] = c.path_power;
            j["pilot_kind"] = to_string(c.pilot_kind);
            j["t_values"] = c.t_values;
            j["sweep"] = {{"axis", to_string(c.sweep_axis)}, {"grid", c.sweep_grid}};
            j["trials"] = c.trials;
            j["seed"] = c.seed;
            j["power_budget"] = c.power_budget ? json(*c.power_budget) : json(nullptr);
            j["noise_var"] = c.noise_var;
            j["snr_db"] = c.snr_db;
            j["estimators"] = resolved_estimators(c);
            j["covariance_samples"] = c.covariance_samples;
            j["exact_rank"] = c.exact_rank;
            j["energy_fraction"] = c.energy_fraction;
            j["fista"] = {{"regularization_scale", c.fista.regularization_scale},
                          {"max_iters", c.fista.max_iters},
                          {"tolerance", c.fista.tolerance}};
            j["histogram_bins"] = c.histogram_bins;
            j["users"] = json::array();
            for (const auto &u : c.users)
                j["users"].push_back({{"mean_angle_deg", u.mean_angle_deg}, {"spread_deg", u.spread_deg}});
            j["sector_energy_fraction"] = c.sector_energy_fraction;
            return j;
        }
    }

    std::string config_to_json(const ExperimentConfig &config) { return config_json(config).dump(2); }

    std::vector<std::string> estimator_tags(const ExperimentConfig &config)
    {
        const auto base = resolved_estimators(config);
        const bool suffix = config.scenario != Scenario::MultiUser && config.sweep_axis != SweepAxis::T &&
                            config.t_values.size() > 1;
        if (!suffix)
            return base;
        std::vector<std::string> tags;
        for (auto T : config.t_values)
            for (const auto &e : base)
                tags.push_back(e + "_T" + std::to_string(T));
        return tags;
    }

    // ------------------------------------------------------- noise and seeds

    double calibrate_noise(const PilotMatrix &X, const arma::cx_vec &h, double snr_db)
    {
        if (h.n_elem != X.num_antennas())
            throw DomainError("calibrate_noise: channel length does not match the pilot");
        const double signal = std::pow(arma::norm(X.entries() * h), 2);
        if (!(signal > 0.0))
            throw DomainError("calibrate_noise: Xh = 0");
        return signal / (static_cast<double>(X.num_symbols()) * std::pow(10.0, snr_db / 10.0));
    }

    double measured_snr_db(const PilotMatrix &X, const arma::cx_vec &h, double noise_var)
    {
        const double signal = std::pow(arma::norm(X.entries() * h), 2);
        return 10.0 * std::log10(signal / (static_cast<double>(X.num_symbols()) * noise_var));
    }

    std::uint64_t trial_seed(std::uint64_t master, std::uint64_t sweep_index, std::uint64_t trial_index)
    {
        std::uint64_t s = mix64(master);
        s = mix64(s ^ (sweep_index + 0x9e3779b97f4a7c15ULL));
        return mix64(s ^ (trial_index + 0xd1b54a32d192ed03ULL));
    }

    // ----------------------------------------------------------- experiment

    namespace
    {
        // Seed stream for quantities shared by all trials of a run.
        constexpr std::uint64_t shared_stream = 0x636f76617269616eULL;

        struct UserSetup
        {
            CovarianceMatrix R;
            arma::cx_mat R_sqrt;
        };

        // Everything one sweep point needs that does not depend on the trial.
        struct PointSetup
        {
            double value = 0.0;
            std::optional<CovarianceMatrix> perturbed; // Fig4
            // MultiUser
            std::vector<UserSetup> users;
            std::optional<PilotMatrix> overlay;
            std::vector<PilotMatrix> single_user;
            double point_power = 0.0;
        };

        struct RunContext
        {
            const ExperimentConfig &cfg;
            std::vector<std::string> base_estimators;
            std::vector<std::string> tags;
            bool tag_suffix = false;
            std::optional<ArrayGeometry> geometry;
            std::optional<OneRingModel> model;
            std::optional<CovarianceMatrix> true_cov; // numerically averaged one-ring R
            std::optional<DftBasis> natural_basis;
            std::vector<PointSetup> points;
        };

        bool wants(const RunContext &ctx, const char *name)
        {
            return std::find(ctx.base_estimators.begin(), ctx.base_estimators.end(), name) !=
                   ctx.base_estimators.end();
        }

        double budget_for(const ExperimentConfig &c, arma::uword T)
        {
            return c.power_budget ? *c.power_budget : static_cast<double>(T);
        }

        std::string tag_for(const RunContext &ctx, const std::string &est, arma::uword T)
        {
            return ctx.tag_suffix ? est + "_T" + std::to_string(T) : est;
        }

        std::vector<arma::uword> pilot_lengths(const RunContext &ctx, double value)
        {
            if (ctx.cfg.sweep_axis == SweepAxis::T)
                return {static_cast<arma::uword>(value)};
            return ctx.cfg.t_values;
        }

        arma::cx_vec observe(const PilotMatrix &X, const arma::cx_vec &h, const arma::cx_vec &w)
        {
            return X.entries() * h + w;
        }

        void setup_points(RunContext &ctx)
        {
            const auto &c = ctx.cfg;
            for (double v : c.sweep_grid)
            {
                PointSetup p;
                p.value = v;
                if (c.scenario == Scenario::Fig4Robustness)
                {
                    const double mean_off = c.sweep_axis == SweepAxis::MeanOffsetDeg ? deg2rad(v) : 0.0;
                    const double spread_off = c.sweep_axis == SweepAxis::SpreadOffsetDeg ? deg2rad(v) : 0.0;
                    p.perturbed = perturbed_covariance(deg2rad(c.mean_angle_deg), deg2rad(c.spread_deg), mean_off,
                                                       spread_off, *ctx.geometry);
                }
                else if (c.scenario == Scenario::MultiUser)
                {
                    const ArrayGeometry g(static_cast<arma::uword>(v), c.spacing_ratio);
                    const DftBasis basis(g.num_antennas(), DftOrdering::Centered);
                    std::vector<UserSector> sectors;
                    for (const auto &u : c.users)
                    {
                        CovarianceMatrix R = covariance_parametric(g, deg2rad(u.mean_angle_deg),
                                                                   deg2rad(u.spread_deg), c.path_power);
                        const arma::uword k = effective_rank(R, c.sector_energy_fraction);
                        SectorSelection sector = matched_dft_sector(R, basis, k);
                        arma::vec profile = sector_energy_profile(R, sector);
                        sectors.push_back(UserSector{std::move(sector), std::move(profile)});
                        arma::cx_mat root = R.sqrt_matrix();
                        p.users.push_back(UserSetup{std::move(R), std::move(root)});
                    }
                    arma::uword T = 0;
                    for (const auto &s : sectors)
                        T = std::max<arma::uword>(T, s.sector.indices.n_elem);
                    p.point_power = budget_for(c, T);
                    OverlayedPilot ov = overlayed_pilot(sectors, p.point_power, c.noise_var);
                    p.overlay = ov.pilot;
                    const double share = p.point_power / static_cast<double>(c.users.size());
                    for (const auto &u : p.users)
                        p.single_user.push_back(optimal_pilot_single_user(u.R, T, c.noise_var, share));
                }
                ctx.points.push_back(std::move(p));
            }
        }

        RunContext make_context(const ExperimentConfig &c)
        {
            RunContext ctx{c, resolved_estimators(c), estimator_tags(c), false, {}, {}, {}, {}, {}};
            ctx.tag_suffix = c.scenario != Scenario::MultiUser && c.sweep_axis != SweepAxis::T &&
                             c.t_values.size() > 1;
            if (c.scenario != Scenario::MultiUser)
            {
                ctx.geometry.emplace(c.num_antennas, c.spacing_ratio);
                ctx.model = OneRingModel{*ctx.geometry,
                                         AoaDistribution{c.aoa_kind, deg2rad(c.mean_angle_deg), deg2rad(c.spread_deg)},
                                         c.num_paths, c.path_power};
                ctx.model->validate();
            }
            const bool need_true_cov = c.scenario == Scenario::Fig1bOneRing || wants(ctx, "mmse_true_cov");
            if (need_true_cov)
            {
                Rng rng(mix64(c.seed ^ shared_stream));
                ctx.true_cov = covariance_numeric(*ctx.model, c.covariance_samples, rng);
            }
            if (is_fig2_family(c.scenario))
                ctx.natural_basis.emplace(c.num_antennas, DftOrdering::Natural);
            setup_points(ctx);
            return ctx;
        }

        struct Emit
        {
            const RunContext &ctx;
            arma::uword sweep_index;
            arma::uword trial;
            std::uint64_t seed;
            std::vector<TrialRecord> &out;

            void operator()(const std::string &tag, double nmse_value, std::optional<double> mse = std::nullopt)
            {
                TrialRecord r;
                r.scenario = to_string(ctx.cfg.scenario);
                r.estimator = tag;
                r.sweep_axis = to_string(ctx.cfg.sweep_axis);
                r.sweep_value = ctx.points[sweep_index].value;
                r.sweep_index = sweep_index;
                r.trial = trial;
                r.seed = seed;
                r.nmse = nmse_value;
                r.mse_closed_form = mse;
                out.push_back(std::move(r));
            }
        };

        void trial_fig1(const RunContext &ctx, double value, Rng &rng, Emit &emit)
        {
            const auto &c = ctx.cfg;
            const arma::uword M = c.num_antennas;

            std::optional<CovarianceMatrix> drawn;
            arma::cx_vec h;
            if (c.scenario == Scenario::Fig1aExactRank)
            {
                const arma::cx_mat G = complex_gaussian_mat(rng, M, c.exact_rank, 1.0);
                arma::cx_mat R = G * G.t();
                R *= static_cast<double>(M) / std::real(arma::trace(R));
                R = 0.5 * (R + R.t());
                drawn.emplace(R);
                h = drawn->sqrt_matrix() * complex_gaussian_vec(rng, M, 1.0);
            }
            else
                h = draw_channel(*ctx.model, rng);
            const CovarianceMatrix &R = drawn ? *drawn : *ctx.true_cov;

            const double noise_var = c.sweep_axis == SweepAxis::InvNoiseDb ? std::pow(10.0, -value / 10.0) : c.noise_var;
            for (arma::uword T : pilot_lengths(ctx, value))
            {
                const double P = budget_for(c, T);
                const PilotMatrix X_random = random_pilot(T, M, P, rng);
                const arma::cx_vec w = complex_gaussian_vec(rng, T, noise_var);
                for (const auto &est : ctx.base_estimators)
                {
                    const ObservationModel obs{est == "mmse_random" ? X_random
                                                                     : optimal_pilot_single_user(R, T, noise_var, P),
                                               noise_var};
                    const arma::cx_vec y = observe(obs.pilot, h, w);
                    emit(tag_for(ctx, est, T), nmse(mmse_estimate(R, obs, y), h), mmse_mse_closed_form(R, obs));
                }
            }
        }

        void trial_fig2(const RunContext &ctx, double value, Rng &rng, Emit &emit)
        {
            const auto &c = ctx.cfg;
            const arma::uword M = c.num_antennas;
            const arma::cx_vec h = draw_channel(*ctx.model, rng);
            const double snr = c.sweep_axis == SweepAxis::SnrDb ? value : c.snr_db;

            for (arma::uword T : pilot_lengths(ctx, value))
            {
                const ObservationModel base{random_pilot(T, M, budget_for(c, T), rng), 1.0};
                const arma::cx_vec w_unit = complex_gaussian_vec(rng, T, 1.0);
                const double noise_var = calibrate_noise(base.pilot, h, snr);
                const ObservationModel obs{base.pilot, noise_var};
                const arma::cx_vec y = observe(obs.pilot, h, std::sqrt(noise_var) * w_unit);

                std::optional<SparseRecoveryResult> rec;
                if (wants(ctx, "fista") || wants(ctx, "ec_mmse"))
                {
                    SparseRecoveryConfig sc{
                        .regularization = default_regularization(noise_var, M, c.fista.regularization_scale),
                        .max_iters = c.fista.max_iters,
                        .tolerance = c.fista.tolerance,
                        .basis = *ctx.natural_basis,
                    };
                    rec = fista_recover(obs, y, sc);
                }
                for (const auto &est : ctx.base_estimators)
                {
                    const std::string tag = tag_for(ctx, est, T);
                    if (est == "fista")
                        emit(tag, nmse(rec->channel, h));
                    else if (est == "ec_mmse")
                    {
                        const EcMmseResult r = ec_mmse_estimate(obs, y, *rec, *ctx.geometry, c.energy_fraction);
                        emit(tag, nmse(r.channel, h));
                    }
                    else
                        emit(tag, nmse(mmse_estimate(*ctx.true_cov, obs, y), h),
                             mmse_mse_closed_form(*ctx.true_cov, obs));
                }
            }
        }

        void trial_fig4(const RunContext &ctx, const PointSetup &point, Rng &rng, Emit &emit)
        {
            const auto &c = ctx.cfg;
            const arma::uword M = c.num_antennas;
            const arma::cx_vec h = draw_channel(*ctx.model, rng);
            for (arma::uword T : c.t_values)
            {
                const ObservationModel obs{random_pilot(T, M, budget_for(c, T), rng), c.noise_var};
                const arma::cx_vec y = observe(obs.pilot, h, complex_gaussian_vec(rng, T, c.noise_var));
                for (const auto &est : ctx.base_estimators)
                {
                    const std::string tag = tag_for(ctx, est, T);
                    if (est == "mmse_perturbed")
                        emit(tag, nmse(ec_mmse_apply(*point.perturbed, obs, y), h));
                    else
                        emit(tag, nmse(mmse_estimate(*ctx.true_cov, obs, y), h),
                             mmse_mse_closed_form(*ctx.true_cov, obs));
                }
            }
        }

        void trial_multi_user(const RunContext &ctx, const PointSetup &point, Rng &rng, Emit &emit)
        {
            const auto &c = ctx.cfg;
            const arma::uword M = point.users.front().R.size();
            const arma::uword T = point.overlay->num_symbols();

            std::vector<arma::cx_vec> h, w;
            for (const auto &u : point.users)
            {
                h.push_back(u.R_sqrt * complex_gaussian_vec(rng, M, 1.0));
                w.push_back(complex_gaussian_vec(rng, T, c.noise_var));
            }
            for (const auto &est : ctx.base_estimators)
            {
                double err = 0.0, energy = 0.0, mse = 0.0;
                for (std::size_t k = 0; k < point.users.size(); ++k)
                {
                    const PilotMatrix &X = est == "overlay" ? *point.overlay : point.single_user[k];
                    const ObservationModel obs{X, c.noise_var};
                    const arma::cx_vec h_hat = mmse_estimate(point.users[k].R, obs, observe(X, h[k], w[k]));
                    err += std::pow(arma::norm(h_hat - h[k]), 2);
                    energy += std::pow(arma::norm(h[k]), 2);
                    mse += mmse_mse_closed_form(point.users[k].R, obs);
                }
                emit(est, err / energy, mse);
            }
        }

        void run_trial(const RunContext &ctx, arma::uword sweep_index, arma::uword trial, std::vector<TrialRecord> &out)
        {
            const std::uint64_t seed = trial_seed(ctx.cfg.seed, sweep_index, trial);
            Rng rng(seed);
            Emit emit{ctx, sweep_index, trial, seed, out};
            const PointSetup &point = ctx.points[sweep_index];
            switch (ctx.cfg.scenario)
            {
            case Scenario::Fig1aExactRank:
            case Scenario::Fig1bOneRing:
                trial_fig1(ctx, point.value, rng, emit);
                break;
            case Scenario::Fig2SnrSweep:
            case Scenario::Fig2TSweep:
            case Scenario::Fig5GaussianAoa:
                trial_fig2(ctx, point.value, rng, emit);
                break;
            case Scenario::Fig4Robustness:
                trial_fig4(ctx, point, rng, emit);
                break;
            case Scenario::MultiUser:
                trial_multi_user(ctx, point, rng, emit);
                break;
            }
        }
    }

    std::vector<TrialRecord> run_experiment(const ExperimentConfig &config)
    {
        config.validate();
        const RunContext ctx = make_context(config);

        std::vector<TrialRecord> records;
        records.reserve(config.sweep_grid.size() * config.trials * ctx.tags.size());
        for (arma::uword s = 0; s < config.sweep_grid.size(); ++s)
        {
            for (arma::uword t = 0; t < config.trials; ++t)
            {
                try
                {
                    run_trial(ctx, s, t, records);
                }
                catch (const std::exception &e)
                {
                    throw TrialError("scenario " + to_string(config.scenario) + ", sweep index " + std::to_string(s) +
                                     " (" + to_string(config.sweep_axis) + " = " +
                                     std::to_string(config.sweep_grid[s]) + "), trial " + std::to_string(t) +
                                     ", seed " + std::to_string(trial_seed(config.seed, s, t)) + ": " + e.what());
                }
            }
        }

        // Emission order within a trial follows the tag list; make that explicit
        // so the ordering contract does not hinge on the trial functions.
        std::map<std::string, std::size_t> rank;
        for (std::size_t i = 0; i < ctx.tags.size(); ++i)
            rank[ctx.tags[i]] = i;
        std::stable_sort(records.begin(), records.end(), [&](const TrialRecord &a, const TrialRecord &b) {
            if (a.sweep_index != b.sweep_index)
                return a.sweep_index < b.sweep_index;
            if (a.trial != b.trial)
                return a.trial < b.trial;
            return rank.at(a.estimator) < rank.at(b.estimator);
        });
        return records;
    }

    // -------------------------------------------------------------- summary

    std::vector<SummaryRow> summarize(const std::vector<TrialRecord> &records)
    {
        if (records.empty())
            throw DomainError("summarize: no records");

        // Keyed by (sweep index, first appearance of the estimator) so rows follow the record order.
        std::map<std::string, std::size_t> first_seen;
        for (const auto &r : records)
            first_seen.emplace(r.estimator, first_seen.size());

        std::map<std::pair<arma::uword, std::size_t>, std::vector<const TrialRecord *>> groups;
        for (const auto &r : records)
            groups[{r.sweep_index, first_seen.at(r.estimator)}].push_back(&r);

        std::vector<SummaryRow> rows;
        for (const auto &[key, group] : groups)
        {
            arma::vec v(group.size());
            for (std::size_t i = 0; i < group.size(); ++i)
                v(i) = group[i]->nmse;
            SummaryRow row;
            row.scenario = group.front()->scenario;
            row.estimator = group.front()->estimator;
            row.sweep_value = group.front()->sweep_value;
            row.count = v.n_elem;
            row.mean_nmse = arma::mean(v);
            row.median_nmse = arma::median(v);
            row.stderr_nmse = v.n_elem > 1 ? arma::stddev(v) / std::sqrt(static_cast<double>(v.n_elem)) : 0.0;
            rows.push_back(std::move(row));
        }
        return rows;
    }

    std::vector<HistogramBin> histogram(const std::vector<TrialRecord> &records, arma::uword bins)
    {
        if (records.empty())
            throw DomainError("histogram: no records");
        if (bins < 1)
            throw DomainError("histogram: need at least one bin");

        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        std::vector<std::string> order;
        for (const auto &r : records)
        {
            lo = std::min(lo, r.nmse);
            hi = std::max(hi, r.nmse);
            if (std::find(order.begin(), order.end(), r.estimator) == order.end())
                order.push_back(r.estimator);
        }
        const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;

        std::vector<HistogramBin> out;
        for (const auto &est : order)
        {
            std::vector<arma::uword> counts(bins, 0);
            for (const auto &r : records)
            {
                if (r.estimator != est)
                    continue;
                auto b = static_cast<arma::uword>((r.nmse - lo) / width);
                counts[std::min(b, bins - 1)] += 1;
            }
            for (arma::uword b = 0; b < bins; ++b)
                out.push_back(HistogramBin{est, lo + width * static_cast<double>(b),
                                           b + 1 == bins ? std::max(hi, lo + width * static_cast<double>(bins))
                                                         : lo + width * static_cast<double>(b + 1),
                                           counts[b]});
        }
        return out;
    }

    // --------------------------------------------------------------- output

    namespace
    {
        std::string num(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }
    }

    void write_records_csv(std::ostream &os, const std::vector<TrialRecord> &records)
    {
        os << "scenario,estimator,sweep_axis,sweep_value,trial,seed,nmse,mse_closed_form\n";
        for (const auto &r : records)
            os << r.scenario << ',' << r.estimator << ',' << r.sweep_axis << ',' << num(r.sweep_value) << ','
               << r.trial << ',' << r.seed << ',' << num(r.nmse) << ','
               << (r.mse_closed_form ? num(*r.mse_closed_form) : std::string()) << '\n';
    }

    void write_summary_csv(std::ostream &os, const std::vector<SummaryRow> &rows)
    {
        os << "scenario,estimator,sweep_value,mean_nmse,median_nmse,stderr_nmse\n";
        for (const auto &r : rows)
            os << r.scenario << ',' << r.estimator << ',' << num(r.sweep_value) << ',' << num(r.mean_nmse) << ','
               << num(r.median_nmse) << ',' << num(r.stderr_nmse) << '\n';
    }

    void write_histogram_csv(std::ostream &os, const std::vector<HistogramBin> &bins)
    {
        os << "estimator,bin_lower,bin_upper,count\n";
        for (const auto &b : bins)
            os << b.estimator << ',' << num(b.lower) << ',' << num(b.upper) << ',' << b.count << '\n';
    }

    void write_outputs(const ExperimentConfig &config, const std::vector<TrialRecord> &records,
                       const std::filesystem::path &dir)
    {
        std::filesystem::create_directories(dir);
        auto open = [&](const char *name) {
            std::ofstream f(dir / name, std::ios::binary);
            if (!f)
                throw DomainError("cannot write " + (dir / name).string());
            return f;
        };
        {
            auto f = open("records.csv");
            write_records_csv(f, records);
        }
        {
            auto f = open("summary.csv");
            write_summary_csv(f, summarize(records));
        }
        if (config.histogram_bins > 0)
        {
            auto f = open("histogram.csv");
            write_histogram_csv(f, histogram(records, config.histogram_bins));
        }
        {
            json run;
            run["config"] = config_json(config);
            run["estimators"] = estimator_tags(config);
            run["records"] = records.size();
            run["kernel_backend"] = std::string(kernels::backend_name(kernels::active_backend()));
            auto f = open("run.json");
            f << run.dump(2) << '\n';
        }
    }
}
