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

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "fddmimo/ec_mmse.hpp"
#include "fddmimo/harness.hpp"
#include "fddmimo/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fddmimo;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    std::string fmt(const char *f, auto... args)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, f, args...);
        return buf;
    }

    double db(double x) { return 10.0 * std::log10(x); }

    arma::vec nmse_of(const std::vector<TrialRecord> &recs, const std::string &estimator, double sweep_value)
    {
        std::vector<double> v;
        for (const auto &r : recs)
            if (r.estimator == estimator && r.sweep_value == sweep_value)
                v.push_back(r.nmse);
        return arma::vec(v);
    }

    CovarianceMatrix exact_rank_covariance(Rng &rng, arma::uword M, arma::uword r)
    {
        const arma::cx_mat G = complex_gaussian_mat(rng, M, r, 1.0);
        arma::cx_mat R = G * G.t();
        R *= static_cast<double>(M) / std::real(arma::trace(R));
        return CovarianceMatrix(0.5 * (R + R.t()));
    }

    // 1. Vanishing-noise law with an exact low-rank covariance.
    Outcome criterion1()
    {
        ExperimentConfig c;
        c.scenario = Scenario::Fig1aExactRank;
        c.num_antennas = 64;
        c.exact_rank = 15;
        c.pilot_kind = PilotKind::Random;
        c.t_values = {10, 15, 20};
        c.sweep_axis = SweepAxis::InvNoiseDb;
        c.sweep_grid = {20.0, 30.0, 40.0, 50.0};
        c.trials = 500;
        c.seed = 20160101;
        c.estimators = {"mmse_random"};
        const auto recs = run_experiment(c);

        bool pass = true;
        std::string detail;
        for (arma::uword T : {15u, 20u})
        {
            const std::string tag = "mmse_random_T" + std::to_string(T);
            const double m20 = arma::mean(nmse_of(recs, tag, 20.0));
            const double m30 = arma::mean(nmse_of(recs, tag, 30.0));
            const double m40 = arma::mean(nmse_of(recs, tag, 40.0));
            const double s1 = db(m20 / m30), s2 = db(m30 / m40);
            const bool ok = m40 < 1e-3 && s1 >= 8.0 && s2 >= 8.0;
            pass = pass && ok;
            detail += fmt("T=%u: NMSE@40dB=%.3g, drop 20->30 %.2f dB, 30->40 %.2f dB%s; ", unsigned(T), m40, s1, s2,
                          ok ? "" : " [out of bound]");
        }
        const double f40 = arma::mean(nmse_of(recs, "mmse_random_T10", 40.0));
        const double f50 = arma::mean(nmse_of(recs, "mmse_random_T10", 50.0));
        const bool floor_ok = std::max(f40, f50) / std::min(f40, f50) < 2.0;
        pass = pass && floor_ok;
        detail += fmt("T=10 floor: NMSE@40dB=%.3g, @50dB=%.3g, ratio %.3f", f40, f50, f40 / f50);
        return {pass, detail};
    }

    // 2. Closed-form MSE, eigen-form MSE and Monte Carlo agree.
    Outcome criterion2()
    {
        Rng rng(2002);
        const arma::uword M = 16;
        double worst_rel = 0.0, worst_z = 0.0;
        int mc_fail = 0;
        arma::vec signed_z(100);
        for (int inst = 0; inst < 100; ++inst)
        {
            const arma::uword T = std::vector<arma::uword>{4, 8, 16}[inst % 3];
            const arma::uword rank = std::uniform_int_distribution<arma::uword>(1, M)(rng);
            const CovarianceMatrix R = exact_rank_covariance(rng, M, rank);
            const double s2 = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
            const ObservationModel obs{random_pilot(T, M, static_cast<double>(T), rng), s2};
            const double closed = mmse_mse_closed_form(R, obs);
            const double eigen = mmse_mse_eigen_form(R, obs);
            worst_rel = std::max(worst_rel, std::abs(closed - eigen) / closed);

            const arma::cx_mat S = R.sqrt_matrix();
            const int n = 10000;
            arma::vec err(n);
            for (int i = 0; i < n; ++i)
            {
                const arma::cx_vec h = S * complex_gaussian_vec(rng, M, 1.0);
                const arma::cx_vec y = obs.pilot.entries() * h + complex_gaussian_vec(rng, T, obs.noise_var);
                err(i) = std::pow(arma::norm(mmse_estimate(R, obs, y) - h), 2);
            }
            signed_z(inst) = (arma::mean(err) - closed) / (arma::stddev(err) / std::sqrt(double(n)));
            const double z = std::abs(signed_z(inst));
            worst_z = std::max(worst_z, z);
            mc_fail += z >= 3.0;
        }
        return {worst_rel <= 1e-8 && mc_fail == 0,
                fmt("max |closed-eigen|/closed = %.2e, max MC |z| = %.2f, instances beyond 3 SE: %d/100, "
                    "signed z mean %.3f sd %.3f",
                    worst_rel, worst_z, mc_fail, arma::mean(signed_z), arma::stddev(signed_z))};
    }

    // Independent water level: bisection on sum_i max(0, mu - s2 / lambda_i) = P.
    double bisection_water_level(const arma::vec &lambda, double s2, double P)
    {
        auto used = [&](double mu) {
            double s = 0.0;
            for (double l : lambda)
                if (l > 0.0)
                    s += std::max(0.0, mu - s2 / l);
            return s;
        };
        double lo = 0.0, hi = P + s2 / lambda(0) + 1.0;
        while (used(hi) < P)
            hi *= 2.0;
        for (int i = 0; i < 300; ++i)
        {
            const double mid = 0.5 * (lo + hi);
            (used(mid) < P ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // 3. Optimal pilot beats random pilots; MSE flat beyond the rank; waterfill oracle.
    Outcome criterion3()
    {
        Rng rng(3003);
        const arma::uword M = 16, r = 6;
        const double s2 = 0.1, P = 8.0;
        int beaten = 0;
        double worst_flat = 0.0, worst_wf = 0.0, min_margin = 1e300;
        for (int inst = 0; inst < 50; ++inst)
        {
            const CovarianceMatrix R = exact_rank_covariance(rng, M, r);
            const double opt = mmse_mse_closed_form(R, {optimal_pilot_single_user(R, r, s2, P), s2});
            const double opt12 = mmse_mse_closed_form(R, {optimal_pilot_single_user(R, 12, s2, P), s2});
            worst_flat = std::max(worst_flat, std::abs(opt - opt12) / opt);
            for (int k = 0; k < 100; ++k)
            {
                const double rnd = mmse_mse_closed_form(R, {random_pilot(r, M, P, rng), s2});
                beaten += rnd < opt;
                min_margin = std::min(min_margin, rnd - opt);
            }

            const arma::vec lambda = R.spectral().eigenvalues.head(r);
            const WaterfillSolution wf = waterfill(lambda, s2, P);
            const double mu = bisection_water_level(lambda, s2, P);
            worst_wf = std::max(worst_wf, std::abs(wf.water_level - mu) / mu);
            for (arma::uword i = 0; i < r; ++i)
                worst_wf = std::max(worst_wf, std::abs(wf.levels(i) - std::max(0.0, mu - s2 / lambda(i))) / P);
        }
        return {beaten == 0 && worst_flat <= 1e-10 && worst_wf <= 1e-9,
                fmt("random pilots beating optimal: %d/5000 (min margin %.3g), max |MSE(T=6)-MSE(T=12)|/MSE = %.2e, "
                    "max waterfill deviation from bisection = %.2e",
                    beaten, min_margin, worst_flat, worst_wf)};
    }

    ExperimentConfig one_ring_config(Scenario s)
    {
        ExperimentConfig c;
        c.scenario = s;
        c.num_antennas = 64;
        c.mean_angle_deg = 30.0;
        c.spread_deg = 18.0;
        c.num_paths = 100;
        c.path_power = 1.0;
        c.trials = 1000;
        c.seed = 20160101;
        return c;
    }

    // 4. EC-MMSE against FISTA at 20 dB.
    Outcome criterion4()
    {
        ExperimentConfig c = one_ring_config(Scenario::Fig2SnrSweep);
        c.t_values = {20};
        c.sweep_axis = SweepAxis::SnrDb;
        c.sweep_grid = {20.0};
        c.estimators = {"ec_mmse", "fista"};
        const auto recs = run_experiment(c);
        const arma::vec ec = nmse_of(recs, "ec_mmse", 20.0), fi = nmse_of(recs, "fista", 20.0);
        const double me = arma::median(ec), mf = arma::median(fi);
        const double pe = arma::mean(arma::conv_to<arma::vec>::from(ec <= 0.02));
        const double pf = arma::mean(arma::conv_to<arma::vec>::from(fi <= 0.02));
        return {me < mf && pe > pf,
                fmt("median NMSE EC-MMSE %.4f vs FISTA %.4f; fraction NMSE <= 0.02: %.3f vs %.3f (%u paired trials)", me,
                    mf, pe, pf, unsigned(ec.n_elem))};
    }

    // 5. Same comparison under a Gaussian AoA spectrum.
    Outcome criterion5()
    {
        ExperimentConfig c = one_ring_config(Scenario::Fig5GaussianAoa);
        c.aoa_kind = AoaKind::Gaussian;
        c.spread_deg = 6.0;
        c.t_values = {20};
        c.sweep_axis = SweepAxis::SnrDb;
        c.sweep_grid = {20.0};
        c.estimators = {"ec_mmse", "fista"};
        const auto recs = run_experiment(c);
        const double me = arma::median(nmse_of(recs, "ec_mmse", 20.0));
        const double mf = arma::median(nmse_of(recs, "fista", 20.0));
        return {me < mf, fmt("median NMSE EC-MMSE %.4f vs FISTA %.4f", me, mf)};
    }

    // 6. Sensitivity to mean-angle and spread errors in the covariance.
    Outcome criterion6()
    {
        ExperimentConfig c = one_ring_config(Scenario::Fig4Robustness);
        c.t_values = {15};
        c.noise_var = 0.1;
        c.estimators = {"mmse_perturbed"};
        c.sweep_axis = SweepAxis::MeanOffsetDeg;
        c.sweep_grid = {0.0, 3.0, 10.0};
        const auto mean_recs = run_experiment(c);
        c.sweep_axis = SweepAxis::SpreadOffsetDeg;
        c.sweep_grid = {-5.0, 5.0};
        const auto spread_recs = run_experiment(c);

        const double m0 = arma::mean(nmse_of(mean_recs, "mmse_perturbed", 0.0));
        const double m3 = arma::mean(nmse_of(mean_recs, "mmse_perturbed", 3.0));
        const double m10 = arma::mean(nmse_of(mean_recs, "mmse_perturbed", 10.0));
        const double sm = arma::mean(nmse_of(spread_recs, "mmse_perturbed", -5.0));
        const double sp = arma::mean(nmse_of(spread_recs, "mmse_perturbed", 5.0));
        return {m3 < 3.0 * m0 && m10 > m3 && sp < sm,
                fmt("(a) mean NMSE at offset 0/3/10 deg: %.4f / %.4f / %.4f (3 deg ratio %.2f); "
                    "(b) spread offset +5 deg %.4f vs -5 deg %.4f",
                    m0, m3, m10, m3 / m0, sp, sm)};
    }

    // 7. DFT eigenstructure of the one-ring covariance.
    Outcome criterion7()
    {
        std::vector<double> dist;
        std::string detail = "normalized chordal distance";
        bool monotone = true;
        for (arma::uword M : {32u, 64u, 128u, 256u})
        {
            const ArrayGeometry g(M, 0.5);
            const CovarianceMatrix R = covariance_parametric(g, pi / 6, pi / 10);
            const arma::uword k = effective_rank(R, 0.99);
            const SectorSelection sec = matched_dft_sector(R, DftBasis(M, DftOrdering::Centered), k);
            const double d = subspace_distance(dominant_eigenvectors(R, k), sec.columns) / std::sqrt(double(k));
            if (!dist.empty() && d > 1.05 * dist.back())
                monotone = false;
            dist.push_back(d);
            detail += fmt(" M=%u:%.4f(k=%u)", unsigned(M), d, unsigned(k));
        }

        const double th = pi / 3, nu = pi / 12;
        const double eta = std::abs(std::cos(th - nu) - std::cos(th + nu)) * 0.5;
        const auto r256 = effective_rank(covariance_parametric(ArrayGeometry(256, 0.5), th, nu), 0.99);
        const bool rank_ok = std::abs(double(r256) - eta * 256) <= 0.2 * eta * 256;
        detail += fmt("; effective rank at M=256 %u vs eta*M %.2f", unsigned(r256), eta * 256);

        auto leakage = [](arma::uword M, const char *norm) {
            const ArrayGeometry g(M, 0.5);
            const CovarianceMatrix R = covariance_parametric(g, pi / 6, pi / 10);
            const arma::cx_vec a = steering_vector(g, pi / 2);
            const double n = std::string(norm) == "fro" ? arma::norm(R.matrix(), "fro") : arma::norm(R.matrix(), 2);
            return arma::norm(R.matrix() * a) / (n * std::sqrt(double(M)));
        };
        const double l32 = leakage(32, "fro"), l128 = leakage(128, "fro");
        const bool leak_ok = l128 < 0.5 * l32;
        detail += fmt("; leakage at 90 deg (Frobenius) M=32 %.3e, M=128 %.3e, ratio %.3f (spectral-norm ratio %.3f)",
                      l32, l128, l128 / l32, leakage(128, "2") / leakage(32, "2"));
        return {monotone && rank_ok && leak_ok, detail};
    }

    // 8. Overlayed multi-user pilot against per-user optimal pilots.
    Outcome criterion8()
    {
        const double s2 = 0.1, nu = pi / 12;
        const std::vector<double> means{pi / 6, 2 * pi / 3};
        Rng rng(8008);
        std::vector<double> gaps, cross;
        std::string detail;
        for (arma::uword M : {32u, 128u})
        {
            const ArrayGeometry g(M, 0.5);
            const DftBasis basis(M, DftOrdering::Centered);
            std::vector<CovarianceMatrix> Rs;
            std::vector<UserSector> sectors;
            arma::uword T = 0;
            for (double m : means)
            {
                Rs.push_back(covariance_parametric(g, m, nu));
                const SectorSelection sec = matched_dft_sector(Rs.back(), basis, effective_rank(Rs.back(), 0.99));
                sectors.push_back(UserSector{sec, sector_energy_profile(Rs.back(), sec)});
                T = std::max<arma::uword>(T, sec.indices.n_elem);
            }
            const double P = static_cast<double>(T);
            const OverlayedPilot ov = overlayed_pilot(sectors, P, s2);
            double overlay = 0.0, single = 0.0;
            for (const auto &R : Rs)
            {
                overlay += mmse_mse_closed_form(R, {ov.pilot, s2});
                single += mmse_mse_closed_form(R, {optimal_pilot_single_user(R, T, s2, P / 2), s2});
            }
            gaps.push_back((overlay - single) / single);

            double c = 0.0;
            const int n = 500;
            for (int i = 0; i < n; ++i)
                for (std::size_t k = 0; k < Rs.size(); ++k)
                {
                    const arma::cx_vec h = Rs[k].sqrt_matrix() * complex_gaussian_vec(rng, M, 1.0);
                    c += arma::norm(ov.per_user[1 - k] * h) / arma::norm(h);
                }
            cross.push_back(c / (n * Rs.size()));
            detail += fmt("M=%u (T=%u): sum-MSE overlay %.4f, single-user %.4f, gap %.4f, cross-excitation %.4f; ",
                          unsigned(M), unsigned(T), overlay, single, gaps.back(), cross.back());
        }
        return {gaps[1] < gaps[0] && cross[1] < cross[0], detail};
    }

    // 9. A repro target run twice gives byte-identical records.
    Outcome criterion9()
    {
        std::string detail;
        bool pass = true;
        for (const char *target : {"fig4a", "fig2a", "fig1b"})
        {
            ExperimentConfig c = repro_config(target);
            c.trials = 5;
            if (c.sweep_grid.size() > 3)
                c.sweep_grid.resize(3);
            std::ostringstream a, b;
            write_records_csv(a, run_experiment(c));
            write_records_csv(b, run_experiment(c));
            const bool same = a.str() == b.str();
            pass = pass && same;
            detail += fmt("%s: %zu bytes %s; ", target, a.str().size(), same ? "identical" : "DIFFER");
        }
        return {pass, detail};
    }

    struct Criterion
    {
        int id;
        const char *name;
        double budget_s;
        std::function<Outcome()> run;
    };
}

int main()
{
    const std::vector<Criterion> criteria{
        {1, "vanishing-noise law with exact-rank covariance", 120, criterion1},
        {2, "MSE formula equivalence", 60, criterion2},
        {3, "optimal pilot and water-filling", 60, criterion3},
        {4, "EC-MMSE vs FISTA (uniform AoA)", 300, criterion4},
        {5, "EC-MMSE vs FISTA (Gaussian AoA)", 300, criterion5},
        {6, "robustness to angle errors", 180, criterion6},
        {7, "DFT eigenstructure", 60, criterion7},
        {8, "overlayed multi-user pilot", 120, criterion8},
        {9, "determinism", 60, criterion9},
    };

    std::printf("kernel backend: %s\n", std::string(kernels::backend_name(kernels::active_backend())).c_str());
    int failed = 0;
    for (const auto &c : criteria)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("[%s] criterion %d: %s | %s | %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
