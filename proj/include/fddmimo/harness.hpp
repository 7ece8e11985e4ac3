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

#ifndef FDDMIMO_HARNESS_HPP
#define FDDMIMO_HARNESS_HPP

#include "fddmimo/ec_mmse.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fddmimo
{
    enum class Scenario
    {
        Fig1aExactRank,  // exact low-rank R redrawn per trial, known-covariance MMSE
        Fig1bOneRing,    // numerically averaged one-ring R, known-covariance MMSE
        Fig2SnrSweep,    // EC-MMSE / FISTA / true-covariance MMSE against SNR
        Fig2TSweep,      // same estimators against the number of pilot symbols
        Fig4Robustness,  // MMSE with a parametric covariance at offset angles
        Fig5GaussianAoa, // Fig2 estimators under a Gaussian AoA spectrum
        MultiUser        // overlayed pilot against per-user optimal pilots
    };

    enum class PilotKind
    {
        Random,
        Optimal,
        Overlayed
    };

    enum class SweepAxis
    {
        InvNoiseDb,      // 10 log10(1 / sigma^2)
        SnrDb,           // 10 log10(||Xh||^2 / (T sigma^2)), calibrated per trial
        T,               // pilot length
        MeanOffsetDeg,   // mean-angle error fed to the parametric covariance
        SpreadOffsetDeg, // spread error fed to the parametric covariance
        NumAntennas
    };

    std::string to_string(Scenario s);
    std::string to_string(PilotKind k);
    std::string to_string(SweepAxis a);
    Scenario parse_scenario(const std::string &s);
    PilotKind parse_pilot_kind(const std::string &s);
    SweepAxis parse_sweep_axis(const std::string &s);

    struct UserSpec
    {
        double mean_angle_deg = 30.0;
        double spread_deg = 15.0;
    };

    struct FistaSettings
    {
        double regularization_scale = 1.0; // lambda = scale * sigma * sqrt(2 ln M)
        arma::uword max_iters = 1000;
        double tolerance = 1e-6;
    };

    struct ExperimentConfig
    {
        Scenario scenario = Scenario::Fig2SnrSweep;

        arma::uword num_antennas = 64;
        double spacing_ratio = 0.5;
        AoaKind aoa_kind = AoaKind::Uniform;
        double mean_angle_deg = 30.0;
        double spread_deg = 18.0; // half-width (uniform) or standard deviation (Gaussian)
        arma::uword num_paths = 100;
        double path_power = 1.0;

        PilotKind pilot_kind = PilotKind::Random;
        std::vector<arma::uword> t_values{20};
        SweepAxis sweep_axis = SweepAxis::SnrDb;
        std::vector<double> sweep_grid{20.0};

        arma::uword trials = 1000;
        std::uint64_t seed = 1;
        std::optional<double> power_budget; // unset: P = T

        double noise_var = 0.1; // used when neither sigma^2 nor SNR is swept
        double snr_db = 20.0;   // used by SNR-calibrated scenarios when SNR is not swept

        // Empty: scenario default. Expanded with a _T<T> suffix when t_values
        // holds more than one entry and T is not the sweep axis.
        std::vector<std::string> estimators;

        arma::uword covariance_samples = 100000;
        arma::uword exact_rank = 15;
        double energy_fraction = 0.95;
        FistaSettings fista;
        arma::uword histogram_bins = 0;

        std::vector<UserSpec> users;
        double sector_energy_fraction = 0.99;

        void validate() const;
    };

    /// Strict: unknown keys are rejected.
    ExperimentConfig parse_config(const std::string &json_text);
    ExperimentConfig load_config(const std::filesystem::path &path);

    /// Every field, defaults included, as pretty-printed JSON.
    std::string config_to_json(const ExperimentConfig &config);

    /// Concrete estimator tags, in emission order.
    std::vector<std::string> estimator_tags(const ExperimentConfig &config);

    struct TrialRecord
    {
        std::string scenario;
        std::string estimator;
        std::string sweep_axis;
        double sweep_value = 0.0;
        arma::uword sweep_index = 0;
        arma::uword trial = 0;
        std::uint64_t seed = 0;
        double nmse = 0.0;
        std::optional<double> mse_closed_form;
    };

    /// sigma^2 = ||Xh||^2 / (T 10^{snr_db / 10}).
    double calibrate_noise(const PilotMatrix &X, const arma::cx_vec &h, double snr_db);

    /// 10 log10(||Xh||^2 / (T sigma^2)).
    double measured_snr_db(const PilotMatrix &X, const arma::cx_vec &h, double noise_var);

    /// Stable hash of (master seed, sweep index, trial index).
    std::uint64_t trial_seed(std::uint64_t master, std::uint64_t sweep_index, std::uint64_t trial_index);

    /// Thrown when a trial fails; carries the trial identity in the message.
    class TrialError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Records sorted by sweep index, then trial, then estimator order.
    std::vector<TrialRecord> run_experiment(const ExperimentConfig &config);

    struct SummaryRow
    {
        std::string scenario;
        std::string estimator;
        double sweep_value = 0.0;
        double mean_nmse = 0.0;
        double median_nmse = 0.0;
        double stderr_nmse = 0.0; // sample std / sqrt(n); 0 for a single record
        arma::uword count = 0;
    };

    std::vector<SummaryRow> summarize(const std::vector<TrialRecord> &records);

    struct HistogramBin
    {
        std::string estimator;
        double lower = 0.0;
        double upper = 0.0;
        arma::uword count = 0;
    };

    /// `bins` uniform bins over the NMSE range observed across all records;
    /// every estimator is binned on the same edges.
    std::vector<HistogramBin> histogram(const std::vector<TrialRecord> &records, arma::uword bins);

    void write_records_csv(std::ostream &os, const std::vector<TrialRecord> &records);
    void write_summary_csv(std::ostream &os, const std::vector<SummaryRow> &rows);
    void write_histogram_csv(std::ostream &os, const std::vector<HistogramBin> &bins);

    /// records.csv, summary.csv, run.json and, when histogram_bins > 0, histogram.csv.
    void write_outputs(const ExperimentConfig &config, const std::vector<TrialRecord> &records,
                       const std::filesystem::path &dir);

    /// Bundled figure configurations: fig1a fig1b fig2a fig2b fig3 fig4a fig4b fig5a fig5b.
    std::vector<std::string> repro_targets();
    ExperimentConfig repro_config(const std::string &target);
}

#endif
