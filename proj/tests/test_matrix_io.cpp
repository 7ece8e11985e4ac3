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

#include "fddmimo/matrix_io.hpp"

#include <sstream>

using namespace fddmimo;

TEST_CASE("text matrix round trip is exact", "[matrix_io]")
{
    Rng rng(21);
    TextMatrix m;
    m.header = {{"b", "2"}, {"a", "x"}, {"c", "-1.5"}};
    m.entries = complex_gaussian_mat(rng, 5, 3, 1e-7);
    m.entries(0, 0) = cx(1e300, -1e-300);
    m.entries(1, 1) = cx(-0.0, 0.1);

    std::stringstream ss;
    write_text_matrix(ss, m);
    const TextMatrix back = read_text_matrix(ss);
    CHECK(back.header == m.header);
    CHECK(arma::approx_equal(back.entries, m.entries, "absdiff", 0.0));
    CHECK(back.get("a") == std::optional<std::string>("x"));
    CHECK_FALSE(back.get("z").has_value());
}

TEST_CASE("covariance and pilot round trips", "[matrix_io]")
{
    Rng rng(22);
    const ArrayGeometry g(16, 0.5);
    const CovarianceMatrix R = covariance_parametric(g, 0.7, 0.2, 1.0);
    std::stringstream cs;
    write_covariance(cs, R);
    CHECK(cs.str().rfind("M=16 kind=parametric\n", 0) == 0);
    const CovarianceMatrix R2 = read_covariance(cs);
    CHECK(R2.kind() == CovarianceMatrix::Kind::Parametric);
    CHECK(arma::approx_equal(R2.matrix(), R.matrix(), "absdiff", 0.0));

    const PilotMatrix X = random_pilot(6, 16, 6.0, rng);
    std::stringstream ps;
    write_pilot(ps, X, "random");
    CHECK(ps.str().rfind("T=6 M=16 kind=random power=6\n", 0) == 0);
    const PilotMatrix X2 = read_pilot(ps);
    CHECK(X2.power_budget() == 6.0);
    CHECK(arma::approx_equal(X2.entries(), X.entries(), "absdiff", 0.0));
}

TEST_CASE("malformed text is rejected", "[matrix_io]")
{
    auto read = [](const std::string &s) {
        std::istringstream is(s);
        return read_text_matrix(is);
    };
    CHECK_THROWS_AS(read(""), DomainError);
    CHECK_THROWS_AS(read("M\n1,0\n"), DomainError);
    CHECK_THROWS_AS(read("=3\n1,0\n"), DomainError);
    CHECK_THROWS_AS(read("M=1\n1,0,2\n"), DomainError);
    CHECK_THROWS_AS(read("M=1\n1,x\n"), DomainError);
    CHECK_THROWS_AS(read("M=1\n1,0.5q\n"), DomainError);
    CHECK_THROWS_AS(read("M=2\n1,0,0,0\n0,0\n"), DomainError);
    CHECK(read("k=v\n\n1,2\n\n").entries(0, 0) == cx(1.0, 2.0));

    std::istringstream wrong_size("M=3\n1,0,0,0\n0,0,1,0\n");
    CHECK_THROWS_AS(read_covariance(wrong_size), DomainError);
    std::istringstream no_m("kind=numeric\n1,0\n");
    CHECK_THROWS_AS(read_covariance(no_m), DomainError);
    std::istringstream not_psd("M=2\n0,0,1,0\n1,0,0,0\n");
    CHECK_THROWS_AS(read_covariance(not_psd), DomainError);
    std::istringstream over_budget("T=1 M=2 power=1\n1,0,1,0\n");
    CHECK_THROWS_AS(read_pilot(over_budget), DomainError);
    std::istringstream bad_count("T=1x M=2\n1,0,1,0\n");
    CHECK_THROWS_AS(read_pilot(bad_count), DomainError);
}
