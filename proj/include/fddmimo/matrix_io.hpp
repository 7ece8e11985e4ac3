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

#ifndef FDDMIMO_MATRIX_IO_HPP
#define FDDMIMO_MATRIX_IO_HPP

#include "fddmimo/covariance.hpp"
#include "fddmimo/pilot.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fddmimo
{
    // Plain-text complex matrix format:
    //
    //   <key>=<value> <key>=<value> ...
    //   re,im,re,im,...      (one line per row)
    //
    // Values are written with 17 significant digits so a write/read cycle is exact.

    struct TextMatrix
    {
        std::vector<std::pair<std::string, std::string>> header; // in file order
        arma::cx_mat entries;

        std::optional<std::string> get(const std::string &key) const;
    };

    void write_text_matrix(std::ostream &os, const TextMatrix &m);

    /// Row count comes from the M or T header keys when present, otherwise
    /// from the number of data lines.
    TextMatrix read_text_matrix(std::istream &is);

    /// Header `M=<int> kind=<numeric|parametric|other>`.
    void write_covariance(std::ostream &os, const CovarianceMatrix &R);
    CovarianceMatrix read_covariance(std::istream &is);

    /// Header `T=<int> M=<int> kind=<tag> power=<P>`.
    void write_pilot(std::ostream &os, const PilotMatrix &X, const std::string &kind);
    PilotMatrix read_pilot(std::istream &is);
}

#endif
