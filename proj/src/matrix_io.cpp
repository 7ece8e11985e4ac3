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

#include "fddmimo/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace fddmimo
{
    namespace
    {
        std::string format_double(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        double parse_double(const std::string &s)
        {
            std::size_t pos = 0;
            double v = 0.0;
            try
            {
                v = std::stod(s, &pos);
            }
            catch (const std::exception &)
            {
                throw DomainError("matrix text: cannot parse number '" + s + "'");
            }
            if (pos != s.size())
                throw DomainError("matrix text: trailing characters in '" + s + "'");
            return v;
        }

        arma::uword parse_count(const std::string &s, const char *key)
        {
            arma::uword v = 0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size())
                throw DomainError(std::string("matrix text: bad value for ") + key + ": '" + s + "'");
            return v;
        }

        std::vector<std::string> split(const std::string &line, char sep)
        {
            std::vector<std::string> out;
            std::string field;
            std::istringstream ss(line);
            while (std::getline(ss, field, sep))
            {
                const auto b = field.find_first_not_of(" \t\r");
                const auto e = field.find_last_not_of(" \t\r");
                out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
            }
            return out;
        }

        std::string require(const TextMatrix &m, const char *key)
        {
            auto v = m.get(key);
            if (!v)
                throw DomainError(std::string("matrix text: header lacks '") + key + "'");
            return *v;
        }
    }

    std::optional<std::string> TextMatrix::get(const std::string &key) const
    {
        for (const auto &[k, v] : header)
            if (k == key)
                return v;
        return std::nullopt;
    }

    void write_text_matrix(std::ostream &os, const TextMatrix &m)
    {
        bool first = true;
        for (const auto &[k, v] : m.header)
        {
            os << (first ? "" : " ") << k << '=' << v;
            first = false;
        }
        os << '\n';
        for (arma::uword r = 0; r < m.entries.n_rows; ++r)
        {
            for (arma::uword c = 0; c < m.entries.n_cols; ++c)
            {
                if (c)
                    os << ',';
                os << format_double(m.entries(r, c).real()) << ',' << format_double(m.entries(r, c).imag());
            }
            os << '\n';
        }
    }

    TextMatrix read_text_matrix(std::istream &is)
    {
        TextMatrix m;
        std::string line;
        if (!std::getline(is, line))
            throw DomainError("matrix text: empty input");
        std::istringstream hs(line);
        std::string tok;
        while (hs >> tok)
        {
            const auto eq = tok.find('=');
            if (eq == std::string::npos || eq == 0)
                throw DomainError("matrix text: malformed header token '" + tok + "'");
            m.header.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
        }

        std::vector<std::vector<cx>> rows;
        while (std::getline(is, line))
        {
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            const auto fields = split(line, ',');
            if (fields.size() % 2 != 0)
                throw DomainError("matrix text: odd number of values on row " + std::to_string(rows.size() + 1));
            std::vector<cx> row;
            for (std::size_t i = 0; i < fields.size(); i += 2)
                row.emplace_back(parse_double(fields[i]), parse_double(fields[i + 1]));
            if (!rows.empty() && row.size() != rows.front().size())
                throw DomainError("matrix text: ragged rows");
            rows.push_back(std::move(row));
        }

        const arma::uword n_rows = rows.size();
        const arma::uword n_cols = rows.empty() ? 0 : rows.front().size();
        m.entries.set_size(n_rows, n_cols);
        for (arma::uword r = 0; r < n_rows; ++r)
            for (arma::uword c = 0; c < n_cols; ++c)
                m.entries(r, c) = rows[r][c];
        return m;
    }

    void write_covariance(std::ostream &os, const CovarianceMatrix &R)
    {
        TextMatrix m;
        m.header = {{"M", std::to_string(R.size())}, {"kind", to_string(R.kind())}};
        m.entries = R.matrix();
        write_text_matrix(os, m);
    }

    CovarianceMatrix read_covariance(std::istream &is)
    {
        const TextMatrix m = read_text_matrix(is);
        const arma::uword M = parse_count(require(m, "M"), "M");
        if (m.entries.n_rows != M || m.entries.n_cols != M)
            throw DomainError("covariance text: expected " + std::to_string(M) + "x" + std::to_string(M) + " entries");
        auto kind = CovarianceMatrix::Kind::Other;
        if (auto k = m.get("kind"))
        {
            if (*k == "numeric")
                kind = CovarianceMatrix::Kind::Numeric;
            else if (*k == "parametric")
                kind = CovarianceMatrix::Kind::Parametric;
        }
        return CovarianceMatrix(m.entries, kind);
    }

    void write_pilot(std::ostream &os, const PilotMatrix &X, const std::string &kind)
    {
        TextMatrix m;
        m.header = {{"T", std::to_string(X.num_symbols())},
                    {"M", std::to_string(X.num_antennas())},
                    {"kind", kind},
                    {"power", format_double(X.power_budget())}};
        m.entries = X.entries();
        write_text_matrix(os, m);
    }

    PilotMatrix read_pilot(std::istream &is)
    {
        const TextMatrix m = read_text_matrix(is);
        const arma::uword T = parse_count(require(m, "T"), "T");
        const arma::uword M = parse_count(require(m, "M"), "M");
        if (m.entries.n_rows != T || m.entries.n_cols != M)
            throw DomainError("pilot text: expected " + std::to_string(T) + "x" + std::to_string(M) + " entries");
        double budget = arma::accu(arma::square(arma::abs(m.entries)));
        if (auto p = m.get("power"))
            budget = parse_double(*p);
        return PilotMatrix(m.entries, budget);
    }
}
