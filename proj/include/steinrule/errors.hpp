/*
   Copyright 2026 The steinrule Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace steinrule {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix that must be invertible (X'X, a Gram matrix, a factor) is not.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, int rank, int expected)
        : Error(what + " (numerical rank " + std::to_string(rank) + " of " +
                std::to_string(expected) + ")"),
          rank_(rank), expected_(expected)
    {}

    int rank() const noexcept { return rank_; }
    int expected() const noexcept { return expected_; }

private:
    int rank_;
    int expected_;
};

/// A design column with zero sum of squares.
class DegenerateColumnError : public Error {
public:
    DegenerateColumnError(const std::string& what, int column)
        : Error(what + " (column " + std::to_string(column) + ")"), column_(column)
    {}

    int column() const noexcept { return column_; }

private:
    int column_;
};

/// Linear restriction that is empty or whose R (X'X)^-1 R' is singular.
class RestrictionError : public Error {
public:
    using Error::Error;
};

/// Moment structure that is not a valid covariance (non-PSD block, omega <= 0).
class MomentError : public Error {
public:
    using Error::Error;
};

/// Inverse moment that does not exist (degrees of freedom too small).
class DivergentMomentError : public Error {
public:
    using Error::Error;
};

/// Invalid simulation / CLI configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed data file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
        : Error(row == 0 ? what
                         : what + " at row " + std::to_string(row) + ", column " +
                               std::to_string(column)),
          row_(row), column_(column)
    {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

}  // namespace steinrule
