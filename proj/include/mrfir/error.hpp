/*
 * Copyright 2026 The mrfir Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MRFIR_ERROR_HPP
#define MRFIR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace mrfir {

/// Precondition violated by a caller-supplied argument or hyperparameter.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A factorization or solve failed (matrix not positive definite, singular
/// resolvent, non-finite result).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ratio or normalized quantity with a zero denominator (constant signal).
class UndefinedRatio : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Hyperparameter search started from a point with a non-finite objective.
class InvalidStart : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration, model file or CSV.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw InvalidArgument(what);
}

} // namespace detail
} // namespace mrfir

#endif
