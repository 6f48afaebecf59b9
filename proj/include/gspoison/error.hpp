// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace gspoison {

// Malformed input file (PLY header, camera JSON, PNG).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition of an operation.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gspoison
