#pragma once

#include <stdexcept>
#include <string>

namespace kplane {

struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kplane
