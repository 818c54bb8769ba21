#pragma once

#include <stdexcept>
#include <string>

namespace eventid {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewEvents : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidCount : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidLabel : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Modal fit cannot support the requested number of modes.
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PmuNotSelected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoostDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingleClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArchetype : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace eventid
