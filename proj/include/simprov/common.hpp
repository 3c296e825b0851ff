#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace simprov {

// Error taxonomy shared by all modules. CLI maps FormatError to exit
// code 2, everything else to 1.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParamError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionError : ParamError {
    using ParamError::ParamError;
};

struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Verdict : uint8_t { benign, manipulated, distinct };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::benign: return "benign";
        case Verdict::manipulated: return "manipulated";
        case Verdict::distinct: return "distinct";
    }
    return "?";
}

Verdict verdict_from_string(const std::string& s);

}  // namespace simprov
