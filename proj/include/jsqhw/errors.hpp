#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace jsqhw {

// Thrown when a simulation or estimator produces (or receives) a non-finite
// value, or when an estimate cannot be formed from the data at hand.
// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Precondition check for public API entry points.
inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(double x, const char* what) {
    if (!std::isfinite(x))
        throw NumericalError(std::string(what) + " is not finite");
}

} // namespace jsqhw
