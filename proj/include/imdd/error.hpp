#pragma once

#include <stdexcept>
#include <string>

namespace imdd {

// Every failure the simulator reports derives from Error so callers can
// catch the whole family or a single category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FramingError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    CapacityError(const std::string& what, int achievable)
        : Error(what), achievable_bits(achievable) {}
    int achievable_bits;
};

class MeasurementError : public Error {
public:
    using Error::Error;
};

class SyncError : public Error {
public:
    SyncError(const std::string& what, double peak) : Error(what), peak(peak) {}
    double peak;
};

class EqualizerDivergence : public Error {
public:
    using Error::Error;
};

class NoCrossingError : public Error {
public:
    using Error::Error;
};

}  // namespace imdd
