#pragma once

#include <stdexcept>
#include <string>

namespace muxai {

// Invalid or inconsistent configuration (zero-size images, bad arch, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape or value mismatch on an operation input.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public InputError {
public:
    using InputError::InputError;
};

// A metric whose defining ratio has no contributing samples.
class UndefinedMetricError : public std::runtime_error {
public:
    UndefinedMetricError(const std::string& what, std::size_t skipped)
        : std::runtime_error(what), skipped_(skipped) {}

    std::size_t skipped() const noexcept { return skipped_; }

private:
    std::size_t skipped_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace muxai
