#pragma once

#include <stdexcept>
#include <string>

namespace easynet {

/// Caller passed arguments that violate a precondition (shapes, ranges).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data is malformed (NaN/Inf values, non-binary masks).
class InvalidData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input is well-formed but carries no usable information
/// (single-class labels, all-zero attention, no valid points).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training data violates the unsupervised contract (anomalies in train).
class DataContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace easynet
