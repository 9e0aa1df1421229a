#pragma once

#include <stdexcept>
#include <string>

namespace bcn {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (dimension mismatch, unknown
// view id, invalid argument). The message names the offending values.
struct ContractError : Error {
    using Error::Error;
};

// A configuration value is out of range or inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// An input file or record is malformed.
struct DataError : Error {
    using Error::Error;
};

// A serialized model container is malformed. `code` distinguishes the
// failure so callers can react without parsing the message.
struct FormatError : DataError {
    enum class Code { BadMagic, BadVersion, Truncated, Corrupt };

    FormatError(Code c, const std::string& msg) : DataError(msg), code(c) {}

    Code code;
};

}  // namespace bcn
