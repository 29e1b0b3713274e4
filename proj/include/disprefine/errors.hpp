#pragma once

#include <stdexcept>
#include <string>

namespace disprefine {

// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raster operands disagree in width/height.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside its documented domain (tau <= 0, mask value outside [0,1], ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed or unreadable file. `what()` names the file and the offending field/offset.
class FormatError : public Error {
public:
    using Error::Error;
};

// File could not be opened, read, or written.
class IoError : public Error {
public:
    using Error::Error;
};

// Least-squares fit without enough support (fewer than 2 inliers, zero-variance regressor).
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

// A reduction was asked to run over zero valid pixels.
class EmptyDomainError : public Error {
public:
    using Error::Error;
};

}  // namespace disprefine
