#pragma once

#include <stdexcept>
#include <string>

namespace qkdcoex {

// Common base so callers can catch anything from this library in one clause.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Lookup outside tabulated or supported range (no silent extrapolation).
class OutOfRangeError : public Error {
public:
    explicit OutOfRangeError(const std::string& what) : Error(what) {}
};

// Bad configuration or argument values.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// Math domain violations (probabilities outside [0,1], etc).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Clock recovery could not lock onto the frame structure.
class SyncFailedError : public Error {
public:
    explicit SyncFailedError(const std::string& what) : Error(what) {}
};

// Receiver timing is inconsistent with the slot grid.
class AlignmentError : public Error {
public:
    explicit AlignmentError(const std::string& what) : Error(what) {}
};

// Not enough data to produce a statistically meaningful estimate.
class InsufficientSampleError : public Error {
public:
    explicit InsufficientSampleError(const std::string& what) : Error(what) {}
};

// Requested operating point cannot be met by any setting in the search range.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what) : Error(what) {}
};

// Wire-format violations: bad magic, bad length, truncation.
class FramingError : public Error {
public:
    explicit FramingError(const std::string& what) : Error(what) {}
};

// Checksum mismatch on a received frame.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(what) {}
};

// Peer speaks an incompatible protocol revision.
class VersionError : public Error {
public:
    explicit VersionError(const std::string& what) : Error(what) {}
};

// Message legal in itself but wrong for the current phase.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& what) : Error(what) {}
};

// Session-level failure (estimate out of bounds, confirmation mismatch...).
class SessionError : public Error {
public:
    explicit SessionError(const std::string& what) : Error(what) {}
};

// Byte stream failure (peer closed, timeout).
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what) {}
};

// Local filesystem failure (cannot open/read/write a file).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace qkdcoex
