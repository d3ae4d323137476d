#pragma once

#include <stdexcept>
#include <string>

namespace fslab {

// Base class for every error raised by the lab.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidField : Error       { using Error::Error; };
struct GeometryError : Error      { using Error::Error; };
struct IllConditioned : Error     { using Error::Error; };
struct DegeneratePressure : Error { using Error::Error; };
struct NonpositiveTaylor : Error  { using Error::Error; };
struct PositivityViolated : Error { using Error::Error; };
struct NoClosedForm : Error       { using Error::Error; };
struct DimensionMismatch : Error  { using Error::Error; };
struct DomainError : Error        { using Error::Error; };
struct Unstable : Error           { using Error::Error; };
struct ParseError : Error         { using Error::Error; };
struct ValidationError : Error    { using Error::Error; };
struct TooFewSamples : Error      { using Error::Error; };
struct IoError : Error            { using Error::Error; };

} // namespace fslab
