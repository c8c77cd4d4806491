#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace worldgen
{
    /// Base class for every error raised by the pipeline.
    class Error: public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// Malformed input text or binary. Carries the byte offset or line where parsing stopped, when known.
    class ParseError: public Error
    {
    public:
        ParseError(const std::string& what, std::size_t location = npos): Error(what), location_(location) {}

        static constexpr std::size_t npos = static_cast<std::size_t>(-1);

        std::size_t location() const noexcept { return location_; }

    private:
        std::size_t location_;
    };

    /// Geometry that violates a type invariant (unclosed ring, too few vertices, self-intersection).
    class GeometryError: public Error
    {
    public:
        using Error::Error;
    };

    /// Geometry of the wrong kind for the requested layer (polyline where a polygon was expected).
    class KindError: public Error
    {
    public:
        using Error::Error;
    };

    /// Wrong binary container (bad magic bytes).
    class FormatError: public Error
    {
    public:
        using Error::Error;
    };

    /// Recognized but unsupported binary container (LAZ, LAS point formats other than 0).
    class UnsupportedFormatError: public FormatError
    {
    public:
        using FormatError::FormatError;
    };

    /// Inconsistent or incomplete configuration (unknown class label, unmapped source class, CRS mismatch).
    class ConfigError: public Error
    {
    public:
        using Error::Error;
    };

    /// Filesystem failures.
    class IoError: public Error
    {
    public:
        using Error::Error;
    };

    /// A documented precondition of an operation does not hold.
    class PreconditionError: public Error
    {
    public:
        using Error::Error;
    };
} // namespace worldgen
