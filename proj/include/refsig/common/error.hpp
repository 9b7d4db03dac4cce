#pragma once

#include <stdexcept>
#include <string>

namespace refsig {

// Base of every error raised by the library. The kind tag lets callers map
// failures to exit codes without catching each subtype.
class Error : public std::runtime_error {
public:
    enum class Kind {
        Format,
        Unsupported,
        Argument,
        Shape,
        Parse,
        Validation,
        Sequencing,
        DegenerateGeometry,
        EmptyInput,
        DegenerateBatch,
        Divergence,
        Precondition,
        Io,
    };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

#define REFSIG_DEFINE_ERROR(Name, KindTag)                                       \
    class Name : public Error {                                                  \
    public:                                                                      \
        explicit Name(const std::string& what) : Error(Kind::KindTag, what) {}   \
    };

REFSIG_DEFINE_ERROR(FormatError, Format)
REFSIG_DEFINE_ERROR(UnsupportedError, Unsupported)
REFSIG_DEFINE_ERROR(ArgumentError, Argument)
REFSIG_DEFINE_ERROR(ShapeError, Shape)
REFSIG_DEFINE_ERROR(ParseError, Parse)
REFSIG_DEFINE_ERROR(ValidationError, Validation)
REFSIG_DEFINE_ERROR(SequencingError, Sequencing)
REFSIG_DEFINE_ERROR(DegenerateGeometryError, DegenerateGeometry)
REFSIG_DEFINE_ERROR(EmptyInputError, EmptyInput)
REFSIG_DEFINE_ERROR(DegenerateBatchError, DegenerateBatch)
REFSIG_DEFINE_ERROR(DivergenceError, Divergence)
REFSIG_DEFINE_ERROR(PreconditionError, Precondition)
REFSIG_DEFINE_ERROR(IoError, Io)

#undef REFSIG_DEFINE_ERROR

}  // namespace refsig
