#pragma once

#include <stdexcept>
#include <string>

namespace fane {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimMismatch : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ZeroRowNorm : Error { using Error::Error; };
struct ZeroPrototype : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyReport : Error { using Error::Error; };
struct BadEntry : Error { using Error::Error; };
struct NonUnitRows : Error { using Error::Error; };
struct NotSquareGrid : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct DimOverflow : Error { using Error::Error; };
struct BatchTooSmall : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };

}  // namespace fane
