#pragma once

#include <stdexcept>
#include <string>

namespace ccm {

// Error taxonomy. `kind` is a stable machine-readable tag used by the CLI
// to build JSON error objects and pick exit codes.
class Error : public std::runtime_error {
public:
    enum class Category { BadInput, Config, Internal };

    Error(std::string kind, const std::string& message,
          Category category = Category::BadInput)
        : std::runtime_error(message), kind_(std::move(kind)), category_(category) {}

    const std::string& kind() const { return kind_; }
    Category category() const { return category_; }

private:
    std::string kind_;
    Category category_;
};

#define CCM_DEFINE_ERROR(NAME, CATEGORY)                                  \
    class NAME : public Error {                                           \
    public:                                                               \
        explicit NAME(const std::string& message)                         \
            : Error(#NAME, message, Error::Category::CATEGORY) {}         \
    }

CCM_DEFINE_ERROR(RankViolation, BadInput);
CCM_DEFINE_ERROR(DuplicateCell, BadInput);
CCM_DEFINE_ERROR(UnknownVertex, BadInput);
CCM_DEFINE_ERROR(IndexOutOfRange, BadInput);
CCM_DEFINE_ERROR(InvalidParameter, BadInput);
CCM_DEFINE_ERROR(ShapeMismatch, Internal);
CCM_DEFINE_ERROR(NonScalarLoss, Internal);
CCM_DEFINE_ERROR(InvalidLabel, BadInput);
CCM_DEFINE_ERROR(EmptySplit, BadInput);
CCM_DEFINE_ERROR(EmptyComplex, BadInput);
CCM_DEFINE_ERROR(TooLarge, BadInput);
CCM_DEFINE_ERROR(IoError, BadInput);
CCM_DEFINE_ERROR(ParseError, BadInput);
CCM_DEFINE_ERROR(ConfigError, Config);

#undef CCM_DEFINE_ERROR

}  // namespace ccm
