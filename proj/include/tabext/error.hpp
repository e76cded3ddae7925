#pragma once

#include <stdexcept>
#include <string>

namespace tabext {

enum class ErrorKind {
    MalformedHeader,
    BadRow,
    MissingPageRow,
    BadGeometry,
    EmptyText,
    SchemaMismatch,
    EmptyTrainingSet,
    TooFewDocuments,
    UnknownToken,
    InvalidLabel,
    InfeasibleSpec,
    DimensionMismatch,
    EmptyDataset,
    DivergedLoss,
    LengthMismatch,
    EmptyInput,
    Config,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. The kind is stable and machine-readable;
/// the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// A TSV row that failed validation; line numbers are 1-based and count the header.
class BadRowError : public Error {
public:
    BadRowError(std::size_t line_no, const std::string& reason);

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

} // namespace tabext
