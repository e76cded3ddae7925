#include "tabext/error.hpp"

namespace tabext {

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::BadRow: return "BadRow";
    case ErrorKind::MissingPageRow: return "MissingPageRow";
    case ErrorKind::BadGeometry: return "BadGeometry";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::TooFewDocuments: return "TooFewDocuments";
    case ErrorKind::UnknownToken: return "UnknownToken";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::Config: return "Config";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message)
    , kind_(kind)
{
}

BadRowError::BadRowError(std::size_t line_no, const std::string& reason)
    : Error(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": " + reason)
    , line_no_(line_no)
{
}

} // namespace tabext
