#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragforge {

enum class ErrorKind {
    NotFound,
    UnsupportedKind,
    IoError,
    EncodingError,
    MalformedPdf,
    UnsupportedPdfFeature,
    EmptyDirectory,
    NoPdfFiles,
    InvalidConfig,
    DimensionMismatch,
    EmbedderMismatch,
    EmptyName,
    ConfigMismatch,
    CorruptStore,
    BadTemplate,
    HttpError,
    Timeout,
    BackendUnavailable,
    RunFailed,
    MissingApiKey,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::UnsupportedKind: return "UnsupportedKind";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::EncodingError: return "EncodingError";
        case ErrorKind::MalformedPdf: return "MalformedPdf";
        case ErrorKind::UnsupportedPdfFeature: return "UnsupportedPdfFeature";
        case ErrorKind::EmptyDirectory: return "EmptyDirectory";
        case ErrorKind::NoPdfFiles: return "NoPdfFiles";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::EmbedderMismatch: return "EmbedderMismatch";
        case ErrorKind::EmptyName: return "EmptyName";
        case ErrorKind::ConfigMismatch: return "ConfigMismatch";
        case ErrorKind::CorruptStore: return "CorruptStore";
        case ErrorKind::BadTemplate: return "BadTemplate";
        case ErrorKind::HttpError: return "HttpError";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::BackendUnavailable: return "BackendUnavailable";
        case ErrorKind::RunFailed: return "RunFailed";
        case ErrorKind::MissingApiKey: return "MissingApiKey";
    }
    return "Unknown";
}

/// Every failure surfaced by the library is an Error carrying a typed kind.
/// HttpError additionally records the response status (0 otherwise).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, int status = 0)
        : std::runtime_error(message), kind_(kind), status_(status) {}

    ErrorKind kind() const noexcept { return kind_; }
    int status() const noexcept { return status_; }

private:
    ErrorKind kind_;
    int status_;
};

}  // namespace ragforge
