#pragma once

#include <stdexcept>
#include <string>

namespace protodsl {

// Base for all library errors. Catch this at CLI boundaries.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyNameError : Error {
    EmptyNameError() : Error("name is empty after canonicalization") {}
};

// Invalid configuration or hyperparameters.
struct ConfigError : Error {
    using Error::Error;
};

// An operation was called outside its contract (e.g. pf_verify on a non-dual plan).
struct ContractError : Error {
    using Error::Error;
};

// Internal state inconsistency (e.g. fit state referencing unknown actions).
struct IntegrityError : Error {
    using Error::Error;
};

// Extraction client failed on a sentence; carries the offending text.
struct ExtractionError : Error {
    std::string sentence;
    explicit ExtractionError(std::string s)
        : Error("extraction failed: " + s), sentence(std::move(s)) {}
};

// A prompt template slot was not supplied; carries the slot name.
struct TemplateError : Error {
    std::string slot;
    explicit TemplateError(std::string name)
        : Error("missing template slot: " + name), slot(std::move(name)) {}
};

// Designer could not produce a parseable plan within its budget; carries raw model text.
struct DesignFailure : Error {
    std::string raw_text;
    explicit DesignFailure(std::string raw)
        : Error("designer produced no parseable plan"), raw_text(std::move(raw)) {}
};

struct IoError : Error {
    using Error::Error;
};

// Persisted file carries a schema version this build does not understand.
struct SchemaError : Error {
    using Error::Error;
};

struct InsufficientCorpusError : Error {
    using Error::Error;
};

} // namespace protodsl
