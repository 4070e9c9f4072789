#pragma once

#include <stdexcept>
#include <string>

namespace ptie {

// Error taxonomy. The CLI maps each class to a distinct exit code.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (BRAT records, JSONL, schema/profile files).
struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structural mismatch between components (schemas, shapes, vocabularies).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/shape violations inside the numeric core.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Character span could not be aligned to token boundaries.
struct AlignmentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sequence exceeds the model's maximum length.
struct SequenceLengthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ptie
