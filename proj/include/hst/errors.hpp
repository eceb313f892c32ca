#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hst {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer shape violation; carries the index of the offending layer
// when raised during graph execution (npos when not layer-specific).
struct ShapeError : Error {
    static constexpr std::size_t no_layer = static_cast<std::size_t>(-1);

    ShapeError(std::size_t layer, const std::string& msg)
        : Error(layer == no_layer ? msg : "layer " + std::to_string(layer) + ": " + msg),
          layer_index(layer) {}

    explicit ShapeError(const std::string& msg) : ShapeError(no_layer, msg) {}

    std::size_t layer_index;
};

// Invalid run configuration. All validation failures are concatenated into
// the message before this is thrown.
struct ConfigError : Error {
    using Error::Error;
};

// Unreadable or malformed input data; carries file/line context when known.
struct DataError : Error {
    DataError(const std::string& file, long line, const std::string& msg)
        : Error(file + (line >= 0 ? ":" + std::to_string(line) : "") + ": " + msg),
          file_name(file),
          line_number(line) {}

    explicit DataError(const std::string& msg) : Error(msg), line_number(-1) {}

    std::string file_name;
    long line_number;
};

// Training diverged (non-finite loss). Carries the point of failure.
struct NumericError : Error {
    NumericError(int epoch_, long batch_, double lr_, const std::string& msg)
        : Error("epoch " + std::to_string(epoch_) + ", batch " + std::to_string(batch_) +
                ", lr " + std::to_string(lr_) + ": " + msg),
          epoch(epoch_),
          batch(batch_),
          lr(lr_) {}

    int epoch;
    long batch;
    double lr;
};

}  // namespace hst
