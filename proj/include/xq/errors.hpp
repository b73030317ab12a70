#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xq {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (FEN, ICCS, game records). Line/column are 1-based
// where known, 0 otherwise.
struct SyntaxError : Error {
    std::size_t line = 0;
    std::size_t column = 0;
    explicit SyntaxError(const std::string& msg, std::size_t line = 0, std::size_t column = 0)
        : Error(line ? msg + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                     : msg),
          line(line),
          column(column) {}
};

// Structurally well-formed position that violates a game invariant.
struct InvalidPositionError : Error {
    using Error::Error;
};

struct IllegalMoveError : Error {
    using Error::Error;
};

struct UnsupportedFormatError : Error {
    using Error::Error;
};

// Action index whose source and destination squares coincide.
struct DegenerateActionError : Error {
    using Error::Error;
};

struct NoLegalActionError : Error {
    using Error::Error;
};

struct ShapeMismatchError : Error {
    using Error::Error;
};

struct EmptyDatasetError : Error {
    using Error::Error;
};

struct NoVisitsError : Error {
    using Error::Error;
};

struct NoChildrenError : Error {
    using Error::Error;
};

struct TerminalRootError : Error {
    using Error::Error;
};

// A game record whose move list stops replaying legally at `ply` (0-based).
struct IllegalRecordMoveError : Error {
    int ply = 0;
    IllegalRecordMoveError(const std::string& msg, int ply)
        : Error(msg + " (ply " + std::to_string(ply) + ")"), ply(ply) {}
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace xq
