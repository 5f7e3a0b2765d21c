#ifndef SAGFREE_ERRORS_HPP
#define SAGFREE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sagfree {

struct BadDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfBand : std::invalid_argument {
    OutOfBand(int row, int col)
        : std::invalid_argument("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                                ") lies outside the stored band"),
          row(row), col(col) {}
    int row, col;
};

struct DegenerateEdge : std::runtime_error {
    explicit DegenerateEdge(int edge)
        : std::runtime_error("edge " + std::to_string(edge) + " has near-zero length"), edge(edge) {}
    int edge;
};

struct AntiparallelTangents : std::runtime_error {
    explicit AntiparallelTangents(int vertex)
        : std::runtime_error("tangents at vertex " + std::to_string(vertex) +
                             " are antiparallel; curvature is undefined"),
          vertex(vertex) {}
    int vertex;
};

struct NotSpd : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sagfree

#endif
