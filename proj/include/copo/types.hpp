#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace copo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Hard cluster assignment, 0-based in memory. File formats use 1..K.
using LabelVector = std::vector<int>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
    using Error::Error;
};

// A stated precondition (symmetry, label range, ...) was violated.
struct ContractError : Error {
    using Error::Error;
};

struct ParameterError : Error {
    using Error::Error;
};

struct RankError : Error {
    using Error::Error;
};

struct UnsupportedError : Error {
    using Error::Error;
};

struct NotPositiveDefiniteError : Error {
    explicit NotPositiveDefiniteError(Index pivot_index)
        : Error("matrix is not positive definite (pivot " + std::to_string(pivot_index) + " <= 0)"),
          pivot(pivot_index) {}
    Index pivot;
};

// Root bracketing failed; carries the scanned grid for post-mortem.
struct SolverFailureError : Error {
    SolverFailureError(std::string msg, std::vector<double> grid, std::vector<double> values)
        : Error(std::move(msg)), mu_grid(std::move(grid)), g_values(std::move(values)) {}
    std::vector<double> mu_grid;
    std::vector<double> g_values;
};

struct ParseError : Error {
    ParseError(std::string msg, std::size_t row_idx, std::size_t col_idx)
        : Error(msg + " (row " + std::to_string(row_idx) + ", col " + std::to_string(col_idx) + ")"),
          row(row_idx),
          col(col_idx) {}
    std::size_t row;
    std::size_t col;
};

struct ValidationError : Error {
    ValidationError(std::string msg, std::vector<std::string> bad_fields)
        : Error(std::move(msg)), fields(std::move(bad_fields)) {}
    std::vector<std::string> fields;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

inline void check_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
    if (!m.allFinite()) throw ContractError(std::string(what) + ": non-finite entries");
}

}  // namespace copo
