#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "logdet/linalg.hpp"

namespace logdet::ensembles {

enum class MatrixKind { jordan, bidiagonal_toeplitz, diagonal, zero, file };

std::string to_string(MatrixKind kind);

/// A run of `multiplicity` copies of `value` on the diagonal. Multiplicity 0
/// means "an equal share of N" (every run must then use 0).
struct DiagonalRun {
    double value = 0.0;
    std::size_t multiplicity = 0;

    friend bool operator==(const DiagonalRun&, const DiagonalRun&) = default;
};

struct MatrixSpec {
    MatrixKind kind = MatrixKind::jordan;
    std::size_t n = 1;
    Complex a{0.0, 0.0}; // bidiagonal: diagonal entry
    Complex b{0.0, 0.0}; // bidiagonal: superdiagonal entry
    std::vector<DiagonalRun> diagonal;
    std::string path;
    /// Builds z I - A when set.
    std::optional<Complex> shift;

    friend bool operator==(const MatrixSpec&, const MatrixSpec&) = default;
};

/// Parses the compact form used on the command line:
///   jordan | zero | bidiag:A,B | diag:V[xK],V[xK],... | file:PATH
/// Complex numbers may be written re or re:im.
MatrixSpec parse_matrix_spec(const std::string& text, std::size_t n);

std::string format_matrix_spec(const MatrixSpec& spec);

/// Same spec at another size (sweeps). Diagonal runs with explicit
/// multiplicities cannot be resized.
MatrixSpec resized(const MatrixSpec& spec, std::size_t n);

/// Diagonal entries in order, after expanding runs.
std::vector<double> diagonal_entries(const MatrixSpec& spec);

ComplexMatrix realize(const MatrixSpec& spec);

/// Closed-form singular values (descending) where available.
std::optional<std::vector<double>> known_singvals(const MatrixSpec& spec);

/// known_singvals when available (so the Jordan cutoff sum is exactly 0),
/// otherwise the numerical singular values of `a` = realize(spec).
std::vector<double> spectrum(const MatrixSpec& spec, const ComplexMatrix& a);

/// An upper bound on |realize(spec)| from the spec parameters alone.
/// Returns nullopt for file-backed specs.
std::optional<double> norm_bound(const MatrixSpec& spec);

/// Matrix CSV: first line N, then N lines of N comma-separated "re:im" cells.
ComplexMatrix read_matrix_csv(std::istream& is);
ComplexMatrix read_matrix_file(const std::string& path);
void write_matrix_csv(std::ostream& os, const ComplexMatrix& a);

} // namespace logdet::ensembles
