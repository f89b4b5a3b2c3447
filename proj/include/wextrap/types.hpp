#ifndef WEXTRAP_TYPES_HPP
#define WEXTRAP_TYPES_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace wextrap
{

// Everything works over C^N; real data embeds with zero imaginary parts.
using Scalar = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

//
// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map categories to exit codes.
//
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error
{
public:
    using Error::Error;
};

class NotHermitian : public Error
{
public:
    using Error::Error;
};

class NotPositiveDefinite : public Error
{
public:
    using Error::Error;
};

class NonpositiveWeight : public Error
{
public:
    using Error::Error;
};

class NegativeQuadraticForm : public Error
{
public:
    using Error::Error;
};

/// Column `index` is numerically in the span of the preceding columns.
class RankDeficient : public Error
{
public:
    explicit RankDeficient(Index index)
        : Error("rank deficient: column " + std::to_string(index) +
                " depends on the preceding columns"),
          m_index(index)
    {
    }
    Index index() const noexcept { return m_index; }

private:
    Index m_index;
};

class LambdaNotPositive : public Error
{
public:
    using Error::Error;
};

class MpeNonexistent : public Error
{
public:
    using Error::Error;
};

class InsufficientVectors : public Error
{
public:
    using Error::Error;
};

class TheoremViolation : public Error
{
public:
    using Error::Error;
};

/// Krylov basis cannot grow past dimension `index`.
class Breakdown : public Error
{
public:
    explicit Breakdown(Index index)
        : Error("Krylov breakdown at dimension " + std::to_string(index)),
          m_index(index)
    {
    }
    Index index() const noexcept { return m_index; }

private:
    Index m_index;
};

class NonFiniteIterate : public Error
{
public:
    explicit NonFiniteIterate(Index index)
        : Error("iterate " + std::to_string(index) + " is not finite"),
          m_index(index)
    {
    }
    Index index() const noexcept { return m_index; }

private:
    Index m_index;
};

class WrongProblemKind : public Error
{
public:
    using Error::Error;
};

class ParseError : public Error
{
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column,
               const std::string& what)
        : Error(source + ":" + std::to_string(line) + ":" +
                std::to_string(column) + ": " + what),
          m_line(line),
          m_column(column)
    {
    }
    std::size_t line() const noexcept { return m_line; }
    std::size_t column() const noexcept { return m_column; }

private:
    std::size_t m_line;
    std::size_t m_column;
};

class IoError : public Error
{
public:
    using Error::Error;
};

namespace detail
{

inline void require_dimension(Index expected, Index actual, const char* what)
{
    if (expected != actual)
    {
        throw DimensionMismatch(std::string(what) + ": expected dimension " +
                                std::to_string(expected) + ", got " +
                                std::to_string(actual));
    }
}

} // namespace detail

} // namespace wextrap

#endif // WEXTRAP_TYPES_HPP
