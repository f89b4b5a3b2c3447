#ifndef WEXTRAP_SEQUENCE_HPP
#define WEXTRAP_SEQUENCE_HPP

#include <string>
#include <utility>
#include <vector>

#include <wextrap/types.hpp>

namespace wextrap
{

/// x_0..x_M, all of one dimension, M >= 1.
class VectorSequence
{
public:
    VectorSequence() = default;

    explicit VectorSequence(std::vector<Vector> vectors) : m_vectors(std::move(vectors))
    {
        if (m_vectors.size() < 2)
        {
            throw InsufficientVectors("a sequence needs at least two vectors");
        }
        for (std::size_t i = 1; i < m_vectors.size(); ++i)
        {
            detail::require_dimension(m_vectors.front().size(), m_vectors[i].size(),
                                      ("sequence vector " + std::to_string(i)).c_str());
        }
    }

    const std::vector<Vector>& vectors() const noexcept { return m_vectors; }
    std::size_t size() const noexcept { return m_vectors.size(); }
    Index dimension() const noexcept { return m_vectors.empty() ? 0 : m_vectors.front().size(); }
    const Vector& operator[](std::size_t i) const { return m_vectors[i]; }

private:
    std::vector<Vector> m_vectors;
};

} // namespace wextrap

#endif // WEXTRAP_SEQUENCE_HPP
