#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace freelim {

// Set partition of {1..m}. Blocks are kept sorted internally and ordered by
// least element, so equal partitions compare equal.
struct Partition {
    std::vector<std::vector<int>> blocks;
    int ground_size = 0;

    static Partition of(std::vector<std::vector<int>> blocks, int m);
    static Partition singletons(int m);  // 0_m
    static Partition full(int m);        // 1_m

    std::string to_string() const;  // "{(1,2),(3)}"
    bool operator==(const Partition& other) const = default;
};

// True iff no quadruple i1<i2<i3<i4 has i1,i3 in one block and i2,i4 in another.
bool is_noncrossing(const Partition& p);

// All of NC(m) in canonical order; |result| = catalan(m). m in [1, 14].
std::vector<Partition> enumerate_nc(int m);

// Number of non-crossing partitions with the given block sizes:
// m!/((m-k+1)! * f1!*f2!*...) where f_i are multiplicities of equal sizes.
std::uint64_t count_nc_by_sizes(const std::vector<int>& sizes);

// Kreweras complement on the interleaved circle 1,1',2,2',...,m,m',
// re-indexed back to {1..m}. Input must be non-crossing.
Partition kreweras(const Partition& p);

// m_n = sum over NC(n) of prod over blocks of kappa_{|V|}.
std::vector<double> moments_from_free_cumulants(const std::vector<double>& cumulants);

// Triangular inversion of the above.
std::vector<double> free_cumulants_from_moments(const std::vector<double>& moments);

}  // namespace freelim
