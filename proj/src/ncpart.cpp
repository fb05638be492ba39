#include "freelim/ncpart.hpp"

#include "freelim/spectra.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace freelim {

Partition Partition::of(std::vector<std::vector<int>> blocks, int m) {
    std::vector<bool> seen(static_cast<std::size_t>(m) + 1, false);
    int count = 0;
    for (auto& b : blocks) {
        if (b.empty()) throw std::invalid_argument("Partition: empty block");
        std::sort(b.begin(), b.end());
        for (int e : b) {
            if (e < 1 || e > m || seen[static_cast<std::size_t>(e)])
                throw std::invalid_argument("Partition: blocks must partition {1..m}");
            seen[static_cast<std::size_t>(e)] = true;
            ++count;
        }
    }
    if (count != m) throw std::invalid_argument("Partition: blocks must cover {1..m}");
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Partition p;
    p.blocks = std::move(blocks);
    p.ground_size = m;
    return p;
}

Partition Partition::singletons(int m) {
    std::vector<std::vector<int>> blocks;
    for (int i = 1; i <= m; ++i) blocks.push_back({i});
    return of(std::move(blocks), m);
}

Partition Partition::full(int m) {
    std::vector<int> b(static_cast<std::size_t>(m));
    std::iota(b.begin(), b.end(), 1);
    return of({b}, m);
}

std::string Partition::to_string() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) os << ',';
        os << '(';
        for (std::size_t j = 0; j < blocks[i].size(); ++j) {
            if (j) os << ',';
            os << blocks[i][j];
        }
        os << ')';
    }
    os << '}';
    return os.str();
}

bool is_noncrossing(const Partition& p) {
    // Pairwise block scan; a crossing needs a<b<c<d with a,c in V and b,d in W.
    const int m = p.ground_size;
    std::vector<int> block_of(static_cast<std::size_t>(m) + 1, -1);
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi)
        for (int e : p.blocks[bi]) block_of[static_cast<std::size_t>(e)] = static_cast<int>(bi);
    // Stack sweep: open the block at its first element, close at its last; a
    // block may only appear in contiguous runs interleaved in LIFO order.
    std::vector<int> stack;
    std::vector<int> last(p.blocks.size());
    for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) last[bi] = p.blocks[bi].back();
    std::vector<bool> on_stack(p.blocks.size(), false);
    for (int i = 1; i <= m; ++i) {
        int b = block_of[static_cast<std::size_t>(i)];
        if (on_stack[static_cast<std::size_t>(b)]) {
            if (stack.back() != b) return false;  // must be innermost open block
        } else {
            stack.push_back(b);
            on_stack[static_cast<std::size_t>(b)] = true;
        }
        if (i == last[static_cast<std::size_t>(b)]) {
            if (stack.back() != b) return false;
            stack.pop_back();
        }
    }
    return true;
}

namespace {

// Recursive first-block placement on a sorted list of free points. The block
// containing the smallest point is chosen; the gaps between its consecutive
// elements are partitioned independently (non-crossing structure).
void enum_nc_points(const std::vector<int>& points,
                    std::vector<std::vector<int>>& acc,
                    std::vector<std::vector<std::vector<int>>>& out) {
    if (points.empty()) {
        out.push_back(acc);
        return;
    }
    int n = static_cast<int>(points.size());
    // choose the subset of indices joining points[0], via increasing index lists
    std::vector<int> chosen;  // indices into points, always starting with 0
    // iterative DFS over "next index to consider"
    struct Frame { std::vector<int> chosen; int next; };
    std::vector<Frame> stack;
    stack.push_back({{0}, 1});
    while (!stack.empty()) {
        Frame fr = std::move(stack.back());
        stack.pop_back();
        // Option A: close the block here; recurse on gaps.
        {
            std::vector<int> block;
            for (int idx : fr.chosen) block.push_back(points[static_cast<std::size_t>(idx)]);
            acc.push_back(block);
            // free points split into independent gaps between chosen indices
            std::vector<int> rest_after;
            bool ok = true;
            std::vector<std::vector<int>> gaps;
            int prev = 0;
            for (std::size_t ci = 1; ci <= fr.chosen.size(); ++ci) {
                int upto = (ci < fr.chosen.size()) ? fr.chosen[ci] : n;
                std::vector<int> gap;
                for (int j = prev + 1; j < upto; ++j)
                    gap.push_back(points[static_cast<std::size_t>(j)]);
                gaps.push_back(std::move(gap));
                if (ci < fr.chosen.size()) prev = fr.chosen[ci];
            }
            (void)ok;
            (void)rest_after;
            // recurse over the cartesian product of gap partitions
            // (plain recursion keeps this readable; depth <= m)
            std::function<void(std::size_t)> rec = [&](std::size_t gi) {
                if (gi == gaps.size()) {
                    out.push_back(acc);
                    return;
                }
                if (gaps[gi].empty()) {
                    rec(gi + 1);
                    return;
                }
                std::vector<std::vector<std::vector<int>>> sub;
                std::vector<std::vector<int>> sub_acc;
                enum_nc_points(gaps[gi], sub_acc, sub);
                for (auto& parts : sub) {
                    std::size_t before = acc.size();
                    for (auto& b : parts) acc.push_back(b);
                    rec(gi + 1);
                    acc.resize(before);
                }
            };
            rec(0);
            acc.pop_back();
        }
        // Option B: extend the block with a further point.
        for (int nxt = fr.next; nxt < n; ++nxt) {
            Frame ext;
            ext.chosen = fr.chosen;
            ext.chosen.push_back(nxt);
            ext.next = nxt + 1;
            stack.push_back(std::move(ext));
        }
    }
}

}  // namespace

std::vector<Partition> enumerate_nc(int m) {
    if (m < 1 || m > 14) throw std::domain_error("enumerate_nc: m must be in [1, 14]");
    static std::map<int, std::vector<Partition>> cache;
    static std::mutex cache_mutex;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find(m);
        if (it != cache.end()) return it->second;
    }
    std::vector<int> points(static_cast<std::size_t>(m));
    std::iota(points.begin(), points.end(), 1);
    std::vector<std::vector<std::vector<int>>> raw;
    std::vector<std::vector<int>> acc;
    enum_nc_points(points, acc, raw);
    std::vector<Partition> out;
    out.reserve(raw.size());
    for (auto& blocks : raw) out.push_back(Partition::of(std::move(blocks), m));
    std::sort(out.begin(), out.end(), [](const Partition& a, const Partition& b) {
        return a.blocks < b.blocks;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        cache.emplace(m, out);
    }
    return out;
}

std::uint64_t count_nc_by_sizes(const std::vector<int>& sizes) {
    if (sizes.empty()) throw std::domain_error("count_nc_by_sizes: empty size list");
    int m = 0;
    for (int s : sizes) {
        if (s < 1) throw std::domain_error("count_nc_by_sizes: sizes must be >= 1");
        m += s;
    }
    int k = static_cast<int>(sizes.size());
    // m!/(m-k+1)! / prod(multiplicity!)
    unsigned __int128 num = 1;
    for (int v = m - k + 2; v <= m; ++v) num *= static_cast<unsigned>(v);
    std::map<int, int> mult;
    for (int s : sizes) ++mult[s];
    unsigned __int128 den = 1;
    for (auto& [size, f] : mult) {
        (void)size;
        for (int v = 2; v <= f; ++v) den *= static_cast<unsigned>(v);
    }
    unsigned __int128 res = num / den;
    if (res * den != num) throw std::logic_error("count_nc_by_sizes: non-integral result");
    if (res > static_cast<unsigned __int128>(UINT64_MAX))
        throw std::overflow_error("count_nc_by_sizes: result exceeds 64-bit range");
    return static_cast<std::uint64_t>(res);
}

Partition kreweras(const Partition& p) {
    if (!is_noncrossing(p)) throw std::invalid_argument("kreweras: input must be non-crossing");
    const int m = p.ground_size;
    // Chord k'-l' (k<l) is admissible iff no block of p has elements both inside
    // {k+1..l} and outside it. Connected components of admissible chords are the
    // complement's blocks (the faces left free by p on the interleaved circle).
    std::vector<int> parent(static_cast<std::size_t>(m));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); };
    for (int k = 1; k < m; ++k) {
        for (int l = k + 1; l <= m; ++l) {
            bool crosses = false;
            for (const auto& block : p.blocks) {
                bool inside = false, outside = false;
                for (int e : block) {
                    if (e > k && e <= l) inside = true; else outside = true;
                }
                if (inside && outside) { crosses = true; break; }
            }
            if (!crosses) unite(k - 1, l - 1);
        }
    }
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < m; ++i) groups[find(i)].push_back(i + 1);
    std::vector<std::vector<int>> blocks;
    for (auto& [root, blk] : groups) {
        (void)root;
        blocks.push_back(std::move(blk));
    }
    return Partition::of(std::move(blocks), m);
}

std::vector<double> moments_from_free_cumulants(const std::vector<double>& cumulants) {
    int n = static_cast<int>(cumulants.size());
    if (n > 14) throw std::length_error("moments_from_free_cumulants: order above 14");
    std::vector<double> moments(static_cast<std::size_t>(n), 0.0);
    for (int order = 1; order <= n; ++order) {
        double acc = 0.0;
        for (const auto& part : enumerate_nc(order)) {
            double prod = 1.0;
            for (const auto& block : part.blocks)
                prod *= cumulants[block.size() - 1];
            acc += prod;
        }
        moments[static_cast<std::size_t>(order) - 1] = acc;
    }
    return moments;
}

std::vector<double> free_cumulants_from_moments(const std::vector<double>& moments) {
    int n = static_cast<int>(moments.size());
    if (n > 14) throw std::length_error("free_cumulants_from_moments: order above 14");
    std::vector<double> kappa(static_cast<std::size_t>(n), 0.0);
    for (int order = 1; order <= n; ++order) {
        // m_order = kappa_order + sum over proper NC partitions of products
        double rest = 0.0;
        for (const auto& part : enumerate_nc(order)) {
            if (part.blocks.size() == 1) continue;  // the full block is kappa_order
            double prod = 1.0;
            for (const auto& block : part.blocks)
                prod *= kappa[block.size() - 1];
            rest += prod;
        }
        kappa[static_cast<std::size_t>(order) - 1] =
            moments[static_cast<std::size_t>(order) - 1] - rest;
    }
    return kappa;
}

}  // namespace freelim
