#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace covweave {

/// Harmonic mean over [0,1] sub-scores. Any zero collapses the mean to zero
/// (limit behavior), so a failed dimension cannot be offset by the others.
/// Throws on an empty list.
inline double harmonic_mean(const std::vector<double>& values) {
    if (values.empty()) throw std::runtime_error("no sub-scores");
    double inv_sum = 0.0;
    for (double v : values) {
        if (v < 0.0 || v > 1.0) throw std::runtime_error("sub-score outside [0,1]");
        if (v == 0.0) return 0.0;
        inv_sum += 1.0 / v;
    }
    return static_cast<double>(values.size()) / inv_sum;
}

/// Length score: 1.0 inside a 10% relative tolerance band, then linear decay
/// reaching 0 at 100% deviation. Under- and overshoot are penalized alike.
inline double length_score(std::size_t actual_tokens, std::size_t target_tokens) {
    if (target_tokens == 0) throw std::runtime_error("target_tokens must be positive");
    double deviation = std::abs(static_cast<double>(actual_tokens) - static_cast<double>(target_tokens)) /
                       static_cast<double>(target_tokens);
    if (deviation <= 0.10) return 1.0;
    return std::max(0.0, 1.0 - (deviation - 0.10) / 0.90);
}

namespace detail {

// Counts inversions (discordant pairs) by merge sort; O(n log n).
inline std::size_t count_inversions(std::vector<std::size_t>& a, std::size_t lo, std::size_t hi,
                                    std::vector<std::size_t>& scratch) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::size_t inv = count_inversions(a, lo, mid, scratch) + count_inversions(a, mid, hi, scratch);
    std::merge(a.begin() + static_cast<std::ptrdiff_t>(lo), a.begin() + static_cast<std::ptrdiff_t>(mid),
               a.begin() + static_cast<std::ptrdiff_t>(mid), a.begin() + static_cast<std::ptrdiff_t>(hi),
               scratch.begin());
    std::size_t i = lo;
    std::size_t j = mid;
    while (i < mid) {
        if (j == hi || a[i] <= a[j]) {
            ++i;
        } else {
            inv += mid - i;
            ++j;
        }
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(hi - lo),
              a.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace detail

/// Kendall rank correlation between two permutations of the same label set:
/// tau = (concordant - discordant) / (n(n-1)/2). Discordant pairs are counted
/// as inversions of the predicted sequence mapped through the gold ranks.
/// n < 2 returns 1.0 by convention. Throws "invalid permutation" when the
/// label sets differ.
template <class Label>
double kendall_tau(const std::vector<Label>& predicted, const std::vector<Label>& gold) {
    if (predicted.size() != gold.size()) throw std::runtime_error("invalid permutation");
    std::size_t n = gold.size();
    if (n < 2) return 1.0;

    std::map<Label, std::size_t> gold_rank;
    for (std::size_t i = 0; i < n; ++i) {
        if (!gold_rank.emplace(gold[i], i).second) throw std::runtime_error("invalid permutation");
    }
    std::vector<std::size_t> ranks;
    ranks.reserve(n);
    for (const Label& label : predicted) {
        auto it = gold_rank.find(label);
        if (it == gold_rank.end()) throw std::runtime_error("invalid permutation");
        ranks.push_back(it->second);
    }
    std::vector<std::size_t> seen(ranks.begin(), ranks.end());
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i] != i) throw std::runtime_error("invalid permutation");
    }

    std::vector<std::size_t> scratch(n);
    std::size_t discordant = detail::count_inversions(ranks, 0, n, scratch);
    std::size_t total = n * (n - 1) / 2;
    return (static_cast<double>(total - discordant) - static_cast<double>(discordant)) /
           static_cast<double>(total);
}

}  // namespace covweave
