#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace tandim {

/// Fixed-size dynamic bitset with the handful of word-parallel operations the
/// combinatorial searches need.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    std::size_t size() const noexcept { return n_; }

    void set(std::size_t i) noexcept { w_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) noexcept { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    bool test(std::size_t i) const noexcept { return (w_[i >> 6] >> (i & 63)) & 1u; }

    void set_all() noexcept {
        for (auto& w : w_) w = ~std::uint64_t{0};
        trim();
    }

    std::size_t count() const noexcept {
        std::size_t c = 0;
        for (auto w : w_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool any() const noexcept {
        for (auto w : w_)
            if (w) return true;
        return false;
    }
    bool none() const noexcept { return !any(); }

    /// |this & other|
    std::size_t count_and(const Bitset& o) const noexcept {
        std::size_t c = 0;
        for (std::size_t k = 0; k < w_.size(); ++k) c += static_cast<std::size_t>(std::popcount(w_[k] & o.w_[k]));
        return c;
    }

    bool intersects(const Bitset& o) const noexcept {
        for (std::size_t k = 0; k < w_.size(); ++k)
            if (w_[k] & o.w_[k]) return true;
        return false;
    }

    bool is_subset_of(const Bitset& o) const noexcept {
        for (std::size_t k = 0; k < w_.size(); ++k)
            if (w_[k] & ~o.w_[k]) return false;
        return true;
    }

    Bitset& operator|=(const Bitset& o) noexcept {
        for (std::size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
        return *this;
    }
    Bitset& operator&=(const Bitset& o) noexcept {
        for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
        return *this;
    }
    /// this &= ~o
    Bitset& subtract(const Bitset& o) noexcept {
        for (std::size_t k = 0; k < w_.size(); ++k) w_[k] &= ~o.w_[k];
        return *this;
    }

    bool operator==(const Bitset& o) const noexcept { return n_ == o.n_ && w_ == o.w_; }

    /// Index of the lowest set bit at or after `from`, or size() if none.
    std::size_t next(std::size_t from = 0) const noexcept {
        if (from >= n_) return n_;
        std::size_t k = from >> 6;
        std::uint64_t w = w_[k] & (~std::uint64_t{0} << (from & 63));
        while (true) {
            if (w) return (k << 6) + static_cast<std::size_t>(std::countr_zero(w));
            if (++k >= w_.size()) return n_;
            w = w_[k];
        }
    }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t k = 0; k < w_.size(); ++k) {
            std::uint64_t w = w_[k];
            while (w) {
                f((k << 6) + static_cast<std::size_t>(std::countr_zero(w)));
                w &= w - 1;
            }
        }
    }

private:
    void trim() noexcept {
        if (n_ % 64 && !w_.empty()) w_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
    }

    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

}  // namespace tandim
