#pragma once

/// @file core.hpp
/// Chromosomes, populations, fitness landscapes and the level statistics
/// N(x, lambda), Lambda(x, i) and Delta(lambda, gamma).
///
/// Chromosomes are packed 64 bits per word. Bit position j (0-based here,
/// position j+1 in the usual 1..l numbering) lives in word j/64, bit j%64.
/// Bitstring literals list positions left to right, so "0101" has ones at
/// positions 2 and 4.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qsga/errors.hpp"

namespace qsga {

using Word = std::uint64_t;

constexpr std::size_t words_for(std::size_t length) { return (length + 63) / 64; }

/// Mask of the valid bits in the last word of a length-`length` chromosome.
constexpr Word tail_mask(std::size_t length) {
    const std::size_t r = length % 64;
    return r == 0 ? ~Word{0} : ((Word{1} << r) - 1);
}

/// Read-only view of one packed chromosome.
struct ChromosomeView {
    std::span<const Word> words;
    std::size_t length = 0;

    bool bit(std::size_t pos) const { return (words[pos / 64] >> (pos % 64)) & 1U; }

    std::size_t ones() const {
        std::size_t c = 0;
        for (Word w : words) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    bool all_ones() const {
        const std::size_t n = words.size();
        for (std::size_t k = 0; k + 1 < n; ++k)
            if (words[k] != ~Word{0}) return false;
        return n == 0 || words[n - 1] == tail_mask(length);
    }

    /// Number of leading ones counted from position 1.
    std::size_t leading_ones() const {
        std::size_t c = 0;
        for (std::size_t k = 0; k < words.size(); ++k) {
            const std::size_t run = static_cast<std::size_t>(std::countr_one(words[k]));
            c += run;
            if (run < 64) break;
        }
        return std::min(c, length);
    }

    /// Integer code with position j contributing 2^j; requires length <= 64.
    std::uint64_t code() const { return words.empty() ? 0 : words[0]; }

    std::string to_string() const {
        std::string s(length, '0');
        for (std::size_t j = 0; j < length; ++j)
            if (bit(j)) s[j] = '1';
        return s;
    }

    friend bool operator==(const ChromosomeView& a, const ChromosomeView& b) {
        return a.length == b.length && std::equal(a.words.begin(), a.words.end(), b.words.begin());
    }
};

/// A fixed-length binary string.
class Chromosome {
  public:
    Chromosome() = default;
    explicit Chromosome(std::size_t length) : length_(length), words_(words_for(length), 0) {
        if (length == 0) throw invalid_argument("chromosome length must be >= 1");
    }

    Chromosome(ChromosomeView v) : length_(v.length), words_(v.words.begin(), v.words.end()) {}

    static Chromosome from_string(std::string_view bits) {
        Chromosome c(bits.size());
        for (std::size_t j = 0; j < bits.size(); ++j) {
            if (bits[j] == '1')
                c.set(j, true);
            else if (bits[j] != '0')
                throw invalid_argument("bitstring literal may contain only '0' and '1'");
        }
        return c;
    }

    /// Chromosome whose position j holds bit j of `code`; requires length <= 64.
    static Chromosome from_code(std::uint64_t code, std::size_t length) {
        if (length > 64) throw invalid_argument("from_code requires length <= 64");
        Chromosome c(length);
        c.words_[0] = code & tail_mask(length);
        return c;
    }

    static Chromosome ones(std::size_t length) {
        Chromosome c(length);
        std::fill(c.words_.begin(), c.words_.end(), ~Word{0});
        c.words_.back() &= tail_mask(length);
        return c;
    }

    std::size_t length() const { return length_; }
    bool bit(std::size_t pos) const { return view().bit(pos); }
    void set(std::size_t pos, bool value) {
        const Word m = Word{1} << (pos % 64);
        if (value)
            words_[pos / 64] |= m;
        else
            words_[pos / 64] &= ~m;
    }

    Chromosome complement() const {
        Chromosome c(*this);
        for (Word& w : c.words_) w = ~w;
        c.words_.back() &= tail_mask(length_);
        return c;
    }

    ChromosomeView view() const { return {words_, length_}; }
    operator ChromosomeView() const { return view(); }
    std::span<const Word> words() const { return words_; }
    std::span<Word> words() { return words_; }
    std::string to_string() const { return view().to_string(); }

    friend bool operator==(const Chromosome& a, const Chromosome& b) {
        return a.length_ == b.length_ && a.words_ == b.words_;
    }

  private:
    std::size_t length_ = 0;
    std::vector<Word> words_;
};

/// Ordered m-tuple of chromosomes, stored member-major in packed form.
class Population {
  public:
    Population() = default;
    Population(std::size_t size, std::size_t length)
        : size_(size), length_(length), stride_(words_for(length)), bits_(size * stride_, 0) {
        if (length == 0) throw invalid_argument("chromosome length must be >= 1");
        if (size == 0 || size % 2 != 0) throw invalid_argument("population size must be even and >= 2");
    }

    static Population from_members(const std::vector<Chromosome>& members) {
        if (members.empty()) throw invalid_argument("population needs members");
        Population p(members.size(), members.front().length());
        for (std::size_t i = 0; i < members.size(); ++i) p.assign(i, members[i]);
        return p;
    }

    static Population from_strings(const std::vector<std::string>& members) {
        std::vector<Chromosome> cs;
        cs.reserve(members.size());
        for (const auto& s : members) cs.push_back(Chromosome::from_string(s));
        return from_members(cs);
    }

    /// One Master sequence 1...1 followed by m-1 copies of 0...0.
    static Population master_over_zeros(std::size_t size, std::size_t length) {
        Population p(size, length);
        p.assign(0, Chromosome::ones(length));
        return p;
    }

    std::size_t size() const { return size_; }
    std::size_t length() const { return length_; }
    std::size_t stride() const { return stride_; }

    ChromosomeView operator[](std::size_t i) const {
        return {std::span<const Word>(bits_.data() + i * stride_, stride_), length_};
    }
    std::span<Word> row(std::size_t i) { return {bits_.data() + i * stride_, stride_}; }
    Chromosome member(std::size_t i) const { return Chromosome((*this)[i]); }

    void assign(std::size_t i, ChromosomeView c) {
        if (i >= size_) throw invalid_argument("member index out of range");
        if (c.length != length_) throw invalid_argument("chromosome length does not match population");
        std::copy(c.words.begin(), c.words.end(), bits_.begin() + static_cast<std::ptrdiff_t>(i * stride_));
    }

    std::span<const Word> raw() const { return bits_; }

    friend bool operator==(const Population& a, const Population& b) {
        return a.size_ == b.size_ && a.length_ == b.length_ && a.bits_ == b.bits_;
    }

  private:
    std::size_t size_ = 0;
    std::size_t length_ = 0;
    std::size_t stride_ = 0;
    std::vector<Word> bits_;
};

/// Hamming distance H(u, v).
inline std::size_t hamming(ChromosomeView u, ChromosomeView v) {
    if (u.length != v.length) throw invalid_argument("hamming: chromosome lengths differ");
    std::size_t d = 0;
    for (std::size_t k = 0; k < u.words.size(); ++k)
        d += static_cast<std::size_t>(std::popcount(u.words[k] ^ v.words[k]));
    return d;
}

enum class LandscapeKind { sharp_peak, one_max, staircase_table, custom_table };

/// Total map from chromosomes of a fixed length to real fitness values.
///
/// - sharp_peak: 2 at 1...1, 1 elsewhere
/// - one_max: number of ones
/// - staircase_table: g(number of leading ones), g given as l+1 values
/// - custom_table: explicit values for listed chromosomes, `fallback` elsewhere
class FitnessLandscape {
  public:
    static FitnessLandscape sharp_peak(std::size_t length) {
        return FitnessLandscape(LandscapeKind::sharp_peak, length);
    }
    static FitnessLandscape one_max(std::size_t length) {
        return FitnessLandscape(LandscapeKind::one_max, length);
    }
    static FitnessLandscape staircase(std::size_t length, std::vector<double> levels) {
        if (levels.size() != length + 1)
            throw invalid_argument("staircase table needs l+1 level values");
        FitnessLandscape f(LandscapeKind::staircase_table, length);
        f.levels_ = std::move(levels);
        return f;
    }
    static FitnessLandscape custom(std::size_t length, const std::map<std::string, double>& table,
                                   double fallback) {
        if (length > 64) throw invalid_argument("custom table landscapes support l <= 64");
        FitnessLandscape f(LandscapeKind::custom_table, length);
        f.fallback_ = fallback;
        for (const auto& [bits, value] : table) {
            if (bits.size() != length) throw invalid_argument("custom table key has wrong length: " + bits);
            const auto code = Chromosome::from_string(bits).view().code();
            if (!f.table_.emplace(code, value).second)
                throw invalid_argument("duplicate custom table key: " + bits);
        }
        return f;
    }
    /// Same fitness everywhere; a custom table with no entries.
    static FitnessLandscape constant(std::size_t length, double value = 1.0) {
        return custom(length, {}, value);
    }

    LandscapeKind kind() const { return kind_; }
    std::size_t length() const { return length_; }
    const std::vector<double>& levels() const { return levels_; }

    double operator()(ChromosomeView u) const {
        switch (kind_) {
        case LandscapeKind::sharp_peak:
            return u.all_ones() ? 2.0 : 1.0;
        case LandscapeKind::one_max:
            return static_cast<double>(u.ones());
        case LandscapeKind::staircase_table:
            return levels_[u.leading_ones()];
        case LandscapeKind::custom_table: {
            auto it = table_.find(u.code());
            return it == table_.end() ? fallback_ : it->second;
        }
        }
        return 0.0;
    }

    /// Sorted distinct fitness values, when known without enumeration.
    std::vector<double> value_set() const {
        std::vector<double> v;
        switch (kind_) {
        case LandscapeKind::sharp_peak:
            v = {1.0, 2.0};
            if (length_ == 0) v = {2.0};
            break;
        case LandscapeKind::one_max:
            for (std::size_t k = 0; k <= length_; ++k) v.push_back(static_cast<double>(k));
            break;
        case LandscapeKind::staircase_table:
            v = levels_;
            break;
        case LandscapeKind::custom_table:
            v.push_back(fallback_);
            for (const auto& kv : table_) v.push_back(kv.second);
            break;
        }
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    double min_value() const {
        if (kind_ == LandscapeKind::custom_table && length_ <= 63 &&
            table_.size() == (std::size_t{1} << length_)) {
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& kv : table_) lo = std::min(lo, kv.second);
            return lo;
        }
        return value_set().front();
    }
    double max_value() const {
        if (kind_ == LandscapeKind::custom_table && length_ <= 63 &&
            table_.size() == (std::size_t{1} << length_)) {
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& kv : table_) hi = std::max(hi, kv.second);
            return hi;
        }
        return value_set().back();
    }

  private:
    FitnessLandscape(LandscapeKind k, std::size_t length) : kind_(k), length_(length) {
        if (length == 0) throw invalid_argument("landscape length must be >= 1");
    }

    LandscapeKind kind_;
    std::size_t length_;
    std::vector<double> levels_;
    std::unordered_map<std::uint64_t, double> table_;
    double fallback_ = 0.0;
};

/// Fitness of every member, in member order.
inline std::vector<double> fitness_values(const Population& x, const FitnessLandscape& f) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
    return out;
}

/// N(x, lambda) from precomputed fitness values.
inline std::size_t count_at_least(std::span<const double> fitness, double lambda) {
    return static_cast<std::size_t>(
        std::count_if(fitness.begin(), fitness.end(), [lambda](double v) { return v >= lambda; }));
}

/// N(x, lambda): members whose fitness is >= lambda.
inline std::size_t count_at_least(const Population& x, const FitnessLandscape& f, double lambda) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (f(x[i]) >= lambda) ++c;
    return c;
}

/// Lambda(x, i): fitness of the i-th best member, i in 1..m.
inline double level_fitness(std::span<const double> fitness, std::size_t i) {
    if (i < 1 || i > fitness.size()) throw invalid_argument("level_fitness: rank out of range");
    std::vector<double> v(fitness.begin(), fitness.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(i - 1), v.end(),
                     std::greater<>());
    return v[i - 1];
}

inline double level_fitness(const Population& x, const FitnessLandscape& f, std::size_t i) {
    const auto fit = fitness_values(x, f);
    return level_fitness(fit, i);
}

/// Largest l for which delta_distance will enumerate the cube.
inline constexpr std::size_t kDeltaEnumerationCap = 20;

/// Delta(lambda, gamma) = max over u in L(lambda) of the distance from u to L(gamma).
///
/// Enumerates {0,1}^l and runs a multi-source breadth-first search from L(gamma)
/// over the hypercube, so the cost is O(l 2^l).
inline std::size_t delta_distance(const FitnessLandscape& f, double lambda, double gamma,
                                  std::size_t cap = kDeltaEnumerationCap) {
    const std::size_t l = f.length();
    if (l > cap) throw capacity_error("delta_distance: l exceeds the enumeration cap");
    if (!(lambda < gamma)) throw invalid_argument("delta_distance requires lambda < gamma");
    const std::size_t n = std::size_t{1} << l;
    constexpr auto unseen = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> dist(n, unseen);
    std::vector<std::uint32_t> queue;
    queue.reserve(n);
    std::vector<double> fit(n);
    for (std::size_t c = 0; c < n; ++c) {
        fit[c] = f(Chromosome::from_code(c, l));
        if (fit[c] >= gamma) {
            dist[c] = 0;
            queue.push_back(static_cast<std::uint32_t>(c));
        }
    }
    if (queue.empty()) throw domain_error("delta_distance: L(gamma) is empty");
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::uint32_t c = queue[head];
        for (std::size_t j = 0; j < l; ++j) {
            const std::uint32_t nb = c ^ (std::uint32_t{1} << j);
            if (dist[nb] == unseen) {
                dist[nb] = dist[c] + 1;
                queue.push_back(nb);
            }
        }
    }
    std::size_t worst = 0;
    for (std::size_t c = 0; c < n; ++c)
        if (fit[c] >= lambda) worst = std::max<std::size_t>(worst, dist[c]);
    return worst;
}

} // namespace qsga
