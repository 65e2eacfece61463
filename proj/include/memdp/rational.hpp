#ifndef MEMDP_RATIONAL_HPP
#define MEMDP_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

#include "memdp/errors.hpp"

namespace memdp {

// All model data and all certification arithmetic is exact. GMP rationals are
// kept canonical (reduced, positive denominator) by mpq_class itself.
using Rat = mpq_class;
using Int = mpz_class;

inline Rat rat_of(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

// Parses "3/4", "1", "0" (integers or fractions). Anything else is rejected.
inline std::optional<Rat> parse_rational(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::size_t slash = text.find('/');
    auto is_int = [](const std::string& s) {
        if (s.empty()) return false;
        std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
        if (i == s.size()) return false;
        for (; i < s.size(); ++i)
            if (s[i] < '0' || s[i] > '9') return false;
        return true;
    };
    try {
        if (slash == std::string::npos) {
            if (!is_int(text)) return std::nullopt;
            return Rat(Int(text));
        }
        std::string num = text.substr(0, slash);
        std::string den = text.substr(slash + 1);
        if (!is_int(num) || !is_int(den)) return std::nullopt;
        Int d(den);
        if (d == 0) return std::nullopt;
        Rat r(Int(num), d);
        r.canonicalize();
        return r;
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

inline std::string rational_to_string(const Rat& r) {
    if (r.get_den() == 1) return r.get_num().get_str();
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline Int ceil_rat(const Rat& r) {
    Int q;
    mpz_cdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q;
}

inline Int floor_rat(const Rat& r) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), r.get_num().get_mpz_t(), r.get_den().get_mpz_t());
    return q;
}

inline Rat pow_rat(const Rat& base, unsigned long e) {
    Rat r;
    mpz_pow_ui(r.get_num().get_mpz_t(), base.get_num().get_mpz_t(), e);
    mpz_pow_ui(r.get_den().get_mpz_t(), base.get_den().get_mpz_t(), e);
    r.canonicalize();
    return r;
}

inline double to_double(const Rat& r) { return r.get_d(); }

namespace detail {

// Interval evaluation of ln on positive rationals via the atanh series
//   ln(x) = 2 * sum_{k>=0} z^(2k+1)/(2k+1),  z = (x-1)/(x+1),
// after range reduction x = 2^m * r with r in [1,2). Partial sums are exact
// rationals; the geometric tail gives the enclosure.
struct LnInterval {
    Rat lo, hi;
};

inline LnInterval ln_series_interval(const Rat& x, int terms) {
    Rat z = (x - 1) / (x + 1);
    Rat z2 = z * z;
    Rat sum = 0;
    Rat power = z;
    for (int k = 0; k < terms; ++k) {
        sum += power / (2 * k + 1);
        power *= z2;
    }
    // |tail| <= |z|^(2t+1) / (1-z^2)
    Rat tail = power / (1 - z2);
    if (tail < 0) tail = -tail;
    Rat lo = 2 * (sum - tail);
    Rat hi = 2 * (sum + tail);
    return {lo, hi};
}

inline LnInterval ln_interval(Rat x, int terms = 24) {
    if (x <= 0) throw std::invalid_argument("ln of non-positive rational");
    long m = 0;
    while (x >= 2) {
        x /= 2;
        ++m;
    }
    while (x < 1) {
        x *= 2;
        --m;
    }
    LnInterval r = ln_series_interval(x, terms);
    if (m != 0) {
        LnInterval ln2 = ln_series_interval(rat_of(2), terms);
        if (m > 0) {
            r.lo += m * ln2.lo;
            r.hi += m * ln2.hi;
        } else {
            r.lo += m * ln2.hi;
            r.hi += m * ln2.lo;
        }
    }
    return r;
}

}  // namespace detail

// Rational upper bound ceil(1000*ln x)/1000; the rounding direction keeps all
// derived sample counts and memory bounds sound.
inline Rat ln_upper(const Rat& x) {
    for (int terms = 24;; terms += 24) {
        auto iv = detail::ln_interval(x, terms);
        Int clo = ceil_rat(1000 * iv.lo);
        Int chi = ceil_rat(1000 * iv.hi);
        if (clo == chi) return Rat(chi) / 1000;
        if (terms > 400) return Rat(chi) / 1000;  // still an upper bound
    }
}

inline Rat ln_lower(const Rat& x) {
    for (int terms = 24;; terms += 24) {
        auto iv = detail::ln_interval(x, terms);
        Int flo = floor_rat(1000 * iv.lo);
        Int fhi = floor_rat(1000 * iv.hi);
        if (flo == fhi) return Rat(flo) / 1000;
        if (terms > 400) return Rat(flo) / 1000;
    }
}

}  // namespace memdp

#endif
