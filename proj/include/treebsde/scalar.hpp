#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace treebsde {

/// Exact arithmetic scalar for zero-tolerance verification on small trees.
using Rational = boost::multiprecision::cpp_rational;

template <class S>
inline constexpr bool is_rational_v = std::is_same_v<S, Rational>;

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.convert_to<double>(); }

namespace detail {

// Maps boost multiprecision expression templates back to their number type
// so arithmetic expressions can be passed straight into the helpers below.
template <class T>
struct eval_type {
    using type = T;
};
template <class Tag, class A1, class A2, class A3, class A4>
struct eval_type<boost::multiprecision::detail::expression<Tag, A1, A2, A3, A4>> {
    using type = typename boost::multiprecision::detail::expression<Tag, A1, A2, A3, A4>::result_type;
};
template <class T>
using eval_t = typename eval_type<std::decay_t<T>>::type;

}  // namespace detail

template <class A>
detail::eval_t<A> abs_val(const A& x_) {
    using S = detail::eval_t<A>;
    const S x(x_);
    return x < S(0) ? S(-x) : x;
}

template <class A, class B>
std::common_type_t<detail::eval_t<A>, detail::eval_t<B>> max_val(const A& a_, const B& b_) {
    using S = std::common_type_t<detail::eval_t<A>, detail::eval_t<B>>;
    const S a(a_), b(b_);
    return a < b ? b : a;
}

template <class A, class B>
std::common_type_t<detail::eval_t<A>, detail::eval_t<B>> min_val(const A& a_, const B& b_) {
    using S = std::common_type_t<detail::eval_t<A>, detail::eval_t<B>>;
    const S a(a_), b(b_);
    return b < a ? b : a;
}

/// Converts a double to scalar type S. Doubles are binary rationals, so the
/// conversion to Rational is exact.
template <class S>
S scalar_from_double(double x) {
    if constexpr (is_rational_v<S>) {
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite value in rational mode");
        return Rational(x);
    } else {
        return x;
    }
}

template <class S>
S scalar_from_ratio(long num, long den) {
    if constexpr (is_rational_v<S>) {
        return Rational(num) / Rational(den);
    } else {
        return static_cast<double>(num) / static_cast<double>(den);
    }
}

inline std::string scalar_repr(double x) { return std::to_string(x); }
inline std::string scalar_repr(const Rational& x) { return x.str(); }

}  // namespace treebsde
