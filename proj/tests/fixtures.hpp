#pragma once

#include "treebsde/generators.hpp"
#include "treebsde/lattice.hpp"

namespace fixtures {

using treebsde::AdaptedProcess;
using treebsde::CashFlowProcess;
using treebsde::EventTree;
using treebsde::Rational;

/// Two-step binomial: S0 = 100, u = 1.2, d = 0.9, T = 1, p = 1/2.
/// Node ids: 0 root; 1 up, 2 down; 3 uu, 4 ud, 5 du, 6 dd.
template <class S>
EventTree<S> scenario_a_tree() {
    if constexpr (treebsde::is_rational_v<S>) {
        return treebsde::build_binomial<S>(S(100), S(Rational(12, 10)), S(Rational(9, 10)), 2, S(1),
                                           S(Rational(1, 2)));
    } else {
        return treebsde::build_binomial<S>(S(100), S(1.2), S(0.9), 2, S(1), S(0.5));
    }
}

/// American put floor (100 - S)^+, the issuer's relative reward with zero
/// endowment and zero benchmark rates.
template <class S>
AdaptedProcess<S> put_floor(const EventTree<S>& t, const S& strike) {
    AdaptedProcess<S> x(t.size());
    for (int id = 0; id < t.size(); ++id)
        x[id] = treebsde::max_val(strike - t.prices[static_cast<std::size_t>(id)][0], S(0));
    return x;
}

template <class S>
AdaptedProcess<S> negate(const AdaptedProcess<S>& x) {
    AdaptedProcess<S> out(x.size());
    for (int id = 0; id < x.size(); ++id) out[id] = -x[id];
    return out;
}

}  // namespace fixtures
