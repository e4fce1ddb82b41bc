#pragma once

#include "oracle.hpp"

#include "certbench/pmdp.hpp"

namespace testing_support {

/// Oracle model as a constant-expression PMDP with labels "avoid" and "reach".
certbench::PMDP to_pmdp(const oracle::Mdp& m);
certbench::ConcreteMDP to_concrete(const oracle::Mdp& m);

inline certbench::Rational q(long num, long den = 1) {
    certbench::Rational r(num, den);
    r.canonicalize();
    return r;
}

}  // namespace testing_support
