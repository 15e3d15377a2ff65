#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace negcq {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const Rational& r) {
    const BigInt num = boost::multiprecision::numerator(r);
    const BigInt den = boost::multiprecision::denominator(r);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

inline Rational pow(const Rational& base, unsigned exp) {
    Rational out = 1;
    for (unsigned i = 0; i < exp; ++i) out *= base;
    return out;
}

}  // namespace negcq
