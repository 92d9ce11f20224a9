// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <compare>
#include <cstdint>
#include <vector>

namespace spritz {

// Element of GF(q), encoded as the base-p digits of its polynomial
// coefficients (constant term is the least significant digit).
struct GFElement {
    uint32_t value = 0;
    auto operator<=>(const GFElement &) const = default;
};

// Finite field GF(p^n) built from lookup tables. The modulus is the first
// monic irreducible polynomial of degree n in lexicographic coefficient
// order, so GF(9) is GF(3)[x]/(x^2 + 1).
class GaloisField {
  public:
    // Throws InvalidParameter if q is not a prime power.
    explicit GaloisField(uint32_t q);

    uint32_t order() const { return q_; }
    uint32_t characteristic() const { return p_; }
    uint32_t degree() const { return n_; }

    // Coefficients of the monic modulus, constant term first (size n + 1).
    const std::vector<uint32_t> &modulus() const { return modulus_; }

    GFElement zero() const { return {0}; }
    GFElement one() const { return {1}; }
    GFElement element(uint32_t v) const;

    GFElement add(GFElement a, GFElement b) const { return {add_[a.value * q_ + b.value]}; }
    GFElement mul(GFElement a, GFElement b) const { return {mul_[a.value * q_ + b.value]}; }
    GFElement neg(GFElement a) const { return {neg_[a.value]}; }
    GFElement sub(GFElement a, GFElement b) const { return add(a, neg(b)); }
    GFElement inv(GFElement a) const;
    GFElement pow(GFElement a, uint64_t k) const;

    // Multiplicative order of a non-zero element.
    uint32_t multiplicative_order(GFElement a) const;

    // Smallest-valued generator of the multiplicative group.
    GFElement primitive_element() const { return primitive_; }

  private:
    uint32_t q_, p_, n_;
    std::vector<uint32_t> modulus_;
    std::vector<uint32_t> add_, mul_, neg_;
    GFElement primitive_;
};

// Returns (p, n) with q = p^n, or (0, 0) if q is not a prime power.
std::pair<uint32_t, uint32_t> prime_power_decomposition(uint32_t q);

} // namespace spritz
