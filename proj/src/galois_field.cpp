// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include "spritz/galois_field.hpp"

#include "spritz/errors.hpp"

#include <string>

namespace spritz {

namespace {

using Poly = std::vector<uint32_t>; // coefficients, constant term first

void trim(Poly &a) {
    while (!a.empty() && a.back() == 0)
        a.pop_back();
}

// Remainder of a modulo monic m over GF(p).
Poly poly_mod(Poly a, const Poly &m, uint32_t p) {
    trim(a);
    const size_t dm = m.size() - 1;
    while (a.size() > dm) {
        const uint32_t lead = a.back();
        const size_t shift = a.size() - 1 - dm;
        for (size_t i = 0; i <= dm; ++i)
            a[shift + i] = (a[shift + i] + p - (lead * m[i]) % p) % p;
        trim(a);
    }
    return a;
}

Poly decode(uint32_t v, uint32_t p, uint32_t n) {
    Poly c(n, 0);
    for (uint32_t i = 0; i < n; ++i) {
        c[i] = v % p;
        v /= p;
    }
    return c;
}

uint32_t encode(const Poly &c, uint32_t p) {
    uint32_t v = 0;
    for (size_t i = c.size(); i-- > 0;)
        v = v * p + c[i];
    return v;
}

bool is_irreducible(const Poly &f, uint32_t p) {
    const uint32_t n = static_cast<uint32_t>(f.size() - 1);
    for (uint32_t d = 1; d <= n / 2; ++d) {
        uint32_t count = 1;
        for (uint32_t i = 0; i < d; ++i)
            count *= p;
        for (uint32_t low = 0; low < count; ++low) {
            Poly g = decode(low, p, d);
            g.push_back(1);
            if (poly_mod(f, g, p).empty())
                return false;
        }
    }
    return true;
}

} // namespace

std::pair<uint32_t, uint32_t> prime_power_decomposition(uint32_t q) {
    if (q < 2)
        return {0, 0};
    uint32_t p = 0;
    for (uint32_t d = 2; d * d <= q; ++d) {
        if (q % d == 0) {
            p = d;
            break;
        }
    }
    if (p == 0)
        return {q, 1};
    uint32_t n = 0;
    while (q % p == 0) {
        q /= p;
        ++n;
    }
    if (q != 1)
        return {0, 0};
    return {p, n};
}

GaloisField::GaloisField(uint32_t q) : q_(q) {
    auto [p, n] = prime_power_decomposition(q);
    if (p == 0)
        throw InvalidParameter("GF order " + std::to_string(q) + " is not a prime power");
    p_ = p;
    n_ = n;

    // First monic irreducible polynomial of degree n.
    for (uint32_t low = 0; low < q_; ++low) {
        Poly f = decode(low, p_, n_);
        f.push_back(1);
        if (n_ == 1 || is_irreducible(f, p_)) {
            modulus_ = f;
            break;
        }
    }

    add_.resize(size_t(q_) * q_);
    mul_.resize(size_t(q_) * q_);
    neg_.resize(q_);
    for (uint32_t a = 0; a < q_; ++a) {
        const Poly pa = decode(a, p_, n_);
        Poly na(n_);
        for (uint32_t i = 0; i < n_; ++i)
            na[i] = (p_ - pa[i]) % p_;
        neg_[a] = encode(na, p_);
        for (uint32_t b = 0; b < q_; ++b) {
            const Poly pb = decode(b, p_, n_);
            Poly sum(n_);
            for (uint32_t i = 0; i < n_; ++i)
                sum[i] = (pa[i] + pb[i]) % p_;
            add_[a * q_ + b] = encode(sum, p_);

            Poly prod(2 * n_, 0);
            for (uint32_t i = 0; i < n_; ++i)
                for (uint32_t j = 0; j < n_; ++j)
                    prod[i + j] = (prod[i + j] + pa[i] * pb[j]) % p_;
            Poly r = poly_mod(prod, modulus_, p_);
            r.resize(n_, 0);
            mul_[a * q_ + b] = encode(r, p_);
        }
    }

    for (uint32_t v = 1; v < q_; ++v) {
        if (multiplicative_order({v}) == q_ - 1) {
            primitive_ = {v};
            break;
        }
    }
}

GFElement GaloisField::element(uint32_t v) const {
    if (v >= q_)
        throw InvalidParameter("value " + std::to_string(v) + " outside GF(" + std::to_string(q_) + ")");
    return {v};
}

GFElement GaloisField::pow(GFElement a, uint64_t k) const {
    GFElement r = one();
    GFElement base = a;
    while (k) {
        if (k & 1)
            r = mul(r, base);
        base = mul(base, base);
        k >>= 1;
    }
    return r;
}

GFElement GaloisField::inv(GFElement a) const {
    if (a.value == 0)
        throw InvalidParameter("zero has no multiplicative inverse");
    return pow(a, q_ - 2);
}

uint32_t GaloisField::multiplicative_order(GFElement a) const {
    if (a.value == 0)
        return 0;
    GFElement x = a;
    uint32_t k = 1;
    while (x != one()) {
        x = mul(x, a);
        ++k;
    }
    return k;
}

} // namespace spritz
