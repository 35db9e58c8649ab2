#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/sha256.hpp"

namespace cps {

using Bigint = boost::multiprecision::mpz_int;

Bigint bigint_from_bytes(std::span<const std::uint8_t> be_bytes);
// Fixed-width big-endian encoding; throws if the value needs more bytes.
std::vector<std::uint8_t> bigint_to_bytes(const Bigint& v, std::size_t width);

// Multiplicative group mod a safe prime p = 2q + 1. Blinding happens in the
// order-q quadratic-residue subgroup. g is carried for protocol-parameter
// completeness but DH-PSI never uses a public base.
struct GroupParams {
    std::string name;
    Bigint p;
    Bigint q;
    Bigint g;
    std::size_t byte_len = 0;  // ceil(bits(p) / 8), wire width of elements
    // Private exponents are drawn from [1, 2^exponent_bits). 0 means the
    // full range [1, q-1]. The production group uses 256-bit exponents:
    // full-width draws cost ~8x more per exponentiation and add nothing
    // against a discrete-log adversary bounded by 2^128.
    unsigned exponent_bits = 0;

    static const GroupParams& modp2048();  // RFC 3526 group 14
    static const GroupParams& test23();    // p = 23, q = 11: exhaustively checkable
    static const GroupParams& by_name(const std::string& name);

    void check_structure() const;  // verifies p, q prime and p = 2q + 1
};

// Element of the order-q subgroup, in [1, p-1].
struct GroupElement {
    Bigint value;

    bool operator==(const GroupElement&) const = default;
};

// Secret blinding exponent in [1, q-1]. Never serialized by the protocol.
struct PrivateExponent {
    Bigint value;
};

// Uniform draw from [1, 2^exponent_bits) (or [1, q-1] when full-range).
PrivateExponent keygen(const GroupParams& params, RandomSource& rng);

// Hash-to-subgroup: (digest mod p, 0 -> 1), then squared mod p.
GroupElement to_group(const HashedInterval& h, const GroupParams& params);

// Wire form: base64 of fixed-width big-endian bytes.
std::string element_to_b64(const GroupElement& e, const GroupParams& params);
GroupElement element_from_b64(const std::string& text, const GroupParams& params);

}  // namespace cps
