#include "core/group.hpp"

#include <boost/multiprecision/miller_rabin.hpp>

#include "core/base64.hpp"
#include "core/errors.hpp"

namespace cps {

namespace {

// RFC 3526, section 3: 2048-bit MODP group (id 14), a safe prime.
constexpr const char* kModp2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

GroupParams make_modp2048() {
    GroupParams gp;
    gp.name = "modp2048";
    gp.p = Bigint("0x" + std::string(kModp2048Hex));
    gp.q = (gp.p - 1) / 2;
    gp.g = 2;
    gp.byte_len = 256;
    gp.exponent_bits = 256;
    return gp;
}

GroupParams make_test23() {
    GroupParams gp;
    gp.name = "test23";
    gp.p = 23;
    gp.q = 11;
    gp.g = 5;
    gp.byte_len = 1;
    gp.exponent_bits = 0;  // full range [1, 10]
    gp.check_structure();
    return gp;
}

}  // namespace

const GroupParams& GroupParams::modp2048() {
    static const GroupParams gp = make_modp2048();
    return gp;
}

const GroupParams& GroupParams::test23() {
    static const GroupParams gp = make_test23();
    return gp;
}

const GroupParams& GroupParams::by_name(const std::string& name) {
    if (name == "modp2048") return modp2048();
    if (name == "test23") return test23();
    throw Error(ErrorCode::invalid_argument, "unknown group: " + name);
}

void GroupParams::check_structure() const {
    if (p != 2 * q + 1) throw Error(ErrorCode::invalid_argument, "group: p != 2q + 1");
    if (!boost::multiprecision::miller_rabin_test(p, 32))
        throw Error(ErrorCode::invalid_argument, "group: p is not prime");
    if (!boost::multiprecision::miller_rabin_test(q, 32))
        throw Error(ErrorCode::invalid_argument, "group: q is not prime");
}

Bigint bigint_from_bytes(std::span<const std::uint8_t> be_bytes) {
    Bigint v = 0;
    if (!be_bytes.empty())
        mpz_import(v.backend().data(), be_bytes.size(), 1, 1, 1, 0, be_bytes.data());
    return v;
}

std::vector<std::uint8_t> bigint_to_bytes(const Bigint& v, std::size_t width) {
    if (v < 0) throw Error(ErrorCode::invalid_argument, "cannot encode negative value");
    std::vector<std::uint8_t> out(width, 0);
    const std::size_t bits = v == 0 ? 0 : mpz_sizeinbase(v.backend().data(), 2);
    const std::size_t need = (bits + 7) / 8;
    if (need > width) throw Error(ErrorCode::invalid_argument, "value too large for wire width");
    if (need > 0) {
        std::size_t written = 0;
        mpz_export(out.data() + (width - need), &written, 1, 1, 1, 0, v.backend().data());
    }
    return out;
}

PrivateExponent keygen(const GroupParams& params, RandomSource& rng) {
    // Upper bound is exclusive; rejection sampling keeps the draw uniform.
    Bigint bound;
    if (params.exponent_bits == 0) {
        bound = params.q;
    } else {
        bound = Bigint(1) << params.exponent_bits;
        if (bound > params.q) bound = params.q;
    }
    const std::size_t bits = mpz_sizeinbase(bound.backend().data(), 2);
    const std::size_t nbytes = (bits + 7) / 8;
    const unsigned top_mask =
        bits % 8 == 0 ? 0xff : static_cast<unsigned>((1u << (bits % 8)) - 1);
    std::vector<std::uint8_t> buf(nbytes);
    for (;;) {
        rng.fill(buf);
        buf[0] &= static_cast<std::uint8_t>(top_mask);
        Bigint v = bigint_from_bytes(buf);
        if (v >= 1 && v < bound) return PrivateExponent{std::move(v)};
    }
}

GroupElement to_group(const HashedInterval& h, const GroupParams& params) {
    Bigint x = bigint_from_bytes(h.digest) % params.p;
    if (x == 0) x = 1;
    return GroupElement{(x * x) % params.p};
}

std::string element_to_b64(const GroupElement& e, const GroupParams& params) {
    return base64_encode(bigint_to_bytes(e.value, params.byte_len));
}

GroupElement element_from_b64(const std::string& text, const GroupParams& params) {
    const std::vector<std::uint8_t> bytes = base64_decode(text);
    if (bytes.size() != params.byte_len)
        throw Error(ErrorCode::parse_error, "group element has wrong wire width");
    Bigint v = bigint_from_bytes(bytes);
    if (v < 1 || v >= params.p)
        throw Error(ErrorCode::parse_error, "group element out of range");
    return GroupElement{std::move(v)};
}

}  // namespace cps
