#include <doctest.h>

#include <algorithm>
#include <set>
#include <unordered_set>
#include <vector>

#include "core/base64.hpp"
#include "core/errors.hpp"
#include "core/grid.hpp"
#include "core/group.hpp"
#include "core/psi.hpp"
#include "core/rng.hpp"
#include "sha256_ref.hpp"

using namespace cps;

namespace {

const GridConfig kBosGrid{0.0005, 300, "bos", 0};

HashedInterval digest_with_value(std::uint8_t last) {
    HashedInterval h{};
    h.digest.back() = last;
    return h;
}

GroupElement make_element(int v) { return GroupElement{Bigint(v)}; }

// All quadratic residues mod 23 (squares of 1..22).
std::vector<int> residues23() { return {1, 2, 3, 4, 6, 8, 9, 12, 13, 16, 18}; }

}  // namespace

TEST_CASE("sha256 known-answer: empty input") {
    const auto d = sha256({});
    CHECK(to_hex(d) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("sha256 known-answer: abc") {
    const std::uint8_t abc[] = {'a', 'b', 'c'};
    CHECK(to_hex(sha256(abc)) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256 agrees with an independent implementation") {
    SeededRandom rng(4242);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::uint8_t> buf(rng.below(300));
        rng.fill(buf);
        CHECK(sha256(buf) == sha256_ref::digest(buf));
    }
}

TEST_CASE("hash_interval golden value, cross-checked against the oracle") {
    const PointInterval pi{0, 0, 0};
    const HashedInterval h = hash_interval(pi, kBosGrid);
    // Frozen from an independent SHA-256 of the canonical encoding.
    CHECK(h.hex() == "b0296ef49bca3fabdb103b4828a7e1a49636da7fc2aa6a1269e8725511960890");
    CHECK(h.digest == sha256_ref::digest(canonical_bytes(pi, kBosGrid)));
    CHECK(hash_interval(pi, kBosGrid) == h);  // determinism
}

TEST_CASE("group parameters verify their structure") {
    CHECK_NOTHROW(GroupParams::test23().check_structure());
    CHECK_NOTHROW(GroupParams::modp2048().check_structure());
    CHECK(GroupParams::modp2048().byte_len == 256);
    CHECK(GroupParams::test23().q == 11);
    CHECK_THROWS_AS(GroupParams::by_name("modp1024"), Error);
}

TEST_CASE("to_group maps digests into the quadratic-residue subgroup") {
    const GroupParams& g = GroupParams::test23();
    // digest == 2 mod 23 -> 2^2 = 4
    CHECK(to_group(digest_with_value(2), g).value == 4);
    // digest == 0 mod 23 -> substituted 1 -> 1
    CHECK(to_group(digest_with_value(0), g).value == 1);
    // 23 == 0 mod 23 as well
    CHECK(to_group(digest_with_value(23), g).value == 1);
}

TEST_CASE("to_group outputs satisfy e^q = 1, exhaustively over byte digests") {
    const GroupParams& g = GroupParams::test23();
    for (int v = 0; v < 256; ++v) {
        const GroupElement e = to_group(digest_with_value(static_cast<std::uint8_t>(v)), g);
        CHECK(boost::multiprecision::powm(e.value, g.q, g.p) == 1);
    }
}

TEST_CASE("keygen stays in [1, q-1]") {
    const GroupParams& g = GroupParams::test23();
    SecureRandom rng;
    std::set<int> seen;
    for (int i = 0; i < 10000; ++i) {
        const PrivateExponent k = keygen(g, rng);
        CHECK(k.value >= 1);
        CHECK(k.value <= 10);
        seen.insert(static_cast<int>(k.value));
    }
    CHECK(seen.size() == 10);  // all of [1, 10] shows up in 10^4 draws
}

TEST_CASE("keygen in the production group respects the exponent width") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    const Bigint bound = Bigint(1) << g.exponent_bits;
    for (int i = 0; i < 50; ++i) {
        const PrivateExponent k = keygen(g, rng);
        CHECK(k.value >= 1);
        CHECK(k.value < bound);
        CHECK(k.value < g.q);
    }
}

TEST_CASE("keygen is reproducible from a seeded source") {
    const GroupParams& g = GroupParams::test23();
    SeededRandom rng(12345);
    // Frozen: first draw of the deterministic test source.
    CHECK(keygen(g, rng).value == 2);
    SeededRandom rng2(12345);
    CHECK(keygen(g, rng2).value == 2);
}

TEST_CASE("blind: worked example in the test group") {
    const GroupParams& g = GroupParams::test23();
    const std::vector<GroupElement> elems{make_element(4)};
    const auto out = blind(elems, PrivateExponent{3}, g);
    REQUIRE(out.size() == 1);
    CHECK(out[0].value == 18);  // 4^3 = 64 = 18 mod 23
}

TEST_CASE("blind: identity element and empty list") {
    const GroupParams& g = GroupParams::test23();
    const std::vector<GroupElement> one{make_element(1)};
    CHECK(blind(one, PrivateExponent{7}, g)[0].value == 1);
    CHECK(blind({}, PrivateExponent{7}, g).empty());
}

TEST_CASE("blind preserves order and matches the threaded path") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    std::vector<GroupElement> elems;
    for (int i = 0; i < 64; ++i) {
        HashedInterval h;
        rng.fill(h.digest);
        elems.push_back(to_group(h, g));
    }
    const PrivateExponent k = keygen(g, rng);
    const auto seq = blind(elems, k, g, 1);
    const auto par = blind(elems, k, g, 4);
    CHECK(seq.size() == elems.size());
    CHECK(seq == par);
}

TEST_CASE("commutativity: exhaustive over the test group") {
    const GroupParams& g = GroupParams::test23();
    for (int e : residues23()) {
        for (int a = 1; a <= 10; ++a) {
            for (int b = 1; b <= 10; ++b) {
                const std::vector<GroupElement> start{make_element(e)};
                const auto ab = blind(blind(start, PrivateExponent{a}, g), PrivateExponent{b}, g);
                const auto ba = blind(blind(start, PrivateExponent{b}, g), PrivateExponent{a}, g);
                REQUIRE(ab[0].value == ba[0].value);
                REQUIRE(boost::multiprecision::powm(ab[0].value, g.q, g.p) == 1);
            }
        }
    }
}

TEST_CASE("commutativity and closure: randomized in the production group") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    for (int i = 0; i < 64; ++i) {  // the full 10^4 sweep runs in acceptance
        HashedInterval h;
        rng.fill(h.digest);
        const std::vector<GroupElement> start{to_group(h, g)};
        const PrivateExponent a = keygen(g, rng);
        const PrivateExponent b = keygen(g, rng);
        const auto ab = blind(blind(start, a, g), b, g);
        const auto ba = blind(blind(start, b, g), a, g);
        REQUIRE(ab[0].value == ba[0].value);
        REQUIRE(boost::multiprecision::powm(start[0].value, g.q, g.p) == 1);
    }
}

TEST_CASE("blinding with one key never collides distinct elements") {
    const GroupParams& g = GroupParams::test23();
    const auto rs = residues23();
    for (int a = 1; a <= 10; ++a) {
        std::set<int> images;
        for (int e : rs) {
            const auto out = blind({{make_element(e)}}, PrivateExponent{a}, g);
            images.insert(static_cast<int>(out[0].value));
        }
        CHECK(images.size() == rs.size());
    }
}

TEST_CASE("server_respond: worked example and empty client list") {
    const GroupParams& g = GroupParams::test23();
    SeededRandom rng(1);
    const std::vector<GroupElement> client{make_element(18)};  // H^a with H=4, a=3
    const std::vector<GroupElement> carrier{make_element(4)};
    const ServerResponse resp =
        server_respond(client, PrivateExponent{4}, carrier, PsiMode::ordered, g, rng);
    REQUIRE(resp.double_blinded_client.size() == 1);
    CHECK(resp.double_blinded_client[0].value == 4);  // 18^4 = 4 mod 23
    REQUIRE(resp.carrier_blinded.size() == 1);
    CHECK(resp.carrier_blinded[0].value == 3);  // 4^4 = 3 mod 23

    const ServerResponse empty =
        server_respond({}, PrivateExponent{4}, carrier, PsiMode::ordered, g, rng);
    CHECK(empty.double_blinded_client.empty());
    CHECK(empty.carrier_blinded.size() == 1);
}

TEST_CASE("shuffled mode returns a permutation of the ordered output") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    std::vector<GroupElement> client;
    for (int i = 0; i < 40; ++i) {
        HashedInterval h;
        rng.fill(h.digest);
        client.push_back(to_group(h, g));
    }
    const PrivateExponent b = keygen(g, rng);
    const ServerResponse ordered = server_respond(client, b, {}, PsiMode::ordered, g, rng);
    const ServerResponse shuffled = server_respond(client, b, {}, PsiMode::shuffled, g, rng);

    auto key = [&](const GroupElement& e) { return element_to_b64(e, g); };
    std::multiset<std::string> a, s;
    for (const auto& e : ordered.double_blinded_client) a.insert(key(e));
    for (const auto& e : shuffled.double_blinded_client) s.insert(key(e));
    CHECK(a == s);
}

TEST_CASE("client_intersect: the Appendix-A hand-computed round") {
    const GroupParams& g = GroupParams::test23();
    SeededRandom rng(1);
    const PrivateExponent a{3}, b{4};

    // Client raw element 4, blinded: 4^3 = 18.
    const std::vector<GroupElement> client_blinded = blind({{make_element(4)}}, a, g);
    CHECK(client_blinded[0].value == 18);
    // Carrier holds the same raw element 4.
    const ServerResponse resp =
        server_respond(client_blinded, b, {{make_element(4)}}, PsiMode::ordered, g, rng);
    CHECK(resp.double_blinded_client[0].value == 4);  // H^{ab}
    CHECK(resp.carrier_blinded[0].value == 3);        // H^b

    const MatchResult mr =
        client_intersect(resp.double_blinded_client, resp.carrier_blinded, a, PsiMode::ordered, g);
    // Client computes 3^3 = 4 = H^{ba} and finds the match.
    CHECK(mr.match_count == 1);
    REQUIRE(mr.matched_indices.size() == 1);
    CHECK(mr.matched_indices[0] == 0);
}

TEST_CASE("client_intersect: disjoint and identical sets") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    auto elements = [&](int n, std::uint8_t tag) {
        std::vector<GroupElement> out;
        for (int i = 0; i < n; ++i) {
            HashedInterval h{};
            h.digest[0] = tag;
            h.digest[1] = static_cast<std::uint8_t>(i);
            out.push_back(to_group(h, g));
        }
        return out;
    };
    const PrivateExponent a = keygen(g, rng);
    const PrivateExponent b = keygen(g, rng);

    SUBCASE("disjoint sets match nothing") {
        const auto client = blind(elements(12, 1), a, g);
        const ServerResponse resp =
            server_respond(client, b, elements(9, 2), PsiMode::ordered, g, rng);
        const MatchResult mr = client_intersect(resp.double_blinded_client, resp.carrier_blinded,
                                                a, PsiMode::ordered, g);
        CHECK(mr.match_count == 0);
        CHECK(mr.matched_indices.empty());
    }

    SUBCASE("identical sets match everywhere, in order") {
        const auto raw = elements(11, 3);
        const auto client = blind(raw, a, g);
        const ServerResponse resp = server_respond(client, b, raw, PsiMode::ordered, g, rng);
        const MatchResult mr = client_intersect(resp.double_blinded_client, resp.carrier_blinded,
                                                a, PsiMode::ordered, g);
        CHECK(mr.match_count == 11);
        REQUIRE(mr.matched_indices.size() == 11);
        for (std::size_t i = 0; i < 11; ++i) CHECK(mr.matched_indices[i] == i);
    }

    SUBCASE("shuffled mode carries counts but no indices") {
        const auto raw = elements(7, 4);
        const auto client = blind(raw, a, g);
        const ServerResponse resp = server_respond(client, b, raw, PsiMode::shuffled, g, rng);
        const MatchResult mr = client_intersect(resp.double_blinded_client, resp.carrier_blinded,
                                                a, PsiMode::shuffled, g);
        CHECK(mr.match_count == 7);
        CHECK(mr.matched_indices.empty());
    }
}

TEST_CASE("full protocol equals a plaintext oracle on random sets") {
    const GroupParams& g = GroupParams::modp2048();
    const GridConfig grid{0.0005, 300, "psi-test", 0};
    SecureRandom rng;
    SeededRandom det(808);

    for (int round = 0; round < 5; ++round) {
        // Random client/carrier interval sets with forced overlap.
        std::vector<PointInterval> client_raw;
        std::vector<PointInterval> carrier_raw;
        for (int i = 0; i < 30; ++i)
            client_raw.push_back({static_cast<std::int32_t>(det.below(50)),
                                  static_cast<std::int32_t>(det.below(50)),
                                  static_cast<std::int64_t>(det.below(20))});
        for (int i = 0; i < 25; ++i)
            carrier_raw.push_back({static_cast<std::int32_t>(det.below(50)),
                                   static_cast<std::int32_t>(det.below(50)),
                                   static_cast<std::int64_t>(det.below(20))});

        std::set<PointInterval> carrier_set(carrier_raw.begin(), carrier_raw.end());
        std::set<std::size_t> expected;
        for (std::size_t i = 0; i < client_raw.size(); ++i)
            if (carrier_set.contains(client_raw[i])) expected.insert(i);

        auto to_elems = [&](const std::vector<PointInterval>& pis) {
            std::vector<GroupElement> out;
            for (const PointInterval& pi : pis) out.push_back(to_group(hash_interval(pi, grid), g));
            return out;
        };
        const PrivateExponent a = keygen(g, rng);
        const PrivateExponent b = keygen(g, rng);
        const auto client_blinded = blind(to_elems(client_raw), a, g);
        const ServerResponse resp =
            server_respond(client_blinded, b, to_elems(carrier_raw), PsiMode::ordered, g, rng);
        const MatchResult mr = client_intersect(resp.double_blinded_client, resp.carrier_blinded,
                                                a, PsiMode::ordered, g);

        const std::set<std::size_t> got(mr.matched_indices.begin(), mr.matched_indices.end());
        CHECK(got == expected);
    }
}

TEST_CASE("element wire codec round-trips and rejects junk") {
    const GroupParams& g = GroupParams::modp2048();
    SecureRandom rng;
    for (int i = 0; i < 200; ++i) {
        HashedInterval h;
        rng.fill(h.digest);
        const GroupElement e = to_group(h, g);
        const std::string b64 = element_to_b64(e, g);
        CHECK(b64.size() == 344);  // 256 bytes, base64 with padding
        CHECK(element_from_b64(b64, g).value == e.value);
    }
    CHECK_THROWS_AS(element_from_b64("not base64!!", g), Error);
    CHECK_THROWS_AS(element_from_b64("AAAA", g), Error);  // wrong width
    // Out of range: p itself.
    const std::string p_b64 = base64_encode(bigint_to_bytes(g.p, g.byte_len));
    CHECK_THROWS_AS(element_from_b64(p_b64, g), Error);
}

TEST_CASE("random_permutation is a permutation") {
    SeededRandom rng(5);
    const auto perm = random_permutation(100, rng);
    std::set<std::size_t> seen(perm.begin(), perm.end());
    CHECK(perm.size() == 100);
    CHECK(seen.size() == 100);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 99);
}

TEST_CASE("bigint byte codec") {
    CHECK(bigint_from_bytes(std::vector<std::uint8_t>{0x01, 0x00}) == 256);
    CHECK(bigint_to_bytes(Bigint(256), 3) == std::vector<std::uint8_t>{0x00, 0x01, 0x00});
    CHECK(bigint_to_bytes(Bigint(0), 2) == std::vector<std::uint8_t>{0x00, 0x00});
    CHECK_THROWS_AS(bigint_to_bytes(Bigint(256), 1), Error);
}
