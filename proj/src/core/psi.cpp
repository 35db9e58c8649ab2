#include "core/psi.hpp"

#include <unordered_set>
#include <utility>

#include "core/errors.hpp"
#include "core/threading.hpp"

namespace cps {

const char* psi_mode_string(PsiMode m) {
    return m == PsiMode::ordered ? "ordered" : "shuffled";
}

PsiMode psi_mode_from_string(const std::string& s) {
    if (s == "ordered") return PsiMode::ordered;
    if (s == "shuffled") return PsiMode::shuffled;
    throw Error(ErrorCode::parse_error, "mode must be ordered or shuffled");
}

std::vector<GroupElement> blind(std::span<const GroupElement> elems, const PrivateExponent& key,
                                const GroupParams& params, unsigned threads) {
    std::vector<GroupElement> out(elems.size());
    parallel_for(elems.size(), threads, [&](std::size_t i) {
        out[i].value = boost::multiprecision::powm(elems[i].value, key.value, params.p);
    });
    return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, RandomSource& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

namespace {
void shuffle_elements(std::vector<GroupElement>& elems, RandomSource& rng) {
    const std::vector<std::size_t> perm = random_permutation(elems.size(), rng);
    std::vector<GroupElement> tmp(elems.size());
    for (std::size_t i = 0; i < elems.size(); ++i) tmp[i] = std::move(elems[perm[i]]);
    elems = std::move(tmp);
}
}  // namespace

ServerResponse server_respond_preblinded(std::span<const GroupElement> client_blinded,
                                         const PrivateExponent& server_key,
                                         std::vector<GroupElement> carrier_blinded, PsiMode mode,
                                         const GroupParams& params, RandomSource& rng,
                                         unsigned threads) {
    ServerResponse resp;
    resp.double_blinded_client = blind(client_blinded, server_key, params, threads);
    if (mode == PsiMode::shuffled) shuffle_elements(resp.double_blinded_client, rng);
    shuffle_elements(carrier_blinded, rng);  // never reveal storage order
    resp.carrier_blinded = std::move(carrier_blinded);
    return resp;
}

ServerResponse server_respond(std::span<const GroupElement> client_blinded,
                              const PrivateExponent& server_key,
                              std::span<const GroupElement> carrier_elems, PsiMode mode,
                              const GroupParams& params, RandomSource& rng, unsigned threads) {
    return server_respond_preblinded(client_blinded, server_key,
                                     blind(carrier_elems, server_key, params, threads), mode,
                                     params, rng, threads);
}

namespace {
std::string lookup_key(const GroupElement& e, const GroupParams& params) {
    const std::vector<std::uint8_t> bytes = bigint_to_bytes(e.value, params.byte_len);
    return std::string(bytes.begin(), bytes.end());
}
}  // namespace

MatchResult client_intersect(std::span<const GroupElement> double_blinded_client,
                             std::span<const GroupElement> carrier_blinded,
                             const PrivateExponent& client_key, PsiMode mode,
                             const GroupParams& params, unsigned threads) {
    // H(I)^{ba}, keyed by wire bytes for exact comparison.
    const std::vector<GroupElement> carrier_full =
        blind(carrier_blinded, client_key, params, threads);
    std::unordered_set<std::string> lookup;
    lookup.reserve(carrier_full.size() * 2);
    for (const GroupElement& e : carrier_full) lookup.insert(lookup_key(e, params));

    MatchResult result;
    result.mode = mode;
    for (std::size_t i = 0; i < double_blinded_client.size(); ++i) {
        if (lookup.contains(lookup_key(double_blinded_client[i], params))) {
            ++result.match_count;
            if (mode == PsiMode::ordered) result.matched_indices.push_back(i);
        }
    }
    return result;
}

}  // namespace cps
