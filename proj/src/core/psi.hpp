#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/group.hpp"
#include "core/rng.hpp"

namespace cps {

enum class PsiMode { ordered, shuffled };

const char* psi_mode_string(PsiMode m);
PsiMode psi_mode_from_string(const std::string& s);

// Client-side view of one protocol round. In shuffled mode the server
// permutes the double-blinded sequence, so only the count survives;
// matched_indices exists in ordered mode alone.
struct MatchResult {
    PsiMode mode = PsiMode::ordered;
    std::vector<std::size_t> matched_indices;  // ordered mode: strictly increasing
    std::size_t match_count = 0;
};

// Elementwise e -> e^key mod p, order preserved.
std::vector<GroupElement> blind(std::span<const GroupElement> elems, const PrivateExponent& key,
                                const GroupParams& params, unsigned threads = 1);

// Uniform Fisher-Yates permutation of indices [0, n).
std::vector<std::size_t> random_permutation(std::size_t n, RandomSource& rng);

struct ServerResponse {
    std::vector<GroupElement> double_blinded_client;
    std::vector<GroupElement> carrier_blinded;
};

// Protocol steps 2-3: double-blind the client list (kept in order, or
// uniformly permuted in shuffled mode) and blind the carrier set, which is
// always returned order-randomized.
ServerResponse server_respond(std::span<const GroupElement> client_blinded,
                              const PrivateExponent& server_key,
                              std::span<const GroupElement> carrier_elems, PsiMode mode,
                              const GroupParams& params, RandomSource& rng,
                              unsigned threads = 1);

// Same, but with the carrier set already blinded once per dataset epoch;
// the copy handed in is shuffled in place.
ServerResponse server_respond_preblinded(std::span<const GroupElement> client_blinded,
                                         const PrivateExponent& server_key,
                                         std::vector<GroupElement> carrier_blinded, PsiMode mode,
                                         const GroupParams& params, RandomSource& rng,
                                         unsigned threads = 1);

// Protocol steps 4-5: raise the carrier list to the client key and look up
// each double-blinded client element. Matching rests on H^{ab} = H^{ba}.
MatchResult client_intersect(std::span<const GroupElement> double_blinded_client,
                             std::span<const GroupElement> carrier_blinded,
                             const PrivateExponent& client_key, PsiMode mode,
                             const GroupParams& params, unsigned threads = 1);

}  // namespace cps
