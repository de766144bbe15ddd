#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "masq/core.hpp"

namespace masq {

class Vault;

/// Full 256-bit HMAC output. The vault always stores the complete digest;
/// slugs are truncated views of it.
struct Digest256 {
    std::array<std::uint8_t, 32> bytes{};

    /// 64 lowercase hex characters.
    std::string hex() const;

    friend bool operator==(const Digest256&, const Digest256&) = default;
};

/// Replacement token as inserted into documents: `<TYPE_slug>`.
struct Token {
    EntityType entity_type;
    std::string slug;       // lowercase hex prefix of the full digest
    std::string rendered;   // "<" + type name + "_" + slug + ">"
};

/// Raw HMAC-SHA256 primitive (OpenSSL-backed).
std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> message);

/// Digest input layout: UTF-8 type name, one 0x1F unit separator, UTF-8 value
/// verbatim. The separator keeps (type, value) pairs injective; the value is
/// never trimmed or case-folded so reversal can restore it exactly.
std::vector<std::uint8_t> canonical_input(const EntityType& entity_type, std::string_view value);

/// HMAC-SHA256(key, canonical_input(entity_type, value)).
Digest256 compute_digest(std::string_view key, const EntityType& entity_type,
                         std::string_view value);

/// First `length` hex characters of the digest; 1 <= length <= 64.
std::string make_slug(const Digest256& digest, std::size_t length);

/// Renders `<TYPE_slug>`. The slug must be non-empty lowercase hex.
Token format_token(const EntityType& entity_type, std::string_view slug);

/// Inverse of format_token over the rendered form; nullopt if `rendered`
/// is not a well-formed token.
std::optional<std::pair<EntityType, std::string>> parse_token(std::string_view rendered);

/// Keyed, vault-backed pseudonym assignment. The slug starts at
/// policy.slug_length hex chars and grows one char at a time while the vault
/// maps that prefix to a different digest; the full digest is stored either
/// way, so extension never loses reversibility. Calling again with the same
/// (key, type, value) returns the identical token.
Token pseudonymize(const RunContext& ctx, Vault& vault, const EntityType& entity_type,
                   std::string_view value, std::string_view source = "");

}  // namespace masq
