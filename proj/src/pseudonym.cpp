#include "masq/pseudonym.hpp"

#include <openssl/evp.h>
#include <openssl/params.h>

#include <cstring>
#include <memory>

#include "masq/vault.hpp"

namespace masq {

namespace {

constexpr char kUnitSeparator = '\x1f';
constexpr std::string_view kHexDigits = "0123456789abcdef";

bool is_lower_hex(std::string_view s) {
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return !s.empty();
}

struct MacDeleter {
    void operator()(EVP_MAC* mac) const { EVP_MAC_free(mac); }
    void operator()(EVP_MAC_CTX* ctx) const { EVP_MAC_CTX_free(ctx); }
};

}  // namespace

std::string Digest256::hex() const {
    std::string out;
    out.reserve(64);
    for (std::uint8_t b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key,
                                         std::span<const std::uint8_t> message) {
    static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    if (mac == nullptr) throw std::runtime_error("OpenSSL HMAC unavailable");

    std::unique_ptr<EVP_MAC_CTX, MacDeleter> ctx(EVP_MAC_CTX_new(mac));
    if (!ctx) throw std::runtime_error("EVP_MAC_CTX_new failed");

    char digest_name[] = "SHA256";
    OSSL_PARAM params[] = {OSSL_PARAM_construct_utf8_string("digest", digest_name, 0),
                           OSSL_PARAM_construct_end()};

    std::array<std::uint8_t, 32> out{};
    std::size_t out_len = 0;
    static const std::uint8_t kEmpty[1] = {0};
    const std::uint8_t* key_ptr = key.empty() ? kEmpty : key.data();
    const std::uint8_t* msg_ptr = message.empty() ? kEmpty : message.data();
    if (EVP_MAC_init(ctx.get(), key_ptr, key.size(), params) != 1 ||
        EVP_MAC_update(ctx.get(), msg_ptr, message.size()) != 1 ||
        EVP_MAC_final(ctx.get(), out.data(), &out_len, out.size()) != 1 || out_len != out.size()) {
        throw std::runtime_error("HMAC-SHA256 computation failed");
    }
    return out;
}

std::vector<std::uint8_t> canonical_input(const EntityType& entity_type, std::string_view value) {
    if (value.empty()) throw Error(Errc::EmptyValue, "cannot pseudonymize an empty value");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(entity_type.name().size() + 1 + value.size());
    bytes.insert(bytes.end(), entity_type.name().begin(), entity_type.name().end());
    bytes.push_back(static_cast<std::uint8_t>(kUnitSeparator));
    bytes.insert(bytes.end(), value.begin(), value.end());
    return bytes;
}

Digest256 compute_digest(std::string_view key, const EntityType& entity_type,
                         std::string_view value) {
    if (key.empty()) throw Error(Errc::EmptyKey, "secret key is empty");
    const std::vector<std::uint8_t> message = canonical_input(entity_type, value);
    Digest256 digest;
    digest.bytes = hmac_sha256(
        std::span(reinterpret_cast<const std::uint8_t*>(key.data()), key.size()), message);
    return digest;
}

std::string make_slug(const Digest256& digest, std::size_t length) {
    if (length < 1 || length > 64) {
        throw Error(Errc::LengthOutOfRange,
                    "slug length must be in 1..=64, got " + std::to_string(length));
    }
    return digest.hex().substr(0, length);
}

Token format_token(const EntityType& entity_type, std::string_view slug) {
    if (!is_lower_hex(slug) || slug.size() > 64) {
        throw Error(Errc::MalformedSlug, "slug is not non-empty lowercase hex of at most 64 "
                                         "chars: '" + std::string(slug) + "'");
    }
    Token token{entity_type, std::string(slug), {}};
    token.rendered = "<" + entity_type.name() + "_" + token.slug + ">";
    return token;
}

std::optional<std::pair<EntityType, std::string>> parse_token(std::string_view rendered) {
    if (rendered.size() < 4 || rendered.front() != '<' || rendered.back() != '>') {
        return std::nullopt;
    }
    std::string_view body = rendered.substr(1, rendered.size() - 2);
    // The slug is everything after the last '_' iff it is lowercase hex and
    // the rest parses as a type name; type names are uppercase, so the split
    // is unambiguous.
    std::size_t sep = body.rfind('_');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 >= body.size()) return std::nullopt;
    std::string_view type_name = body.substr(0, sep);
    std::string_view slug = body.substr(sep + 1);
    if (!is_lower_hex(slug) || slug.size() > 64) return std::nullopt;
    auto type = EntityType::try_parse(type_name);
    if (!type) return std::nullopt;
    return std::make_pair(*type, std::string(slug));
}

Token pseudonymize(const RunContext& ctx, Vault& vault, const EntityType& entity_type,
                   std::string_view value, std::string_view source) {
    if (ctx.secret_key.empty()) throw Error(Errc::EmptyKey, "SECRET_KEY is empty");

    const Digest256 digest = compute_digest(ctx.secret_key, entity_type, value);
    const std::string hex = digest.hex();

    if (auto existing = vault.find_by_digest(hex)) {
        return format_token(existing->entity_type, existing->slug);
    }

    PseudonymRecord record{hex, {}, entity_type, std::string(value), now_rfc3339(),
                           std::string(source)};
    for (std::size_t length = ctx.policy.slug_length; length <= 64; ++length) {
        record.slug = hex.substr(0, length);
        try {
            PseudonymRecord stored = vault.upsert(record);
            return format_token(stored.entity_type, stored.slug);
        } catch (const Error& e) {
            if (e.code() != Errc::SlugConflict) throw;
            // Prefix taken by a different digest; grow by one hex char.
        }
    }
    throw Error(Errc::SlugSpaceExhausted,
                "all 64 hex prefixes of " + hex + " collide; vault is corrupt");
}

}  // namespace masq
