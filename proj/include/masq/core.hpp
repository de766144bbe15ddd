#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace masq {

/// Error codes surfaced by the toolkit. Every throwing operation raises
/// masq::Error carrying one of these plus a human-readable message.
enum class Errc {
    // policy validation
    SlugLengthOutOfRange,
    UnknownPreservedEntity,
    EmptyAllowListEntry,
    MalformedCustomPattern,
    // pseudonym generation
    EmptyValue,
    EmptyKey,
    LengthOutOfRange,
    MalformedSlug,
    SlugSpaceExhausted,
    // vault
    CorruptRecordLine,
    DuplicateDigest,
    DuplicateSlug,
    SlugConflict,
    WriteFailure,
    VaultMissing,
    // recognizers
    PatternRuntimeFailure,
    EmptyTerm,
    // processors
    UnreadableFile,
    MalformedCsv,
    MalformedJson,
    MalformedXml,
    // ocr
    OcrEngineMissing,
    OcrEngineFailed,
    MissingPlaceholder,
    // cli
    MissingSecretKey,
    KeyMismatch,
    // eval
    OverlappingGold,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Identifier category. Either one of the builtin categories
/// (IP_ADDRESS, EMAIL, URL, HOSTNAME, HASH, CERT_SERIAL, CERT_BODY,
/// CPE_STRING, CREDENTIAL) or a user-defined CUSTOM:<LABEL>.
/// Equality and ordering follow the full name.
class EntityType {
public:
    /// Validating constructor; throws std::invalid_argument if `name` is not
    /// a builtin category name or a well-formed CUSTOM:<LABEL>.
    explicit EntityType(std::string name);

    /// Non-throwing parse.
    static std::optional<EntityType> try_parse(std::string_view name);

    /// CUSTOM:<label> constructor; label must be [A-Z0-9_]+.
    static EntityType custom(std::string_view label);

    const std::string& name() const noexcept { return name_; }
    bool is_custom() const noexcept;
    /// Label after "CUSTOM:" for custom types, empty otherwise.
    std::string_view custom_label() const noexcept;

    friend bool operator==(const EntityType& a, const EntityType& b) noexcept {
        return a.name_ == b.name_;
    }
    friend auto operator<=>(const EntityType& a, const EntityType& b) noexcept {
        return a.name_ <=> b.name_;
    }

private:
    std::string name_;
};

/// The nine builtin categories, in priority order of their recognizers.
const std::vector<EntityType>& builtin_entity_types();

namespace types {
inline const EntityType ip_address{"IP_ADDRESS"};
inline const EntityType email{"EMAIL"};
inline const EntityType url{"URL"};
inline const EntityType hostname{"HOSTNAME"};
inline const EntityType hash{"HASH"};
inline const EntityType cert_serial{"CERT_SERIAL"};
inline const EntityType cert_body{"CERT_BODY"};
inline const EntityType cpe_string{"CPE_STRING"};
inline const EntityType credential{"CREDENTIAL"};
}  // namespace types

/// Half-open byte range [start, end) into UTF-8 text. Offsets always fall on
/// character boundaries (all recognizers match ASCII-delimited entities).
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
    bool overlaps(const Span& other) const noexcept {
        return start < other.end && other.start < end;
    }
    bool contains(const Span& other) const noexcept {
        return start <= other.start && other.end <= end;
    }
    friend bool operator==(const Span&, const Span&) = default;
    friend auto operator<=>(const Span&, const Span&) = default;
};

/// One located entity occurrence.
struct Detection {
    EntityType entity_type;
    Span span;
    std::string text;           // source substring at span
    std::string recognizer_id;
    double score = 1.0;         // regex and dictionary recognizers emit 1.0
    bool preserved = false;     // detected but exempt from replacement
};

/// Run-time pseudonymization policy.
struct PolicyConfig {
    std::size_t slug_length = 64;                 // hex chars, 1..=64
    std::set<std::string> allow_list;             // verbatim terms never replaced
    std::set<std::string> preserve_entities;      // type names detected but kept
    std::string lang = "en";                      // BCP-47-ish tag; metadata only
    std::vector<std::pair<std::string, std::string>> custom_patterns;  // (CUSTOM label, regex)
    bool scan_json_keys = false;
};

struct PolicyViolation {
    Errc code;
    std::string message;
};

/// Checks every PolicyConfig invariant and returns all violations (empty
/// result means the policy is valid as given). Never mutates the policy.
std::vector<PolicyViolation> validate_policy(const PolicyConfig& policy);

/// Everything an anonymization or re-identification run needs.
struct RunContext {
    std::string secret_key;       // from SECRET_KEY; must be non-empty to run
    PolicyConfig policy;
    std::filesystem::path vault_path;
    std::string audit_actor = "cli";
};

/// Current UTC time as RFC 3339 ("2026-01-02T15:04:05Z").
std::string now_rfc3339();

/// True if `ts` looks like an RFC 3339 UTC timestamp.
bool is_rfc3339(std::string_view ts);

}  // namespace masq
