#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "masq/core.hpp"

namespace masq {

/// One vault row: full digest <-> issued slug <-> original value.
struct PseudonymRecord {
    std::string digest_hex;      // 64 lowercase hex chars, unique
    std::string slug;            // prefix of digest_hex, unique
    EntityType entity_type;
    std::string original_value;  // verbatim original, non-empty
    std::string first_seen;      // RFC 3339 UTC, immutable after insert
    std::string source;          // document identifier, immutable after insert
};

enum class AuditAction { Anonymize, Deanonymize, Lookup, Export };

const char* audit_action_name(AuditAction action);
std::optional<AuditAction> parse_audit_action(std::string_view name);

struct AuditEvent {
    std::string timestamp;  // RFC 3339 UTC
    std::string actor;
    AuditAction action;
    std::string slug;       // may be empty
    std::string detail;
};

/// Persistent entity store plus append-only audit log.
///
/// Storage is newline-delimited JSON, UTF-8, LF: one record per line in the
/// store file (keys digest, slug, type, value, first_seen, source) and one
/// event per line in `audit.ndjson` beside it. Records are held in an
/// in-memory index after open; every mutation appends through a single
/// writer lock, so distinct threads may share one Vault.
class Vault {
public:
    /// Opens (or lazily creates) the store at `path`. The whole file is
    /// loaded and indexed by digest and by slug; a corrupt line, duplicate
    /// digest, or duplicate slug fails the open.
    explicit Vault(std::filesystem::path path);

    Vault(const Vault&) = delete;
    Vault& operator=(const Vault&) = delete;

    /// Inserts the record unless its digest is already stored, in which case
    /// the existing row wins (first_seen and source stay stable). Throws
    /// Errc::SlugConflict when the slug is taken by a different digest;
    /// callers extend the slug and retry.
    PseudonymRecord upsert(const PseudonymRecord& record);

    /// Exact-match slug query (no prefix search); emits a LOOKUP audit event.
    std::optional<PseudonymRecord> lookup_by_slug(const std::string& slug,
                                                  const std::string& actor);

    /// Unaudited index accessors.
    std::optional<PseudonymRecord> find_by_slug(const std::string& slug) const;
    std::optional<PseudonymRecord> find_by_digest(const std::string& digest_hex) const;

    /// All records sorted by (entity_type, original_value), optionally
    /// restricted to one type.
    std::vector<PseudonymRecord> list_entities(
        const std::optional<EntityType>& filter = std::nullopt) const;

    /// Serializes and appends one event; prior lines are never touched.
    void append_audit(const AuditEvent& event);

    std::size_t size() const;
    const std::filesystem::path& path() const noexcept { return path_; }
    /// `audit.ndjson` in the store's directory.
    std::filesystem::path audit_path() const;

private:
    void append_record_line(const PseudonymRecord& record);

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::vector<PseudonymRecord> records_;
    std::unordered_map<std::string, std::size_t> by_digest_;
    std::unordered_map<std::string, std::size_t> by_slug_;
};

}  // namespace masq
