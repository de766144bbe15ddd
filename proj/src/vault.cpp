#include "masq/vault.hpp"

#include <json.hpp>

#include <algorithm>

namespace masq {

namespace {

using Json = nlohmann::ordered_json;

std::string record_line(const PseudonymRecord& r) {
    Json j;
    j["digest"] = r.digest_hex;
    j["slug"] = r.slug;
    j["type"] = r.entity_type.name();
    j["value"] = r.original_value;
    j["first_seen"] = r.first_seen;
    j["source"] = r.source;
    return j.dump();
}

PseudonymRecord parse_record_line(const std::string& line, std::size_t line_no,
                                  const std::filesystem::path& path) {
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::CorruptRecordLine, path.string() + ":" + std::to_string(line_no) +
                                                 ": not a JSON object");
    }
    for (const char* key : {"digest", "slug", "type", "value", "first_seen", "source"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw Error(Errc::CorruptRecordLine, path.string() + ":" + std::to_string(line_no) +
                                                     ": missing string field '" + key + "'");
        }
    }
    auto type = EntityType::try_parse(j["type"].get<std::string>());
    if (!type) {
        throw Error(Errc::CorruptRecordLine, path.string() + ":" + std::to_string(line_no) +
                                                 ": bad entity type '" +
                                                 j["type"].get<std::string>() + "'");
    }
    return PseudonymRecord{j["digest"].get<std::string>(), j["slug"].get<std::string>(),
                           *type,                          j["value"].get<std::string>(),
                           j["first_seen"].get<std::string>(), j["source"].get<std::string>()};
}

void append_line(const std::filesystem::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(Errc::WriteFailure, "cannot open for append: " + path.string());
    out << line << '\n';
    out.flush();
    if (!out) throw Error(Errc::WriteFailure, "write failed: " + path.string());
}

}  // namespace

const char* audit_action_name(AuditAction action) {
    switch (action) {
        case AuditAction::Anonymize:
            return "ANONYMIZE";
        case AuditAction::Deanonymize:
            return "DEANONYMIZE";
        case AuditAction::Lookup:
            return "LOOKUP";
        case AuditAction::Export:
            return "EXPORT";
    }
    return "LOOKUP";
}

std::optional<AuditAction> parse_audit_action(std::string_view name) {
    if (name == "ANONYMIZE") return AuditAction::Anonymize;
    if (name == "DEANONYMIZE") return AuditAction::Deanonymize;
    if (name == "LOOKUP") return AuditAction::Lookup;
    if (name == "EXPORT") return AuditAction::Export;
    return std::nullopt;
}

Vault::Vault(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty()) throw Error(Errc::VaultMissing, "vault path is empty");
    if (!std::filesystem::exists(path_)) return;  // created on first append

    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open vault: " + path_.string());

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        PseudonymRecord record = parse_record_line(line, line_no, path_);
        if (by_digest_.contains(record.digest_hex)) {
            throw Error(Errc::DuplicateDigest, path_.string() + ":" + std::to_string(line_no) +
                                                   ": duplicate digest " + record.digest_hex);
        }
        if (by_slug_.contains(record.slug)) {
            throw Error(Errc::DuplicateSlug, path_.string() + ":" + std::to_string(line_no) +
                                                 ": duplicate slug " + record.slug);
        }
        by_digest_.emplace(record.digest_hex, records_.size());
        by_slug_.emplace(record.slug, records_.size());
        records_.push_back(std::move(record));
    }
}

PseudonymRecord Vault::upsert(const PseudonymRecord& record) {
    std::lock_guard lock(mutex_);
    if (auto it = by_digest_.find(record.digest_hex); it != by_digest_.end()) {
        return records_[it->second];
    }
    if (auto it = by_slug_.find(record.slug); it != by_slug_.end()) {
        throw Error(Errc::SlugConflict, "slug '" + record.slug + "' already maps to digest " +
                                            records_[it->second].digest_hex);
    }
    append_record_line(record);
    by_digest_.emplace(record.digest_hex, records_.size());
    by_slug_.emplace(record.slug, records_.size());
    records_.push_back(record);
    return records_.back();
}

std::optional<PseudonymRecord> Vault::lookup_by_slug(const std::string& slug,
                                                     const std::string& actor) {
    auto found = find_by_slug(slug);
    append_audit({now_rfc3339(), actor, AuditAction::Lookup, slug,
                  found ? "hit" : "miss"});
    return found;
}

std::optional<PseudonymRecord> Vault::find_by_slug(const std::string& slug) const {
    std::lock_guard lock(mutex_);
    if (auto it = by_slug_.find(slug); it != by_slug_.end()) return records_[it->second];
    return std::nullopt;
}

std::optional<PseudonymRecord> Vault::find_by_digest(const std::string& digest_hex) const {
    std::lock_guard lock(mutex_);
    if (auto it = by_digest_.find(digest_hex); it != by_digest_.end()) return records_[it->second];
    return std::nullopt;
}

std::vector<PseudonymRecord> Vault::list_entities(const std::optional<EntityType>& filter) const {
    std::vector<PseudonymRecord> out;
    {
        std::lock_guard lock(mutex_);
        for (const auto& r : records_) {
            if (!filter || r.entity_type == *filter) out.push_back(r);
        }
    }
    std::sort(out.begin(), out.end(), [](const PseudonymRecord& a, const PseudonymRecord& b) {
        if (a.entity_type.name() != b.entity_type.name())
            return a.entity_type.name() < b.entity_type.name();
        return a.original_value < b.original_value;
    });
    return out;
}

void Vault::append_audit(const AuditEvent& event) {
    Json j;
    j["timestamp"] = event.timestamp;
    j["actor"] = event.actor;
    j["action"] = audit_action_name(event.action);
    j["slug"] = event.slug;
    j["detail"] = event.detail;
    std::lock_guard lock(mutex_);
    append_line(audit_path(), j.dump());
}

std::size_t Vault::size() const {
    std::lock_guard lock(mutex_);
    return records_.size();
}

std::filesystem::path Vault::audit_path() const {
    std::filesystem::path dir = path_.parent_path();
    return (dir.empty() ? std::filesystem::path(".") : dir) / "audit.ndjson";
}

void Vault::append_record_line(const PseudonymRecord& record) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    append_line(path_, record_line(record));
}

}  // namespace masq
