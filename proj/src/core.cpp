#include "masq/core.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <regex>

namespace masq {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::SlugLengthOutOfRange: return "SlugLengthOutOfRange";
        case Errc::UnknownPreservedEntity: return "UnknownPreservedEntity";
        case Errc::EmptyAllowListEntry: return "EmptyAllowListEntry";
        case Errc::MalformedCustomPattern: return "MalformedCustomPattern";
        case Errc::EmptyValue: return "EmptyValue";
        case Errc::EmptyKey: return "EmptyKey";
        case Errc::LengthOutOfRange: return "LengthOutOfRange";
        case Errc::MalformedSlug: return "MalformedSlug";
        case Errc::SlugSpaceExhausted: return "SlugSpaceExhausted";
        case Errc::CorruptRecordLine: return "CorruptRecordLine";
        case Errc::DuplicateDigest: return "DuplicateDigest";
        case Errc::DuplicateSlug: return "DuplicateSlug";
        case Errc::SlugConflict: return "SlugConflict";
        case Errc::WriteFailure: return "WriteFailure";
        case Errc::VaultMissing: return "VaultMissing";
        case Errc::PatternRuntimeFailure: return "PatternRuntimeFailure";
        case Errc::EmptyTerm: return "EmptyTerm";
        case Errc::UnreadableFile: return "UnreadableFile";
        case Errc::MalformedCsv: return "MalformedCsv";
        case Errc::MalformedJson: return "MalformedJson";
        case Errc::MalformedXml: return "MalformedXml";
        case Errc::OcrEngineMissing: return "OcrEngineMissing";
        case Errc::OcrEngineFailed: return "OcrEngineFailed";
        case Errc::MissingPlaceholder: return "MissingPlaceholder";
        case Errc::MissingSecretKey: return "MissingSecretKey";
        case Errc::KeyMismatch: return "KeyMismatch";
        case Errc::OverlappingGold: return "OverlappingGold";
    }
    return "UnknownError";
}

namespace {

constexpr std::string_view kCustomPrefix = "CUSTOM:";

// Recognizer priority order, highest first.
constexpr std::string_view kBuiltinNames[] = {"CERT_BODY",   "CPE_STRING", "URL",
                                              "EMAIL",       "IP_ADDRESS", "CERT_SERIAL",
                                              "HASH",        "HOSTNAME",   "CREDENTIAL"};

bool is_name_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_plain_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_name_char);
}

bool is_builtin_name(std::string_view name) {
    return std::find(std::begin(kBuiltinNames), std::end(kBuiltinNames), name) !=
           std::end(kBuiltinNames);
}

bool is_valid_type_name(std::string_view name) {
    if (name.starts_with(kCustomPrefix)) {
        return is_plain_name(name.substr(kCustomPrefix.size()));
    }
    return is_builtin_name(name);
}

}  // namespace

EntityType::EntityType(std::string name) : name_(std::move(name)) {
    if (!is_valid_type_name(name_)) {
        throw std::invalid_argument("not an entity type name: '" + name_ + "'");
    }
}

std::optional<EntityType> EntityType::try_parse(std::string_view name) {
    if (!is_valid_type_name(name)) return std::nullopt;
    return EntityType(std::string(name));
}

EntityType EntityType::custom(std::string_view label) {
    return EntityType(std::string(kCustomPrefix) + std::string(label));
}

bool EntityType::is_custom() const noexcept { return name_.starts_with(kCustomPrefix); }

std::string_view EntityType::custom_label() const noexcept {
    if (!is_custom()) return {};
    return std::string_view(name_).substr(kCustomPrefix.size());
}

const std::vector<EntityType>& builtin_entity_types() {
    static const std::vector<EntityType> kTypes = [] {
        std::vector<EntityType> v;
        for (std::string_view n : kBuiltinNames) v.emplace_back(std::string(n));
        return v;
    }();
    return kTypes;
}

std::vector<PolicyViolation> validate_policy(const PolicyConfig& policy) {
    std::vector<PolicyViolation> violations;

    if (policy.slug_length < 1 || policy.slug_length > 64) {
        violations.push_back({Errc::SlugLengthOutOfRange,
                              "slug_length must be in 1..=64, got " +
                                  std::to_string(policy.slug_length)});
    }
    for (const std::string& entry : policy.allow_list) {
        if (entry.empty()) {
            violations.push_back({Errc::EmptyAllowListEntry, "allow-list entry is empty"});
        }
    }
    for (const std::string& name : policy.preserve_entities) {
        auto type = EntityType::try_parse(name);
        bool known = type.has_value() && !type->is_custom();
        if (type && type->is_custom()) {
            for (const auto& [label, pattern] : policy.custom_patterns) {
                if (label == type->custom_label()) {
                    known = true;
                    break;
                }
            }
        }
        if (!known) {
            violations.push_back({Errc::UnknownPreservedEntity,
                                  "preserve-entities names unknown type '" + name + "'"});
        }
    }
    for (const auto& [label, pattern] : policy.custom_patterns) {
        if (!is_plain_name(label)) {
            violations.push_back({Errc::MalformedCustomPattern,
                                  "custom label '" + label + "' is not [A-Z0-9_]+"});
            continue;
        }
        try {
            std::regex compiled(pattern, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            violations.push_back({Errc::MalformedCustomPattern,
                                  "pattern for CUSTOM:" + label + " does not compile: " +
                                      e.what()});
        }
    }
    return violations;
}

std::string now_rfc3339() {
    using std::chrono::system_clock;
    std::time_t now = system_clock::to_time_t(system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", utc.tm_year + 1900,
                  utc.tm_mon + 1, utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec);
    return buf;
}

bool is_rfc3339(std::string_view ts) {
    static const std::regex kShape(
        R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2}))");
    return std::regex_match(ts.begin(), ts.end(), kShape);
}

}  // namespace masq
