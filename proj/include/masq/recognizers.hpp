#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "masq/core.hpp"

namespace masq {

/// One pattern-based recognizer. Matching runs the compiled regex over the
/// text, optionally narrows to a capture group, trims listed edge characters,
/// enforces word/extra-character boundaries, and finally consults the
/// validator. Higher priority wins overlap ties.
struct Recognizer {
    std::string id;
    EntityType entity_type;
    std::string pattern;       // source, kept for diagnostics and config echo
    int priority = 10;

    std::regex::flag_type flags = std::regex::ECMAScript;
    std::regex compiled;       // set by RecognizerRegistry::add from (pattern, flags)
    int capture_group = 0;
    bool word_bounded = true;         // neither end may touch [A-Za-z0-9_]
    std::string barrier_before;       // extra chars that must not precede the match
    std::string barrier_after;        // extra chars that must not follow it
    std::string trim_leading;
    std::string trim_trailing;
    // (text, span of the trimmed candidate) -> keep?
    std::function<bool(std::string_view, Span)> validator;
};

/// Ordered recognizer set plus a verbatim-term dictionary. Immutable once
/// handed to recognize_all; construction is single-threaded.
class RecognizerRegistry {
public:
    /// Compiles and adds; throws on duplicate id or a pattern that fails to
    /// compile.
    void add(Recognizer recognizer);

    /// Adds a CUSTOM:<label> regex recognizer (the L3 extensibility axis).
    void add_custom_pattern(std::string_view label, std::string_view pattern);

    /// Registers whole-word, case-sensitive dictionary terms. Empty terms are
    /// rejected.
    void register_dictionary(const std::map<std::string, EntityType>& terms);

    const std::vector<Recognizer>& recognizers() const noexcept { return recognizers_; }
    const std::map<std::string, EntityType>& dictionary_terms() const noexcept {
        return dictionary_;
    }

    /// True if some recognizer or dictionary term produces this type.
    bool knows_type(const EntityType& type) const;

private:
    std::vector<Recognizer> recognizers_;
    std::map<std::string, EntityType> dictionary_;
};

/// The builtin registry: IP_ADDRESS (IPv4 with 0-255 octet bounds; IPv6 full
/// and ::-compressed), EMAIL, URL, HOSTNAME (>=2 labels, alphabetic final
/// label), HASH (word-bounded hex of exactly 32/40/64 chars, all-decimal runs
/// excluded), CERT_SERIAL (>=6 colon-separated hex octet pairs), CERT_BODY
/// (complete PEM certificate blocks), CPE_STRING (cpe:/ and cpe:2.3: forms),
/// CREDENTIAL (keyword [:=] value).
RecognizerRegistry builtin_registry();

/// builtin_registry() plus the policy's custom patterns.
RecognizerRegistry registry_for(const PolicyConfig& policy);

/// Loads declarations from a UTF-8 config file, one per line:
/// `TYPE<TAB>payload`. A payload starting with "re:" becomes a custom regex
/// recognizer; anything else is a whole-word dictionary term for TYPE.
/// Blank lines and lines starting with '#' are skipped.
void load_declarations(RecognizerRegistry& registry, const std::filesystem::path& file);

/// Runs one recognizer over the text.
std::vector<Detection> run_recognizer(const Recognizer& recognizer, std::string_view text);

/// Dictionary pass: whole-word, case-sensitive occurrences of every term.
std::vector<Detection> run_dictionary(const std::map<std::string, EntityType>& terms,
                                      std::string_view text);

/// Full pipeline: every recognizer plus dictionary terms, allow-list
/// filtering, then overlap resolution. Output is sorted by span start,
/// pairwise non-overlapping; detections of preserved types come back flagged
/// `preserved` (detected, not replaced).
std::vector<Detection> recognize_all(std::string_view text, const RecognizerRegistry& registry,
                                     const PolicyConfig& policy);

/// Greedy overlap resolution: longer span wins, ties fall to higher priority,
/// then to the smaller start offset. Result is disjoint and sorted.
std::vector<Detection> resolve_overlaps(std::vector<Detection> detections,
                                        const RecognizerRegistry& registry);

// Single-recognizer conveniences over the builtin definitions.
std::vector<Detection> recognize_hash(std::string_view text);
std::vector<Detection> recognize_cert_serial(std::string_view text);
std::vector<Detection> recognize_cert_body(std::string_view text);

}  // namespace masq
