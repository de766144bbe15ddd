#include "masq/recognizers.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace masq {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool all_decimal(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return c >= '0' && c <= '9';
    });
}

bool is_hex_char(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = s.find(sep, pos);
        if (next == std::string_view::npos) {
            parts.push_back(s.substr(pos));
            return parts;
        }
        parts.push_back(s.substr(pos, next - pos));
        pos = next + 1;
    }
}

// Exactly 32/40/64 hex chars (MD5/SHA-1/SHA-256 widths); all-decimal runs are
// excluded so epoch timestamps and long numeric IDs never read as digests.
bool validate_hash(std::string_view text, Span span) {
    std::string_view run = text.substr(span.start, span.length());
    std::size_t n = run.size();
    if (n != 32 && n != 40 && n != 64) return false;
    return !all_decimal(run);
}

// Dotted-quad must not extend a longer dotted-digit sequence on either side
// ("1.2.3.4.5" yields nothing), while a sentence-final "10.0.0.1." still
// counts.
bool validate_ipv4_context(std::string_view text, Span span) {
    if (span.start >= 2 && text[span.start - 1] == '.' &&
        std::isdigit(static_cast<unsigned char>(text[span.start - 2])) != 0) {
        return false;
    }
    if (span.end + 1 < text.size() && text[span.end] == '.' &&
        std::isdigit(static_cast<unsigned char>(text[span.end + 1])) != 0) {
        return false;
    }
    return true;
}

// Structural IPv6 check over a loose colon-hex candidate: exactly 8 groups,
// or fewer with a single "::" compression; bare "::" is rejected because it
// collides with scope-resolution syntax in pasted code.
bool validate_ipv6(std::string_view text, Span span) {
    std::string_view s = text.substr(span.start, span.length());
    if (s.find(":::") != std::string_view::npos) return false;
    std::size_t gap = s.find("::");
    if (gap != std::string_view::npos && s.find("::", gap + 1) != std::string_view::npos) {
        return false;
    }

    auto groups_ok = [](const std::vector<std::string_view>& groups) {
        for (std::string_view g : groups) {
            if (g.empty() || g.size() > 4) return false;
            if (!std::all_of(g.begin(), g.end(), is_hex_char)) return false;
        }
        return true;
    };

    if (gap == std::string_view::npos) {
        std::vector<std::string_view> groups = split_on(s, ':');
        return groups.size() == 8 && groups_ok(groups);
    }

    std::string_view left = s.substr(0, gap);
    std::string_view right = s.substr(gap + 2);
    std::vector<std::string_view> lg = left.empty() ? std::vector<std::string_view>{}
                                                    : split_on(left, ':');
    std::vector<std::string_view> rg = right.empty() ? std::vector<std::string_view>{}
                                                     : split_on(right, ':');
    std::size_t total = lg.size() + rg.size();
    if (total == 0 || total > 7) return false;
    return groups_ok(lg) && groups_ok(rg);
}

// Final label must be purely alphabetic and at least two chars, which also
// rules dotted-quads out of the hostname lane.
bool validate_hostname(std::string_view text, Span span) {
    std::string_view s = text.substr(span.start, span.length());
    std::size_t dot = s.rfind('.');
    if (dot == std::string_view::npos) return false;
    std::string_view last = s.substr(dot + 1);
    if (last.size() < 2) return false;
    return std::all_of(last.begin(), last.end(), [](char c) {
        return std::isalpha(static_cast<unsigned char>(c)) != 0;
    });
}

// A captured credential value that is itself a replacement token must not be
// re-captured, or a second pass would re-wrap it.
bool validate_credential_value(std::string_view text, Span span) {
    std::string_view s = text.substr(span.start, span.length());
    return !(s.size() >= 2 && s.front() == '<' && s.back() == '>');
}

Recognizer make(std::string id, EntityType type, std::string pattern, int priority,
                std::regex::flag_type flags = std::regex::ECMAScript) {
    return Recognizer{.id = std::move(id),
                      .entity_type = std::move(type),
                      .pattern = std::move(pattern),
                      .priority = priority,
                      .flags = flags};
}

}  // namespace

void RecognizerRegistry::add(Recognizer recognizer) {
    for (const Recognizer& existing : recognizers_) {
        if (existing.id == recognizer.id) {
            throw Error(Errc::PatternRuntimeFailure,
                        "duplicate recognizer id '" + recognizer.id + "'");
        }
    }
    try {
        recognizer.compiled = std::regex(recognizer.pattern,
                                         recognizer.flags | std::regex::optimize);
    } catch (const std::regex_error& e) {
        throw Error(Errc::MalformedCustomPattern,
                    "recognizer '" + recognizer.id + "': " + e.what());
    }
    recognizers_.push_back(std::move(recognizer));
}

void RecognizerRegistry::add_custom_pattern(std::string_view label, std::string_view pattern) {
    EntityType type = EntityType::custom(label);
    Recognizer r{.id = "custom:" + std::string(label),
                 .entity_type = std::move(type),
                 .pattern = std::string(pattern),
                 .priority = 10};
    r.word_bounded = false;  // user patterns carry their own anchors
    add(std::move(r));
}

void RecognizerRegistry::register_dictionary(const std::map<std::string, EntityType>& terms) {
    for (const auto& [term, type] : terms) {
        if (term.empty()) throw Error(Errc::EmptyTerm, "dictionary term is empty");
        dictionary_.insert_or_assign(term, type);
    }
}

bool RecognizerRegistry::knows_type(const EntityType& type) const {
    for (const Recognizer& r : recognizers_) {
        if (r.entity_type == type) return true;
    }
    for (const auto& [term, t] : dictionary_) {
        if (t == type) return true;
    }
    return false;
}

RecognizerRegistry builtin_registry() {
    RecognizerRegistry registry;

    {
        Recognizer r = make("cert_body", types::cert_body,
                            R"(-----BEGIN CERTIFICATE-----[\s\S]*?-----END CERTIFICATE-----)",
                            100);
        r.word_bounded = false;
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("cpe_string", types::cpe_string,
                            R"(cpe:(?:2\.3:|/)[A-Za-z0-9._%~:*?+!/-]+)", 90);
        r.trim_trailing = ".,;)\"'";
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("url", types::url,
                            R"([A-Za-z][A-Za-z0-9+.-]*://[^\s<>"']+)", 80);
        r.trim_trailing = ".,;!?)]}\"'";
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("email", types::email,
                            R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})", 70);
        registry.add(std::move(r));
    }
    {
        Recognizer r = make(
            "ipv4", types::ip_address,
            R"((?:25[0-5]|2[0-4][0-9]|1[0-9][0-9]|[1-9]?[0-9])(?:\.(?:25[0-5]|2[0-4][0-9]|1[0-9][0-9]|[1-9]?[0-9])){3})",
            60);
        r.validator = validate_ipv4_context;
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("ipv6", types::ip_address,
                            R"([0-9A-Fa-f]{0,4}(?::[0-9A-Fa-f]{0,4}){2,7})", 60);
        r.validator = validate_ipv6;
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("cert_serial", types::cert_serial,
                            R"([0-9A-Fa-f]{2}(?::[0-9A-Fa-f]{2}){5,})", 50);
        r.barrier_before = ":";
        r.barrier_after = ":";
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("hash", types::hash, R"([0-9A-Fa-f]{32,})", 40);
        r.validator = validate_hash;
        registry.add(std::move(r));
    }
    {
        Recognizer r = make(
            "hostname", types::hostname,
            R"([A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?(?:\.[A-Za-z0-9](?:[A-Za-z0-9-]*[A-Za-z0-9])?)+)",
            30);
        r.validator = validate_hostname;
        registry.add(std::move(r));
    }
    {
        Recognizer r = make("credential", types::credential,
                            R"(\b(?:password|passwd|pwd|secret|token|apikey)\s*[:=]\s*(\S+))", 20,
                            std::regex::ECMAScript | std::regex::icase);
        r.capture_group = 1;
        r.trim_leading = "\"'";
        r.trim_trailing = "\"',;.)";
        r.validator = validate_credential_value;
        registry.add(std::move(r));
    }

    return registry;
}

RecognizerRegistry registry_for(const PolicyConfig& policy) {
    RecognizerRegistry registry = builtin_registry();
    for (const auto& [label, pattern] : policy.custom_patterns) {
        registry.add_custom_pattern(label, pattern);
    }
    return registry;
}

void load_declarations(RecognizerRegistry& registry, const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, "cannot open declarations: " + file.string());

    std::map<std::string, EntityType> terms;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(Errc::MalformedCustomPattern,
                        file.string() + ":" + std::to_string(line_no) +
                            ": expected TYPE<TAB>pattern-or-term");
        }
        std::string type_name = line.substr(0, tab);
        std::string payload = line.substr(tab + 1);
        auto type = EntityType::try_parse(type_name);
        if (!type) {
            throw Error(Errc::MalformedCustomPattern,
                        file.string() + ":" + std::to_string(line_no) + ": bad entity type '" +
                            type_name + "'");
        }
        if (payload.rfind("re:", 0) == 0) {
            std::string pattern = payload.substr(3);
            if (type->is_custom()) {
                registry.add_custom_pattern(type->custom_label(), pattern);
            } else {
                Recognizer r{.id = "config:" + type_name + ":" + std::to_string(line_no),
                             .entity_type = *type,
                             .pattern = std::move(pattern),
                             .priority = 10};
                r.word_bounded = false;
                registry.add(std::move(r));
            }
        } else {
            if (payload.empty()) {
                throw Error(Errc::EmptyTerm,
                            file.string() + ":" + std::to_string(line_no) + ": empty term");
            }
            terms.insert_or_assign(payload, *type);
        }
    }
    if (!terms.empty()) registry.register_dictionary(terms);
}

std::vector<Detection> run_recognizer(const Recognizer& recognizer, std::string_view text) {
    std::vector<Detection> out;
    const char* base = text.data();
    try {
        std::cregex_iterator it(base, base + text.size(), recognizer.compiled);
        std::cregex_iterator end;
        for (; it != end; ++it) {
            const std::cmatch& m = *it;
            int group = 0;
            if (recognizer.capture_group > 0) {
                if (recognizer.capture_group >= static_cast<int>(m.size()) ||
                    !m[recognizer.capture_group].matched) {
                    continue;
                }
                group = recognizer.capture_group;
            }
            std::size_t start = static_cast<std::size_t>(m.position(group));
            std::size_t stop = start + static_cast<std::size_t>(m.length(group));

            while (start < stop &&
                   recognizer.trim_leading.find(text[start]) != std::string::npos) {
                ++start;
            }
            while (stop > start &&
                   recognizer.trim_trailing.find(text[stop - 1]) != std::string::npos) {
                --stop;
            }
            if (start == stop) continue;

            if (recognizer.word_bounded) {
                if (start > 0 && is_word_char(text[start - 1])) continue;
                if (stop < text.size() && is_word_char(text[stop])) continue;
            }
            if (start > 0 &&
                recognizer.barrier_before.find(text[start - 1]) != std::string::npos) {
                continue;
            }
            if (stop < text.size() &&
                recognizer.barrier_after.find(text[stop]) != std::string::npos) {
                continue;
            }

            Span span{start, stop};
            if (recognizer.validator && !recognizer.validator(text, span)) continue;

            out.push_back(Detection{recognizer.entity_type, span,
                                    std::string(text.substr(start, stop - start)),
                                    recognizer.id});
        }
    } catch (const std::regex_error& e) {
        throw Error(Errc::PatternRuntimeFailure,
                    "recognizer '" + recognizer.id + "': " + e.what());
    }
    return out;
}

std::vector<Detection> run_dictionary(const std::map<std::string, EntityType>& terms,
                                      std::string_view text) {
    std::vector<Detection> out;
    for (const auto& [term, type] : terms) {
        if (term.empty()) continue;
        std::size_t pos = 0;
        while ((pos = text.find(term, pos)) != std::string_view::npos) {
            std::size_t stop = pos + term.size();
            bool bounded = (pos == 0 || !is_word_char(text[pos - 1])) &&
                           (stop == text.size() || !is_word_char(text[stop]));
            if (bounded) {
                out.push_back(Detection{type, Span{pos, stop}, term, "dictionary"});
            }
            ++pos;
        }
    }
    return out;
}

namespace {

int priority_of(const Detection& d, const RecognizerRegistry& registry) {
    if (d.recognizer_id == "dictionary") return 0;
    for (const Recognizer& r : registry.recognizers()) {
        if (r.id == d.recognizer_id) return r.priority;
    }
    return 0;
}

}  // namespace

std::vector<Detection> resolve_overlaps(std::vector<Detection> detections,
                                        const RecognizerRegistry& registry) {
    std::stable_sort(detections.begin(), detections.end(),
                     [&](const Detection& a, const Detection& b) {
                         std::size_t la = a.span.length();
                         std::size_t lb = b.span.length();
                         if (la != lb) return la > lb;
                         int pa = priority_of(a, registry);
                         int pb = priority_of(b, registry);
                         if (pa != pb) return pa > pb;
                         if (a.span.start != b.span.start) return a.span.start < b.span.start;
                         return a.recognizer_id < b.recognizer_id;
                     });

    std::vector<Detection> accepted;
    for (Detection& candidate : detections) {
        bool clashes = false;
        for (const Detection& kept : accepted) {
            if (candidate.span.overlaps(kept.span)) {
                clashes = true;
                break;
            }
        }
        if (!clashes) accepted.push_back(std::move(candidate));
    }

    std::sort(accepted.begin(), accepted.end(), [](const Detection& a, const Detection& b) {
        return a.span.start < b.span.start;
    });
    return accepted;
}

std::vector<Detection> recognize_all(std::string_view text, const RecognizerRegistry& registry,
                                     const PolicyConfig& policy) {
    std::vector<Detection> all;
    for (const Recognizer& r : registry.recognizers()) {
        std::vector<Detection> found = run_recognizer(r, text);
        all.insert(all.end(), std::make_move_iterator(found.begin()),
                   std::make_move_iterator(found.end()));
    }
    std::vector<Detection> dict = run_dictionary(registry.dictionary_terms(), text);
    all.insert(all.end(), std::make_move_iterator(dict.begin()),
               std::make_move_iterator(dict.end()));

    if (!policy.allow_list.empty()) {
        std::erase_if(all, [&](const Detection& d) {
            return policy.allow_list.contains(d.text);
        });
    }

    std::vector<Detection> resolved = resolve_overlaps(std::move(all), registry);

    for (Detection& d : resolved) {
        if (policy.preserve_entities.contains(d.entity_type.name())) d.preserved = true;
    }
    return resolved;
}

namespace {

std::vector<Detection> run_builtin(const char* id, std::string_view text) {
    static const RecognizerRegistry registry = builtin_registry();
    for (const Recognizer& r : registry.recognizers()) {
        if (r.id == id) return run_recognizer(r, text);
    }
    return {};
}

}  // namespace

std::vector<Detection> recognize_hash(std::string_view text) {
    return run_builtin("hash", text);
}

std::vector<Detection> recognize_cert_serial(std::string_view text) {
    return run_builtin("cert_serial", text);
}

std::vector<Detection> recognize_cert_body(std::string_view text) {
    return run_builtin("cert_body", text);
}

}  // namespace masq
