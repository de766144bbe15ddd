#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>

#include "masq/core.hpp"

using namespace masq;

TEST_CASE("entity type accepts the builtin names") {
    for (const char* name : {"IP_ADDRESS", "EMAIL", "URL", "HOSTNAME", "HASH", "CERT_SERIAL",
                             "CERT_BODY", "CPE_STRING", "CREDENTIAL"}) {
        EntityType type{name};
        CHECK(type.name() == name);
        CHECK_FALSE(type.is_custom());
        CHECK(type.custom_label().empty());
        REQUIRE(EntityType::try_parse(name).has_value());
    }
}

TEST_CASE("entity type accepts well-formed custom names") {
    EntityType parsed{"CUSTOM:PROJECT_CODE"};
    CHECK(parsed.is_custom());
    CHECK(parsed.custom_label() == "PROJECT_CODE");

    EntityType built = EntityType::custom("TICKET_ID2");
    CHECK(built.name() == "CUSTOM:TICKET_ID2");
    CHECK(built.custom_label() == "TICKET_ID2");
    CHECK(built == EntityType{"CUSTOM:TICKET_ID2"});
}

TEST_CASE("entity type rejects malformed names") {
    for (const char* name : {"", "ip_address", "EMAILS", "IP-ADDRESS", "CUSTOM:", "CUSTOM:lower",
                             "CUSTOM:WITH SPACE", "CUSTOM:DASH-ED", "custom:X", " EMAIL"}) {
        CAPTURE(name);
        CHECK_FALSE(EntityType::try_parse(name).has_value());
        CHECK_THROWS_AS(EntityType{name}, std::invalid_argument);
    }
}

TEST_CASE("builtin entity list is complete and priority-ordered") {
    const auto& all = builtin_entity_types();
    REQUIRE(all.size() == 9);
    CHECK(all.front() == types::cert_body);
    CHECK(all.back() == types::credential);
    std::set<std::string> names;
    for (const EntityType& t : all) names.insert(t.name());
    CHECK(names.size() == 9);
    CHECK(names.count("IP_ADDRESS") == 1);
    CHECK(names.count("CPE_STRING") == 1);
}

TEST_CASE("entity type compares by full name") {
    CHECK(types::email == EntityType{"EMAIL"});
    CHECK(types::email != types::url);
    CHECK((types::cert_body < types::cert_serial));  // lexicographic on the name
    CHECK((EntityType::custom("A") < EntityType::custom("B")));
}

TEST_CASE("span arithmetic") {
    Span a{2, 7};
    CHECK(a.length() == 5);
    CHECK(a.overlaps(Span{6, 9}));
    CHECK(Span{6, 9}.overlaps(a));
    CHECK_FALSE(a.overlaps(Span{7, 9}));  // half-open: touching is disjoint
    CHECK_FALSE(a.overlaps(Span{0, 2}));
    CHECK(a.contains(a));
    CHECK(a.contains(Span{3, 6}));
    CHECK(a.contains(Span{2, 7}));
    CHECK_FALSE(a.contains(Span{1, 3}));
    CHECK_FALSE(Span{3, 6}.contains(a));
    CHECK(Span{1, 2} == Span{1, 2});
    CHECK((Span{1, 2} < Span{1, 3}));
    CHECK((Span{1, 9} < Span{2, 3}));
}

TEST_CASE("default policy validates cleanly") {
    PolicyConfig policy;
    CHECK(validate_policy(policy).empty());

    policy.slug_length = 1;
    CHECK(validate_policy(policy).empty());
    policy.slug_length = 64;
    CHECK(validate_policy(policy).empty());
}

TEST_CASE("slug length bounds are enforced") {
    PolicyConfig policy;
    policy.slug_length = 0;
    auto violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::SlugLengthOutOfRange);

    policy.slug_length = 65;
    violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::SlugLengthOutOfRange);
}

TEST_CASE("preserve entities must name known types") {
    PolicyConfig policy;
    policy.preserve_entities = {"CPE_STRING", "HASH"};
    CHECK(validate_policy(policy).empty());

    policy.preserve_entities = {"CPESTRING"};
    auto violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::UnknownPreservedEntity);

    // A custom type counts as known only when a custom pattern declares it.
    policy.preserve_entities = {"CUSTOM:BADGE"};
    violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::UnknownPreservedEntity);

    policy.custom_patterns.emplace_back("BADGE", "B-[0-9]{4}");
    CHECK(validate_policy(policy).empty());
}

TEST_CASE("custom patterns are label- and compile-checked") {
    PolicyConfig policy;
    policy.custom_patterns.emplace_back("badge", "B-[0-9]{4}");
    auto violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::MalformedCustomPattern);

    policy.custom_patterns.clear();
    policy.custom_patterns.emplace_back("BADGE", "(unclosed");
    violations = validate_policy(policy);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == Errc::MalformedCustomPattern);

    policy.custom_patterns.clear();
    policy.custom_patterns.emplace_back("BADGE", "B-[0-9]{4}");
    CHECK(validate_policy(policy).empty());
}

TEST_CASE("validation reports every violation in one pass") {
    PolicyConfig policy;
    policy.slug_length = 0;
    policy.allow_list = {"", "ok"};
    policy.preserve_entities = {"NOPE"};
    policy.custom_patterns.emplace_back("bad_label", ".*");
    policy.custom_patterns.emplace_back("BROKEN", "(");

    auto violations = validate_policy(policy);
    REQUIRE(violations.size() == 5);
    auto has = [&](Errc code) {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const PolicyViolation& v) { return v.code == code; });
    };
    CHECK(has(Errc::SlugLengthOutOfRange));
    CHECK(has(Errc::EmptyAllowListEntry));
    CHECK(has(Errc::UnknownPreservedEntity));
    CHECK(has(Errc::MalformedCustomPattern));
}

TEST_CASE("clock emits RFC 3339 UTC") {
    std::string now = now_rfc3339();
    CHECK(now.size() == 20);
    CHECK(now.back() == 'Z');
    CHECK(now[4] == '-');
    CHECK(now[10] == 'T');
    CHECK(is_rfc3339(now));
}

TEST_CASE("timestamp shape check") {
    CHECK(is_rfc3339("2026-01-02T15:04:05Z"));
    CHECK(is_rfc3339("2026-01-02T15:04:05.123Z"));
    CHECK(is_rfc3339("2026-01-02T15:04:05+02:00"));
    CHECK_FALSE(is_rfc3339("2026-01-02 15:04:05Z"));
    CHECK_FALSE(is_rfc3339("2026-01-02T15:04:05"));
    CHECK_FALSE(is_rfc3339("yesterday"));
    CHECK_FALSE(is_rfc3339(""));
}

TEST_CASE("errors carry their code and a named message") {
    Error error{Errc::KeyMismatch, "digest verification failed"};
    CHECK(error.code() == Errc::KeyMismatch);
    CHECK(std::string(error.what()).find("KeyMismatch") == 0);
    CHECK(std::string(error.what()).find("digest verification failed") != std::string::npos);

    CHECK(std::string(errc_name(Errc::VaultMissing)) == "VaultMissing");
    CHECK(std::string(errc_name(Errc::OcrEngineMissing)) == "OcrEngineMissing");
}
