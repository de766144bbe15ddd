#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "masq/core.hpp"
#include "masq/vault.hpp"

namespace masq {

// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitPartialFailure = 2;

struct AnonymizeOptions {
    std::vector<std::filesystem::path> inputs;
    PolicyConfig policy;
    std::filesystem::path vault_path = "entities.ndjson";
    std::optional<std::filesystem::path> out;              // single-input override
    std::optional<std::string> ocr_cmd;                    // else OCR_CMD env, else default
    std::optional<std::filesystem::path> recognizers_file; // TYPE<TAB>payload declarations
    std::optional<std::filesystem::path> report_path;      // detections as pred line-JSON
    std::string actor = "cli";
    std::size_t workers = 4;
};

struct DeanonymizeOptions {
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path vault_path = "entities.ndjson";
    std::optional<std::filesystem::path> out;
    std::string actor = "cli";
};

struct EvalOptions {
    std::filesystem::path gold;
    std::filesystem::path pred;
};

struct VaultListOptions {
    std::filesystem::path vault_path = "entities.ndjson";
    std::optional<std::string> type;
    bool suggest_allowlist = false;
};

/// Outcome of restoring one text buffer.
struct RestoreOutcome {
    std::string text;
    std::size_t restored = 0;               // token occurrences substituted
    std::vector<std::string> unknown;       // tokens left in place
};

/// Scans for `<TYPE_hex>` tokens, verifies each vault row by recomputing the
/// digest under `key` (a mismatch aborts with Errc::KeyMismatch before any
/// substitution), substitutes originals, and appends one DEANONYMIZE audit
/// event per restored occurrence. Unknown slugs stay in place and are listed.
RestoreOutcome restore_text(std::string_view text, const std::string& key, Vault& vault,
                            const std::string& actor);

/// Deanonymize output naming: ".anon." becomes ".restored.", otherwise
/// ".restored" lands before the extension.
std::filesystem::path restored_output_path(const std::filesystem::path& input);

// Subcommand entry points. The secret key comes from the SECRET_KEY
// environment variable; its absence is a configuration error (exit 1).
int cmd_anonymize(const AnonymizeOptions& options, std::ostream& out, std::ostream& err);
int cmd_deanonymize(const DeanonymizeOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_vault_list(const VaultListOptions& options, std::ostream& out, std::ostream& err);

/// Full argv-level entry point (CLI11 wiring lives behind it).
int run_cli(int argc, char** argv);

/// Comma-separated flag values, whitespace-trimmed, empties dropped;
/// the --allow-list / --preserve-entities syntax.
std::vector<std::string> split_csv_flag(std::string_view value);

}  // namespace masq
