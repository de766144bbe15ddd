#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "masq/core.hpp"
#include "masq/ocr.hpp"
#include "masq/recognizers.hpp"
#include "masq/vault.hpp"
#include "masq/xml.hpp"

namespace masq {

enum class DocFormat { Text, Csv, Json, Xml, Image };

const char* format_name(DocFormat format);

/// Extension dispatch first (.txt/.csv/.json/.xml/.png/.jpg/.jpeg), content
/// sniff for anything else (leading '<' -> XML, '{'/'[' -> JSON), TEXT
/// fallback. Throws Errc::UnreadableFile.
DocFormat detect_format(const std::filesystem::path& path);

/// Per-document outcome.
struct DocumentReport {
    std::filesystem::path source;
    DocFormat format = DocFormat::Text;
    std::vector<Detection> detections;   // includes preserved ones
    std::size_t replacements = 0;        // non-preserved detection count
    std::filesystem::path output;
    std::vector<std::string> warnings;
};

using OrderedJson = nlohmann::ordered_json;

/// Format-aware anonymization engine: one RunContext + vault + registry,
/// shared across documents. Vault writes serialize internally, so one Engine
/// may process distinct files from several threads.
class Engine {
public:
    Engine(RunContext ctx, Vault& vault, RecognizerRegistry registry,
           std::string ocr_cmd = std::string(kDefaultOcrCommand));

    /// Detects with recognize_all, then replaces non-preserved detections with
    /// their tokens in descending span order (earlier offsets stay valid).
    /// Returns the rewritten text plus every detection, preserved included.
    std::pair<std::string, std::vector<Detection>> anonymize_text(std::string_view text,
                                                                  std::string_view source = "");

    /// Cell-wise CSV anonymization; row and cell counts are untouched.
    std::vector<std::vector<std::string>> anonymize_csv(
        const std::vector<std::vector<std::string>>& rows, std::string_view source,
        std::vector<Detection>* detections = nullptr);

    /// Recursive JSON rewrite: string values only (keys too when the policy
    /// asks); numbers, booleans, nulls, shapes, and key order untouched.
    OrderedJson anonymize_json(const OrderedJson& document, std::string_view source,
                               std::vector<Detection>* detections = nullptr);

    /// Recursive XML rewrite: text nodes, CDATA contents, and attribute
    /// values; names, order, comments, and PIs untouched.
    xml::Document anonymize_xml(const xml::Document& document, std::string_view source,
                                std::vector<Detection>* detections = nullptr);

    /// Routes `path` through the processor for its detected format, writes
    /// `<stem>.anon.<ext>` beside it (or `out`), appends one ANONYMIZE audit
    /// event, and returns the report.
    DocumentReport process_file(const std::filesystem::path& path,
                                const std::optional<std::filesystem::path>& out = std::nullopt);

    /// OCR boundary: runs the external engine, anonymizes the transcript, and
    /// writes it as `<stem>.anon.txt`. The anonymizer only ever sees the
    /// transcript, never image bytes.
    DocumentReport process_image(const std::filesystem::path& path,
                                 const std::optional<std::filesystem::path>& out = std::nullopt);

    const RunContext& context() const noexcept { return ctx_; }
    const RecognizerRegistry& registry() const noexcept { return registry_; }
    Vault& vault() noexcept { return vault_; }

private:
    RunContext ctx_;
    Vault& vault_;
    RecognizerRegistry registry_;
    std::string ocr_cmd_;
};

// CSV dialect: comma separator, double-quote quoting (RFC-4180-style), LF
// line endings. parse_csv reports row/col on malformed quoting; write_csv
// re-quotes only cells that need it.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string write_csv(const std::vector<std::vector<std::string>>& rows,
                      bool trailing_newline = true);

/// Output path convention: `<stem>.anon.<ext>` beside the input.
std::filesystem::path default_output_path(const std::filesystem::path& input);

std::string read_file(const std::filesystem::path& path);          // Errc::UnreadableFile
void write_file(const std::filesystem::path& path, std::string_view content);  // Errc::WriteFailure

}  // namespace masq
