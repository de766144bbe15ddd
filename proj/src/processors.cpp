#include "masq/processors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "masq/pseudonym.hpp"

namespace masq {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return ext;
}

void append_detections(std::vector<Detection>* sink, const std::vector<Detection>& found) {
    if (sink != nullptr) sink->insert(sink->end(), found.begin(), found.end());
}

}  // namespace

const char* format_name(DocFormat format) {
    switch (format) {
        case DocFormat::Text:
            return "TEXT";
        case DocFormat::Csv:
            return "CSV";
        case DocFormat::Json:
            return "JSON";
        case DocFormat::Xml:
            return "XML";
        case DocFormat::Image:
            return "IMAGE";
    }
    return "TEXT";
}

DocFormat detect_format(const std::filesystem::path& path) {
    std::string ext = lower_extension(path);
    if (ext == ".txt") return DocFormat::Text;
    if (ext == ".csv") return DocFormat::Csv;
    if (ext == ".json") return DocFormat::Json;
    if (ext == ".xml") return DocFormat::Xml;
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") return DocFormat::Image;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, path.string());
    char buffer[512];
    in.read(buffer, sizeof buffer);
    std::string_view head(buffer, static_cast<std::size_t>(in.gcount()));
    for (char c : head) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        if (c == '<') return DocFormat::Xml;
        if (c == '{' || c == '[') return DocFormat::Json;
        break;
    }
    return DocFormat::Text;
}

Engine::Engine(RunContext ctx, Vault& vault, RecognizerRegistry registry, std::string ocr_cmd)
    : ctx_(std::move(ctx)), vault_(vault), registry_(std::move(registry)),
      ocr_cmd_(std::move(ocr_cmd)) {
    std::vector<PolicyViolation> violations = validate_policy(ctx_.policy);
    if (!violations.empty()) throw Error(violations.front().code, violations.front().message);
}

std::pair<std::string, std::vector<Detection>> Engine::anonymize_text(std::string_view text,
                                                                      std::string_view source) {
    std::vector<Detection> detections = recognize_all(text, registry_, ctx_.policy);
    std::string result(text);
    // Replace back-to-front so earlier spans keep their offsets.
    for (auto it = detections.rbegin(); it != detections.rend(); ++it) {
        if (it->preserved) continue;
        Token token = pseudonymize(ctx_, vault_, it->entity_type, it->text, source);
        result.replace(it->span.start, it->span.length(), token.rendered);
    }
    return {std::move(result), std::move(detections)};
}

std::vector<std::vector<std::string>> Engine::anonymize_csv(
    const std::vector<std::vector<std::string>>& rows, std::string_view source,
    std::vector<Detection>* detections) {
    std::vector<std::vector<std::string>> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        std::vector<std::string> new_row;
        new_row.reserve(row.size());
        for (const std::string& cell : row) {
            auto [rewritten, found] = anonymize_text(cell, source);
            append_detections(detections, found);
            new_row.push_back(std::move(rewritten));
        }
        out.push_back(std::move(new_row));
    }
    return out;
}

OrderedJson Engine::anonymize_json(const OrderedJson& document, std::string_view source,
                                   std::vector<Detection>* detections) {
    if (document.is_string()) {
        auto [rewritten, found] = anonymize_text(document.get<std::string>(), source);
        append_detections(detections, found);
        return OrderedJson(std::move(rewritten));
    }
    if (document.is_object()) {
        OrderedJson out = OrderedJson::object();
        for (const auto& [key, value] : document.items()) {
            std::string new_key = key;
            if (ctx_.policy.scan_json_keys) {
                auto [rewritten, found] = anonymize_text(key, source);
                append_detections(detections, found);
                new_key = std::move(rewritten);
            }
            out[new_key] = anonymize_json(value, source, detections);
        }
        return out;
    }
    if (document.is_array()) {
        OrderedJson out = OrderedJson::array();
        for (const auto& item : document) {
            out.push_back(anonymize_json(item, source, detections));
        }
        return out;
    }
    return document;  // numbers, booleans, nulls pass through
}

xml::Document Engine::anonymize_xml(const xml::Document& document, std::string_view source,
                                    std::vector<Detection>* detections) {
    xml::Document out = document;

    auto walk = [&](auto&& self, xml::Node& node) -> void {
        switch (node.kind) {
            case xml::NodeKind::Text:
            case xml::NodeKind::Cdata: {
                auto [rewritten, found] = anonymize_text(node.text, source);
                append_detections(detections, found);
                node.text = std::move(rewritten);
                return;
            }
            case xml::NodeKind::Comment:
            case xml::NodeKind::ProcInstr:
                return;
            case xml::NodeKind::Element:
                break;
        }
        for (auto& [name, value] : node.attributes) {
            auto [rewritten, found] = anonymize_text(value, source);
            append_detections(detections, found);
            value = std::move(rewritten);
        }
        for (xml::Node& child : node.children) self(self, child);
    };
    walk(walk, out.root);
    return out;
}

DocumentReport Engine::process_file(const std::filesystem::path& path,
                                    const std::optional<std::filesystem::path>& out) {
    DocFormat format = detect_format(path);
    if (format == DocFormat::Image) return process_image(path, out);

    DocumentReport report;
    report.source = path;
    report.format = format;

    const std::string source_id = path.filename().string();
    const std::string content = read_file(path);
    std::string output;

    try {
        switch (format) {
            case DocFormat::Text: {
                auto [rewritten, found] = anonymize_text(content, source_id);
                output = std::move(rewritten);
                report.detections = std::move(found);
                break;
            }
            case DocFormat::Csv: {
                auto rows = parse_csv(content);
                auto new_rows = anonymize_csv(rows, source_id, &report.detections);
                output = write_csv(new_rows, content.empty() || content.back() == '\n');
                break;
            }
            case DocFormat::Json: {
                OrderedJson doc = OrderedJson::parse(content, nullptr, true);
                OrderedJson rewritten = anonymize_json(doc, source_id, &report.detections);
                output = rewritten.dump(2);
                output += '\n';
                break;
            }
            case DocFormat::Xml: {
                xml::Document doc = xml::parse(content);
                xml::Document rewritten = anonymize_xml(doc, source_id, &report.detections);
                output = xml::serialize(rewritten);
                break;
            }
            case DocFormat::Image:
                break;  // handled above
        }
    } catch (const OrderedJson::parse_error& e) {
        throw Error(Errc::MalformedJson, path.string() + ": " + e.what());
    }

    report.output = out.value_or(default_output_path(path));
    write_file(report.output, output);
    report.replacements = static_cast<std::size_t>(
        std::count_if(report.detections.begin(), report.detections.end(),
                      [](const Detection& d) { return !d.preserved; }));

    vault_.append_audit({now_rfc3339(), ctx_.audit_actor, AuditAction::Anonymize, "",
                         source_id + " -> " + report.output.filename().string() + " (" +
                             format_name(format) + ", " +
                             std::to_string(report.replacements) + " replacements)"});
    return report;
}

DocumentReport Engine::process_image(const std::filesystem::path& path,
                                     const std::optional<std::filesystem::path>& out) {
    OcrResult ocr = run_ocr(path, ocr_cmd_);

    DocumentReport report;
    report.source = path;
    report.format = DocFormat::Image;
    report.warnings = ocr.warnings;

    const std::string source_id = path.filename().string();
    auto [rewritten, found] = anonymize_text(ocr.transcript, source_id);
    report.detections = std::move(found);

    std::filesystem::path target;
    if (out) {
        target = *out;
    } else {
        target = path.parent_path() / (path.stem().string() + ".anon.txt");
    }
    report.output = target;
    write_file(target, rewritten);
    report.replacements = static_cast<std::size_t>(
        std::count_if(report.detections.begin(), report.detections.end(),
                      [](const Detection& d) { return !d.preserved; }));

    vault_.append_audit({now_rfc3339(), ctx_.audit_actor, AuditAction::Anonymize, "",
                         source_id + " -> " + report.output.filename().string() + " (IMAGE, " +
                             std::to_string(report.replacements) + " replacements)"});
    return report;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;

    std::size_t line = 1;
    std::size_t col = 1;

    auto malformed = [&](const std::string& what) {
        throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": " + what);
    };
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_quoted = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        ++line;
        col = 1;
    };

    std::size_t i = 0;
    const std::size_t n = text.size();
    if (n == 0) return rows;

    while (i < n) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                    col += 2;
                } else {
                    in_quotes = false;
                    ++i;
                    ++col;
                }
            } else {
                if (c == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
                field += c;
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_quoted) {
                    in_quotes = true;
                    field_quoted = true;
                } else {
                    malformed("quote inside unquoted field");
                }
                ++i;
                ++col;
                break;
            case ',':
                end_field();
                ++i;
                ++col;
                break;
            case '\r':
                if (i + 1 < n && text[i + 1] == '\n') {
                    end_row();
                    i += 2;
                } else {
                    field += c;
                    ++i;
                    ++col;
                }
                break;
            case '\n':
                end_row();
                ++i;
                break;
            default:
                if (field_quoted) malformed("data after closing quote");
                field += c;
                ++i;
                ++col;
        }
    }
    if (in_quotes) malformed("unterminated quoted field");
    if (!field.empty() || field_quoted || !row.empty()) end_row();
    return rows;
}

std::string write_csv(const std::vector<std::vector<std::string>>& rows, bool trailing_newline) {
    auto needs_quoting = [](const std::string& cell) {
        return cell.find_first_of(",\"\r\n") != std::string::npos;
    };
    std::string out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (r > 0) out += '\n';
        const auto& row = rows[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += ',';
            const std::string& cell = row[c];
            if (needs_quoting(cell)) {
                out += '"';
                for (char ch : cell) {
                    if (ch == '"') out += "\"\"";
                    else out += ch;
                }
                out += '"';
            } else {
                out += cell;
            }
        }
    }
    if (trailing_newline && !rows.empty()) out += '\n';
    return out;
}

std::filesystem::path default_output_path(const std::filesystem::path& input) {
    std::filesystem::path out = input.parent_path() / input.stem();
    out += ".anon";
    out += input.extension();
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw Error(Errc::UnreadableFile, path.string());
    return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::WriteFailure, path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(Errc::WriteFailure, path.string());
}

}  // namespace masq
