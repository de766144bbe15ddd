#include "masq/cli.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "masq/eval.hpp"
#include "masq/processors.hpp"
#include "masq/pseudonym.hpp"
#include "masq/recognizers.hpp"

#include <CLI11.hpp>

namespace masq {

namespace {

// Exact complement of format_token: uppercase type, '_', lowercase hex slug.
const std::regex kTokenPattern(R"(<([A-Z][A-Z0-9_:]*)_([0-9a-f]{1,64})>)");

struct TokenHit {
    Span span;
    EntityType entity_type;
    std::string slug;
    std::string rendered;
};

std::vector<TokenHit> scan_tokens(std::string_view text) {
    std::vector<TokenHit> hits;
    std::cregex_iterator it(text.data(), text.data() + text.size(), kTokenPattern);
    std::cregex_iterator end;
    for (; it != end; ++it) {
        const std::cmatch& m = *it;
        auto type = EntityType::try_parse(m[1].str());
        if (!type) continue;
        std::size_t start = static_cast<std::size_t>(m.position(0));
        hits.push_back(TokenHit{Span{start, start + static_cast<std::size_t>(m.length(0))},
                                *type, m[2].str(), m.str()});
    }
    return hits;
}

// Integrity gate: a hit whose vault row exists (with matching type) must
// reproduce its stored digest under `key`; otherwise the key is wrong or the
// vault was tampered with, and nothing may be substituted.
void verify_hits(const std::vector<TokenHit>& hits, const std::string& key, Vault& vault) {
    for (const TokenHit& hit : hits) {
        auto record = vault.find_by_slug(hit.slug);
        if (!record || !(record->entity_type == hit.entity_type)) continue;
        Digest256 digest = compute_digest(key, record->entity_type, record->original_value);
        if (digest.hex() != record->digest_hex) {
            throw Error(Errc::KeyMismatch,
                        "digest verification failed for slug '" + hit.slug +
                            "' (wrong SECRET_KEY or tampered vault)");
        }
    }
}

std::string env_or(const char* name, std::string fallback) {
    const char* value = std::getenv(name);
    return (value != nullptr && *value != '\0') ? std::string(value) : std::move(fallback);
}

std::optional<std::string> secret_key_from_env() {
    const char* value = std::getenv("SECRET_KEY");
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

int config_error(std::ostream& err, const std::string& message) {
    err << "error: " << message << "\n";
    return kExitConfigError;
}

std::string format_ratio(double value) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << value;
    return out.str();
}

}  // namespace

std::vector<std::string> split_csv_flag(std::string_view value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        std::string_view item = comma == std::string_view::npos
                                    ? value.substr(pos)
                                    : value.substr(pos, comma - pos);
        std::size_t first = item.find_first_not_of(" \t");
        if (first != std::string_view::npos) {
            std::size_t last = item.find_last_not_of(" \t");
            out.emplace_back(item.substr(first, last - first + 1));
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

RestoreOutcome restore_text(std::string_view text, const std::string& key, Vault& vault,
                            const std::string& actor) {
    std::vector<TokenHit> hits = scan_tokens(text);
    verify_hits(hits, key, vault);

    RestoreOutcome outcome;
    outcome.text.assign(text);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
        auto record = vault.find_by_slug(it->slug);
        if (!record || !(record->entity_type == it->entity_type)) {
            outcome.unknown.push_back(it->rendered);
            continue;
        }
        outcome.text.replace(it->span.start, it->span.length(), record->original_value);
        ++outcome.restored;
        vault.append_audit({now_rfc3339(), actor, AuditAction::Deanonymize, it->slug,
                            "restored in place"});
    }
    std::reverse(outcome.unknown.begin(), outcome.unknown.end());
    return outcome;
}

std::filesystem::path restored_output_path(const std::filesystem::path& input) {
    std::string name = input.filename().string();
    std::size_t at = name.find(".anon.");
    if (at != std::string::npos) {
        name.replace(at, 6, ".restored.");
        return input.parent_path() / name;
    }
    std::filesystem::path out = input.parent_path() / input.stem();
    out += ".restored";
    out += input.extension();
    return out;
}

int cmd_anonymize(const AnonymizeOptions& options, std::ostream& out, std::ostream& err) {
    auto key = secret_key_from_env();
    if (!key) {
        return config_error(err,
                            "SECRET_KEY is not set; export SECRET_KEY=<secret> and retry");
    }
    std::vector<PolicyViolation> violations = validate_policy(options.policy);
    if (!violations.empty()) {
        for (const PolicyViolation& v : violations) err << "error: " << v.message << "\n";
        return kExitConfigError;
    }
    if (options.inputs.empty()) return config_error(err, "no input files given");
    if (options.out && options.inputs.size() > 1) {
        return config_error(err, "--out is only valid with a single input file");
    }

    RunContext ctx;
    ctx.secret_key = *key;
    ctx.policy = options.policy;
    ctx.vault_path = options.vault_path;
    ctx.audit_actor = options.actor;

    std::string ocr_cmd = options.ocr_cmd
                              ? *options.ocr_cmd
                              : env_or("OCR_CMD", std::string(kDefaultOcrCommand));

    std::optional<Vault> vault;
    std::optional<Engine> engine;
    try {
        RecognizerRegistry registry = registry_for(options.policy);
        if (options.recognizers_file) load_declarations(registry, *options.recognizers_file);
        vault.emplace(options.vault_path);
        engine.emplace(ctx, *vault, std::move(registry), ocr_cmd);
    } catch (const Error& e) {
        return config_error(err, e.what());
    }

    const std::size_t n = options.inputs.size();
    std::vector<std::optional<DocumentReport>> reports(n);
    std::vector<std::string> failures(n);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                reports[i] = engine->process_file(options.inputs[i],
                                                  n == 1 ? options.out : std::nullopt);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    std::size_t thread_count = std::max<std::size_t>(1, std::min(options.workers, n));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    std::size_t total_detections = 0;
    std::size_t total_replacements = 0;
    std::size_t failed = 0;
    std::vector<Annotation> exported;
    for (std::size_t i = 0; i < n; ++i) {
        if (reports[i]) {
            const DocumentReport& r = *reports[i];
            total_detections += r.detections.size();
            total_replacements += r.replacements;
            out << r.source.string() << " -> " << r.output.string() << " ("
                << format_name(r.format) << "): " << r.detections.size() << " detections, "
                << r.replacements << " replaced\n";
            for (const std::string& w : r.warnings) out << "  warning: " << w << "\n";
            for (const Detection& d : r.detections) {
                exported.push_back(Annotation{r.source.filename().string(), d.span,
                                              d.entity_type, d.text});
            }
        } else {
            ++failed;
            err << "error: " << options.inputs[i].string() << ": " << failures[i] << "\n";
        }
    }
    out << "Processed " << (n - failed) << "/" << n << " files: " << total_detections
        << " detections, " << total_replacements << " replacements\n";

    if (options.report_path) {
        try {
            write_annotations(*options.report_path, exported);
        } catch (const Error& e) {
            err << "error: " << e.what() << "\n";
            ++failed;
        }
    }
    return failed == 0 ? kExitOk : kExitPartialFailure;
}

int cmd_deanonymize(const DeanonymizeOptions& options, std::ostream& out, std::ostream& err) {
    auto key = secret_key_from_env();
    if (!key) {
        return config_error(err,
                            "SECRET_KEY is not set; export SECRET_KEY=<secret> and retry");
    }
    if (options.inputs.empty()) return config_error(err, "no input files given");
    if (options.out && options.inputs.size() > 1) {
        return config_error(err, "--out is only valid with a single input file");
    }
    if (!std::filesystem::exists(options.vault_path)) {
        err << "error: " << errc_name(Errc::VaultMissing) << ": no vault at "
            << options.vault_path.string() << "\n";
        return kExitConfigError;
    }

    std::optional<Vault> vault;
    try {
        vault.emplace(options.vault_path);
    } catch (const Error& e) {
        return config_error(err, e.what());
    }

    std::size_t failed = 0;
    std::size_t unknown_total = 0;
    for (const std::filesystem::path& input : options.inputs) {
        try {
            const std::string content = read_file(input);
            DocFormat format = detect_format(input);

            std::string restored_text;
            std::size_t restored = 0;
            std::vector<std::string> unknown;

            if (format == DocFormat::Xml) {
                xml::Document doc = xml::parse(content);
                // Verify every buffer before touching any, so a wrong key
                // leaves the audit log untouched.
                std::vector<std::string*> buffers;
                auto collect = [&](auto&& self, xml::Node& node) -> void {
                    switch (node.kind) {
                        case xml::NodeKind::Text:
                        case xml::NodeKind::Cdata:
                            buffers.push_back(&node.text);
                            return;
                        case xml::NodeKind::Element:
                            for (auto& [name, value] : node.attributes) {
                                buffers.push_back(&value);
                            }
                            for (xml::Node& child : node.children) self(self, child);
                            return;
                        default:
                            return;
                    }
                };
                collect(collect, doc.root);
                for (std::string* buffer : buffers) {
                    verify_hits(scan_tokens(*buffer), *key, *vault);
                }
                for (std::string* buffer : buffers) {
                    RestoreOutcome piece = restore_text(*buffer, *key, *vault, options.actor);
                    *buffer = std::move(piece.text);
                    restored += piece.restored;
                    unknown.insert(unknown.end(), piece.unknown.begin(), piece.unknown.end());
                }
                restored_text = xml::serialize(doc);
            } else if (format == DocFormat::Json) {
                OrderedJson doc = OrderedJson::parse(content, nullptr, true);
                auto collect = [&](auto&& self, const OrderedJson& node) -> void {
                    if (node.is_string()) {
                        verify_hits(scan_tokens(node.get_ref<const std::string&>()), *key,
                                    *vault);
                    } else if (node.is_object()) {
                        for (const auto& [k, v] : node.items()) {
                            verify_hits(scan_tokens(k), *key, *vault);
                            self(self, v);
                        }
                    } else if (node.is_array()) {
                        for (const auto& item : node) self(self, item);
                    }
                };
                collect(collect, doc);
                auto restore_buffer = [&](const std::string& buffer) {
                    RestoreOutcome piece = restore_text(buffer, *key, *vault, options.actor);
                    restored += piece.restored;
                    unknown.insert(unknown.end(), piece.unknown.begin(), piece.unknown.end());
                    return std::move(piece.text);
                };
                auto rewrite = [&](auto&& self, OrderedJson& node) -> void {
                    if (node.is_string()) {
                        node = restore_buffer(node.get_ref<const std::string&>());
                    } else if (node.is_object()) {
                        OrderedJson rebuilt = OrderedJson::object();
                        for (auto& [k, v] : node.items()) {
                            self(self, v);
                            rebuilt[restore_buffer(k)] = std::move(v);
                        }
                        node = std::move(rebuilt);
                    } else if (node.is_array()) {
                        for (auto& item : node) self(self, item);
                    }
                };
                rewrite(rewrite, doc);
                restored_text = doc.dump(2);
                restored_text += '\n';
            } else {
                RestoreOutcome outcome = restore_text(content, *key, *vault, options.actor);
                restored_text = std::move(outcome.text);
                restored = outcome.restored;
                unknown = std::move(outcome.unknown);
            }

            std::filesystem::path target =
                options.out ? *options.out : restored_output_path(input);
            write_file(target, restored_text);

            out << input.string() << " -> " << target.string() << ": " << restored
                << " tokens restored";
            if (!unknown.empty()) {
                out << ", " << unknown.size() << " unknown";
            }
            out << "\n";
            for (const std::string& token : unknown) {
                err << "warning: unknown token left in place: " << token << "\n";
            }
            unknown_total += unknown.size();
        } catch (const Error& e) {
            if (e.code() == Errc::KeyMismatch) {
                err << "error: " << e.what() << "\n";
                return kExitConfigError;
            }
            err << "error: " << input.string() << ": " << e.what() << "\n";
            ++failed;
        } catch (const OrderedJson::parse_error& e) {
            err << "error: " << input.string() << ": " << e.what() << "\n";
            ++failed;
        }
    }
    return (failed == 0 && unknown_total == 0) ? kExitOk : kExitPartialFailure;
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
    try {
        std::vector<Annotation> gold = load_annotations(options.gold);
        std::vector<Annotation> pred = load_annotations(options.pred);

        MatchCounts counts = match_detections(gold, pred);
        MetricsReport report = compute_metrics(counts.tp, counts.fp, counts.fn);

        out << "gold: " << gold.size() << "  pred: " << pred.size() << "\n";
        out << "TP: " << report.tp << "  FP: " << report.fp << "  FN: " << report.fn << "\n";
        out << "precision: " << format_ratio(report.precision)
            << "  recall: " << format_ratio(report.recall)
            << "  f1: " << format_ratio(report.f1) << "\n";

        std::map<std::string, MetricsReport> per_type = per_type_metrics(gold, pred);
        for (const auto& [type, m] : per_type) {
            out << "  " << type << ": tp=" << m.tp << " fp=" << m.fp << " fn=" << m.fn
                << " precision=" << format_ratio(m.precision)
                << " recall=" << format_ratio(m.recall) << " f1=" << format_ratio(m.f1)
                << "\n";
        }

        nlohmann::ordered_json machine;
        machine["tp"] = report.tp;
        machine["fp"] = report.fp;
        machine["fn"] = report.fn;
        machine["precision"] = report.precision;
        machine["recall"] = report.recall;
        machine["f1"] = report.f1;
        out << machine.dump() << "\n";
        return kExitOk;
    } catch (const Error& e) {
        return config_error(err, e.what());
    }
}

int cmd_vault_list(const VaultListOptions& options, std::ostream& out, std::ostream& err) {
    if (!std::filesystem::exists(options.vault_path)) {
        err << "error: " << errc_name(Errc::VaultMissing) << ": no vault at "
            << options.vault_path.string() << "\n";
        return kExitConfigError;
    }
    try {
        Vault vault(options.vault_path);
        std::optional<EntityType> filter;
        if (options.type) {
            auto parsed = EntityType::try_parse(*options.type);
            if (!parsed) return config_error(err, "unknown entity type '" + *options.type + "'");
            filter = *parsed;
        }
        std::vector<PseudonymRecord> records = vault.list_entities(filter);

        if (options.suggest_allowlist) {
            std::set<std::string> values;
            for (const PseudonymRecord& r : records) values.insert(r.original_value);
            std::string joined;
            for (const std::string& v : values) {
                if (!joined.empty()) joined += ',';
                joined += v;
            }
            out << joined << "\n";
        } else {
            out << "slug\ttype\tvalue\tfirst_seen\tsource\n";
            for (const PseudonymRecord& r : records) {
                out << r.slug << '\t' << r.entity_type.name() << '\t' << r.original_value
                    << '\t' << r.first_seen << '\t' << r.source << "\n";
            }
        }
        vault.append_audit({now_rfc3339(), "cli", AuditAction::Export, "",
                            (options.suggest_allowlist ? "allow-list suggestion over "
                                                       : "listing of ") +
                                std::to_string(records.size()) + " records" +
                                (filter ? " of type " + filter->name() : "")});
        return kExitOk;
    } catch (const Error& e) {
        return config_error(err, e.what());
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Reversible, structure-preserving pseudonymization for incident data"};
    app.require_subcommand(1);

    // --- anonymize ---
    AnonymizeOptions anon;
    std::vector<std::string> anon_inputs;
    std::string allow_csv;
    std::string preserve_csv;
    std::vector<std::string> custom_patterns;
    std::string anon_out;
    std::string anon_ocr;
    std::string anon_recognizers;
    std::string anon_report;

    CLI::App* anonymize = app.add_subcommand("anonymize", "Pseudonymize documents");
    anonymize->add_option("inputs", anon_inputs, "Input files")->required();
    anonymize->add_option("--lang", anon.policy.lang, "Language tag (metadata only)");
    anonymize->add_option("--slug-length", anon.policy.slug_length,
                          "Token slug length in hex chars (1..64)");
    anonymize->add_option("--allow-list", allow_csv,
                          "Comma-separated terms never replaced");
    anonymize->add_option("--preserve-entities", preserve_csv,
                          "Comma-separated entity types detected but kept");
    anonymize->add_option("--custom-pattern", custom_patterns,
                          "LABEL=REGEX custom recognizer (repeatable)");
    anonymize->add_option("--vault", anon.vault_path, "Entity store path");
    anonymize->add_option("--out", anon_out, "Output path (single input only)");
    anonymize->add_option("--ocr-cmd", anon_ocr, "OCR command template with {input}");
    anonymize->add_option("--recognizers", anon_recognizers,
                          "Declarations file: TYPE<TAB>regex-or-term per line");
    anonymize->add_option("--report", anon_report,
                          "Write detections as line-JSON annotations");
    anonymize->add_option("--actor", anon.actor, "Audit log actor name");
    anonymize->add_option("--workers", anon.workers, "Parallel file workers");
    anonymize->add_flag("--scan-json-keys", anon.policy.scan_json_keys,
                        "Also scan JSON object keys");

    // --- deanonymize ---
    DeanonymizeOptions dean;
    std::vector<std::string> dean_inputs;
    std::string dean_out;
    CLI::App* deanonymize = app.add_subcommand("deanonymize", "Restore original documents");
    deanonymize->add_option("inputs", dean_inputs, "Anonymized files")->required();
    deanonymize->add_option("--vault", dean.vault_path, "Entity store path");
    deanonymize->add_option("--out", dean_out, "Output path (single input only)");
    deanonymize->add_option("--actor", dean.actor, "Audit log actor name");

    // --- eval ---
    EvalOptions eval_opts;
    std::string gold_path;
    std::string pred_path;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Score predictions against gold spans");
    eval_cmd->add_option("--gold", gold_path, "Gold annotations (line JSON)")->required();
    eval_cmd->add_option("--pred", pred_path, "Predicted annotations (line JSON)")->required();

    // --- vault list ---
    VaultListOptions list_opts;
    std::string list_type;
    CLI::App* vault_cmd = app.add_subcommand("vault", "Entity store operations");
    vault_cmd->require_subcommand(1);
    CLI::App* vault_list = vault_cmd->add_subcommand("list", "List stored entities");
    vault_list->add_option("--vault", list_opts.vault_path, "Entity store path");
    vault_list->add_option("--type", list_type, "Restrict to one entity type");
    vault_list->add_flag("--suggest-allowlist", list_opts.suggest_allowlist,
                         "Print distinct values as a comma-joined allow-list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    if (anonymize->parsed()) {
        for (const std::string& p : anon_inputs) anon.inputs.emplace_back(p);
        for (const std::string& term : split_csv_flag(allow_csv)) {
            anon.policy.allow_list.insert(term);
        }
        for (const std::string& type : split_csv_flag(preserve_csv)) {
            anon.policy.preserve_entities.insert(type);
        }
        for (const std::string& spec : custom_patterns) {
            std::size_t eq = spec.find('=');
            if (eq == std::string::npos || eq == 0) {
                return config_error(std::cerr,
                                    "--custom-pattern expects LABEL=REGEX, got '" + spec + "'");
            }
            anon.policy.custom_patterns.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
        }
        if (!anon_out.empty()) anon.out = anon_out;
        if (!anon_ocr.empty()) anon.ocr_cmd = anon_ocr;
        if (!anon_recognizers.empty()) anon.recognizers_file = anon_recognizers;
        if (!anon_report.empty()) anon.report_path = anon_report;
        return cmd_anonymize(anon, std::cout, std::cerr);
    }
    if (deanonymize->parsed()) {
        for (const std::string& p : dean_inputs) dean.inputs.emplace_back(p);
        if (!dean_out.empty()) dean.out = dean_out;
        return cmd_deanonymize(dean, std::cout, std::cerr);
    }
    if (eval_cmd->parsed()) {
        eval_opts.gold = gold_path;
        eval_opts.pred = pred_path;
        return cmd_eval(eval_opts, std::cout, std::cerr);
    }
    if (vault_cmd->parsed() && vault_list->parsed()) {
        if (!list_type.empty()) list_opts.type = list_type;
        return cmd_vault_list(list_opts, std::cout, std::cerr);
    }
    return kExitConfigError;
}

}  // namespace masq
