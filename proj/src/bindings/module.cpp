#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "masq/cli.hpp"
#include "masq/eval.hpp"
#include "masq/processors.hpp"
#include "masq/pseudonym.hpp"
#include "masq/recognizers.hpp"
#include "masq/vault.hpp"

namespace py = pybind11;

namespace {

masq::EntityType parse_type(const std::string& name) {
    auto type = masq::EntityType::try_parse(name);
    if (!type) throw py::value_error("unknown entity type '" + name + "'");
    return *type;
}

masq::PolicyConfig policy_from_kwargs(std::size_t slug_length,
                                      const std::vector<std::string>& allow_list,
                                      const std::vector<std::string>& preserve_entities,
                                      bool scan_json_keys) {
    masq::PolicyConfig policy;
    policy.slug_length = slug_length;
    policy.allow_list.insert(allow_list.begin(), allow_list.end());
    policy.preserve_entities.insert(preserve_entities.begin(), preserve_entities.end());
    policy.scan_json_keys = scan_json_keys;
    return policy;
}

// One vault + engine pair bound to a key, mirroring the CLI's anonymize and
// deanonymize surface for scripting.
class Pseudonymizer {
public:
    Pseudonymizer(const std::string& secret_key, const std::filesystem::path& vault_path,
                  std::size_t slug_length, const std::vector<std::string>& allow_list,
                  const std::vector<std::string>& preserve_entities, bool scan_json_keys)
        : vault_(vault_path) {
        masq::RunContext ctx;
        ctx.secret_key = secret_key;
        ctx.policy =
            policy_from_kwargs(slug_length, allow_list, preserve_entities, scan_json_keys);
        ctx.vault_path = vault_path;
        ctx.audit_actor = "python";
        key_ = secret_key;
        engine_.emplace(ctx, vault_, masq::registry_for(ctx.policy));
    }

    std::pair<std::string, std::vector<masq::Detection>> anonymize_text(
        const std::string& text, const std::string& source) {
        return engine_->anonymize_text(text, source);
    }

    py::tuple deanonymize_text(const std::string& text) {
        masq::RestoreOutcome outcome = masq::restore_text(text, key_, vault_, "python");
        return py::make_tuple(outcome.text, outcome.restored, outcome.unknown);
    }

    masq::DocumentReport process_file(const std::filesystem::path& path) {
        return engine_->process_file(path);
    }

    std::string token_for(const std::string& type_name, const std::string& value) {
        return masq::pseudonymize(engine_->context(), vault_, parse_type(type_name), value)
            .rendered;
    }

    std::size_t vault_size() const { return vault_.size(); }

private:
    masq::Vault vault_;
    std::string key_;
    std::optional<masq::Engine> engine_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Keyed pseudonymization core: HMAC tokens, recognizers, vault, metrics";

    py::register_exception<masq::Error>(m, "MasqError");

    py::class_<masq::Span>(m, "Span")
        .def(py::init<std::size_t, std::size_t>(), py::arg("start"), py::arg("end"))
        .def_readonly("start", &masq::Span::start)
        .def_readonly("end", &masq::Span::end)
        .def("__len__", &masq::Span::length)
        .def("__repr__", [](const masq::Span& s) {
            return "Span(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
        });

    py::class_<masq::Detection>(m, "Detection")
        .def_property_readonly("entity_type",
                               [](const masq::Detection& d) { return d.entity_type.name(); })
        .def_readonly("span", &masq::Detection::span)
        .def_readonly("text", &masq::Detection::text)
        .def_readonly("recognizer_id", &masq::Detection::recognizer_id)
        .def_readonly("preserved", &masq::Detection::preserved)
        .def("__repr__", [](const masq::Detection& d) {
            return "Detection(" + d.entity_type.name() + ", [" +
                   std::to_string(d.span.start) + ", " + std::to_string(d.span.end) + "), '" +
                   d.text + "')";
        });

    py::class_<masq::MetricsReport>(m, "MetricsReport")
        .def_readonly("tp", &masq::MetricsReport::tp)
        .def_readonly("fp", &masq::MetricsReport::fp)
        .def_readonly("fn", &masq::MetricsReport::fn)
        .def_readonly("precision", &masq::MetricsReport::precision)
        .def_readonly("recall", &masq::MetricsReport::recall)
        .def_readonly("f1", &masq::MetricsReport::f1);

    py::class_<masq::DocumentReport>(m, "DocumentReport")
        .def_property_readonly("source",
                               [](const masq::DocumentReport& r) { return r.source.string(); })
        .def_property_readonly("format",
                               [](const masq::DocumentReport& r) {
                                   return std::string(masq::format_name(r.format));
                               })
        .def_readonly("detections", &masq::DocumentReport::detections)
        .def_readonly("replacements", &masq::DocumentReport::replacements)
        .def_property_readonly("output",
                               [](const masq::DocumentReport& r) { return r.output.string(); })
        .def_readonly("warnings", &masq::DocumentReport::warnings);

    m.def("hmac_sha256_hex",
          [](py::bytes key, py::bytes message) {
              std::string k = key;
              std::string msg = message;
              auto mac = masq::hmac_sha256(
                  {reinterpret_cast<const std::uint8_t*>(k.data()), k.size()},
                  {reinterpret_cast<const std::uint8_t*>(msg.data()), msg.size()});
              masq::Digest256 digest;
              digest.bytes = mac;
              return digest.hex();
          },
          py::arg("key"), py::arg("message"),
          "Raw HMAC-SHA256 of message under key, as 64 lowercase hex chars");

    m.def("compute_digest_hex",
          [](const std::string& key, const std::string& type_name, const std::string& value) {
              return masq::compute_digest(key, parse_type(type_name), value).hex();
          },
          py::arg("key"), py::arg("entity_type"), py::arg("value"),
          "Keyed digest of (entity_type, value) as hex");

    m.def("make_token",
          [](const std::string& key, const std::string& type_name, const std::string& value,
             std::size_t slug_length) {
              masq::EntityType type = parse_type(type_name);
              masq::Digest256 digest = masq::compute_digest(key, type, value);
              return masq::format_token(type, masq::make_slug(digest, slug_length)).rendered;
          },
          py::arg("key"), py::arg("entity_type"), py::arg("value"),
          py::arg("slug_length") = 64,
          "Stateless token rendering (no vault, no collision handling)");

    m.def("parse_token",
          [](const std::string& rendered) -> py::object {
              auto parsed = masq::parse_token(rendered);
              if (!parsed) return py::none();
              return py::make_tuple(parsed->first.name(), parsed->second);
          },
          py::arg("token"), "Split '<TYPE_slug>' into (type, slug), or None");

    m.def("recognize",
          [](const std::string& text, const std::vector<std::string>& allow_list,
             const std::vector<std::string>& preserve_entities) {
              masq::PolicyConfig policy =
                  policy_from_kwargs(64, allow_list, preserve_entities, false);
              return masq::recognize_all(text, masq::builtin_registry(), policy);
          },
          py::arg("text"), py::arg("allow_list") = std::vector<std::string>{},
          py::arg("preserve_entities") = std::vector<std::string>{},
          "Run the builtin recognizers over text");

    m.def("compute_metrics",
          [](std::size_t tp, std::size_t fp, std::size_t fn) {
              return masq::compute_metrics(tp, fp, fn);
          },
          py::arg("tp"), py::arg("fp"), py::arg("fn"),
          "Precision/recall/F1 from entity-level counts");

    py::class_<Pseudonymizer>(m, "Pseudonymizer")
        .def(py::init<const std::string&, const std::filesystem::path&, std::size_t,
                      const std::vector<std::string>&, const std::vector<std::string>&, bool>(),
             py::arg("secret_key"), py::arg("vault_path"), py::arg("slug_length") = 64,
             py::arg("allow_list") = std::vector<std::string>{},
             py::arg("preserve_entities") = std::vector<std::string>{},
             py::arg("scan_json_keys") = false)
        .def("anonymize_text", &Pseudonymizer::anonymize_text, py::arg("text"),
             py::arg("source") = "")
        .def("deanonymize_text", &Pseudonymizer::deanonymize_text, py::arg("text"))
        .def("process_file", &Pseudonymizer::process_file, py::arg("path"))
        .def("token_for", &Pseudonymizer::token_for, py::arg("entity_type"), py::arg("value"))
        .def_property_readonly("vault_size", &Pseudonymizer::vault_size);
}
