#include "masq/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace masq {

namespace {

using Json = nlohmann::ordered_json;

void check_gold_disjoint(const std::vector<Annotation>& gold) {
    std::map<std::string, std::vector<Span>> by_doc;
    for (const Annotation& a : gold) by_doc[a.doc_id].push_back(a.span);
    for (auto& [doc, spans] : by_doc) {
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i - 1].overlaps(spans[i])) {
                throw Error(Errc::OverlappingGold,
                            "gold spans overlap in doc '" + doc + "' at [" +
                                std::to_string(spans[i - 1].start) + ", " +
                                std::to_string(spans[i - 1].end) + ") and [" +
                                std::to_string(spans[i].start) + ", " +
                                std::to_string(spans[i].end) + ")");
            }
        }
    }
}

struct AnnotationKey {
    std::string doc_id;
    std::size_t start;
    std::size_t end;
    std::string type;

    auto operator<=>(const AnnotationKey&) const = default;
};

AnnotationKey key_of(const Annotation& a) {
    return {a.doc_id, a.span.start, a.span.end, a.entity_type.name()};
}

}  // namespace

MatchCounts match_detections(const std::vector<Annotation>& gold,
                             const std::vector<Annotation>& pred) {
    check_gold_disjoint(gold);

    // Multiset so duplicate prediction rows cannot both claim one gold row.
    std::multimap<AnnotationKey, std::size_t> unmatched;
    for (std::size_t i = 0; i < gold.size(); ++i) unmatched.emplace(key_of(gold[i]), i);

    MatchCounts counts;
    for (const Annotation& p : pred) {
        auto it = unmatched.find(key_of(p));
        if (it != unmatched.end()) {
            ++counts.tp;
            unmatched.erase(it);
        } else {
            ++counts.fp;
        }
    }
    counts.fn = unmatched.size();
    return counts;
}

MetricsReport compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    MetricsReport report;
    report.tp = tp;
    report.fp = fp;
    report.fn = fn;
    report.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp)
                                     : 1.0;
    report.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                                  : 1.0;
    double sum = report.precision + report.recall;
    report.f1 = sum > 0.0 ? 2.0 * report.precision * report.recall / sum : 0.0;
    return report;
}

std::map<std::string, MetricsReport> per_type_metrics(const std::vector<Annotation>& gold,
                                                      const std::vector<Annotation>& pred) {
    std::map<std::string, std::vector<Annotation>> gold_by_type;
    std::map<std::string, std::vector<Annotation>> pred_by_type;
    for (const Annotation& a : gold) gold_by_type[a.entity_type.name()].push_back(a);
    for (const Annotation& a : pred) pred_by_type[a.entity_type.name()].push_back(a);

    std::map<std::string, MetricsReport> out;
    for (const auto& [type, rows] : gold_by_type) {
        MatchCounts counts = match_detections(rows, pred_by_type[type]);
        out[type] = compute_metrics(counts.tp, counts.fp, counts.fn);
    }
    for (const auto& [type, rows] : pred_by_type) {
        if (!out.contains(type)) {
            MatchCounts counts = match_detections({}, rows);
            out[type] = compute_metrics(counts.tp, counts.fp, counts.fn);
        }
    }
    return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::UnreadableFile, path.string());

    std::vector<Annotation> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        auto bad = [&](const std::string& what) {
            throw Error(Errc::CorruptRecordLine,
                        path.string() + ":" + std::to_string(line_no) + ": " + what);
        };
        if (j.is_discarded() || !j.is_object()) bad("not a JSON object");
        if (!j.contains("doc") || !j["doc"].is_string()) bad("missing string field 'doc'");
        if (!j.contains("start") || !j["start"].is_number_unsigned()) {
            bad("missing unsigned field 'start'");
        }
        if (!j.contains("end") || !j["end"].is_number_unsigned()) {
            bad("missing unsigned field 'end'");
        }
        if (!j.contains("type") || !j["type"].is_string()) bad("missing string field 'type'");
        if (!j.contains("text") || !j["text"].is_string()) bad("missing string field 'text'");

        auto type = EntityType::try_parse(j["type"].get<std::string>());
        if (!type) bad("bad entity type '" + j["type"].get<std::string>() + "'");
        Span span{j["start"].get<std::size_t>(), j["end"].get<std::size_t>()};
        if (span.end < span.start) bad("span end before start");
        rows.push_back(Annotation{j["doc"].get<std::string>(), span, *type,
                                  j["text"].get<std::string>()});
    }
    return rows;
}

void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::WriteFailure, path.string());
    for (const Annotation& a : rows) {
        Json j;
        j["doc"] = a.doc_id;
        j["start"] = a.span.start;
        j["end"] = a.span.end;
        j["type"] = a.entity_type.name();
        j["text"] = a.text;
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw Error(Errc::WriteFailure, path.string());
}

}  // namespace masq
