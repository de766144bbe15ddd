#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "masq/core.hpp"

namespace masq {

/// One annotated entity span. Gold rows and prediction rows share this shape
/// (line-JSON keys: doc, start, end, type, text).
struct Annotation {
    std::string doc_id;
    Span span;
    EntityType entity_type;
    std::string text;
};

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

struct MetricsReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
};

/// Strict entity-level matching: a prediction is a TP iff some gold row has
/// the identical doc, span, and type; partial overlaps count as misses. Each
/// gold row matches at most one prediction. Overlapping gold spans within a
/// document are rejected (Errc::OverlappingGold).
MatchCounts match_detections(const std::vector<Annotation>& gold,
                             const std::vector<Annotation>& pred);

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = harmonic mean; a zero
/// denominator defaults the ratio to 1.0. Values keep full precision;
/// rounding is display-only.
MetricsReport compute_metrics(std::size_t tp, std::size_t fp, std::size_t fn);

/// Per-type breakdown over the same strict matching.
std::map<std::string, MetricsReport> per_type_metrics(const std::vector<Annotation>& gold,
                                                      const std::vector<Annotation>& pred);

/// Line-JSON annotation IO ({"doc":..,"start":..,"end":..,"type":..,"text":..}).
std::vector<Annotation> load_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<Annotation>& rows);

}  // namespace masq
