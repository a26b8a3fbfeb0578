#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bmseg/common.hpp"

namespace bmseg {

// BG + T1..T7.
constexpr int kNumClasses = 8;

extern const std::array<const char*, kNumClasses> kClassNames;

using Confusion = Eigen::Matrix<std::int64_t, kNumClasses, kNumClasses>;

// Entry (i, j) counts cells with ground-truth class i predicted as class j.
Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred);

struct ClassMetrics {
    double dsc = 0.0;
    double sen = 0.0;
    double ppv = 0.0;
    // Class has neither ground-truth nor predicted cells. Metrics are
    // reported as 1.0 and the class is excluded from the macro means (jaws
    // with missing teeth).
    bool absent = false;
};

struct MetricsReport {
    Confusion confusion = Confusion::Zero();
    std::int64_t total = 0;
    std::array<ClassMetrics, kNumClasses> per_class{};
    double oa = 0.0;
    // Macro (unweighted over non-absent classes) means; the canonical
    // aggregate.
    double dsc = 0.0;
    double sen = 0.0;
    double ppv = 0.0;
    // Micro aggregates (pooled counts). For single-label multiclass these
    // all equal OA; emitted for completeness.
    double micro_dsc = 0.0;
    double micro_sen = 0.0;
    double micro_ppv = 0.0;
};

MetricsReport compute_report(const Confusion& confusion);

// Text table mirroring the per-label layout of the result tables, ending
// with a line "OA 0.9553, DSC 0.9454, SEN 0.9505, PPV 0.9457".
std::string metrics_table(const MetricsReport& report);

std::string metrics_summary_line(const MetricsReport& report);

} // namespace bmseg
