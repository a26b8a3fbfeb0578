#include "bmseg/metrics.hpp"

#include <cstdio>

namespace bmseg {

const std::array<const char*, kNumClasses> kClassNames = {
    "BG", "T1", "T2", "T3", "T4", "T5", "T6", "T7"};

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& pred) {
    if (truth.size() != pred.size()) {
        throw ValidationError("truth/prediction length mismatch: " + std::to_string(truth.size()) +
                              " vs " + std::to_string(pred.size()));
    }
    Confusion m = Confusion::Zero();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = pred[i];
        if (t < 0 || t >= kNumClasses) {
            throw ValidationError("truth label " + std::to_string(t) + " at index " +
                                  std::to_string(i) + " outside [0..7]");
        }
        if (p < 0 || p >= kNumClasses) {
            throw ValidationError("predicted label " + std::to_string(p) + " at index " +
                                  std::to_string(i) + " outside [0..7]");
        }
        ++m(t, p);
    }
    return m;
}

MetricsReport compute_report(const Confusion& confusion) {
    MetricsReport rep;
    rep.confusion = confusion;
    for (int i = 0; i < kNumClasses; ++i) {
        for (int j = 0; j < kNumClasses; ++j) {
            if (confusion(i, j) < 0) {
                throw ValidationError("confusion matrix entry (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is negative");
            }
        }
    }
    rep.total = confusion.sum();
    if (rep.total == 0) {
        throw ValidationError("confusion matrix is empty");
    }

    double sum_dsc = 0.0, sum_sen = 0.0, sum_ppv = 0.0;
    int present = 0;
    std::int64_t micro_tp = 0, micro_fp = 0, micro_fn = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const std::int64_t tp = confusion(c, c);
        const std::int64_t row = confusion.row(c).sum();
        const std::int64_t col = confusion.col(c).sum();
        const std::int64_t fn = row - tp;
        const std::int64_t fp = col - tp;
        ClassMetrics& cm = rep.per_class[c];
        if (row + col == 0) {
            cm.absent = true;
            cm.dsc = cm.sen = cm.ppv = 1.0;
            continue;
        }
        // 0/0 denominators for present classes score 0 (class exists on one
        // side only and was never hit).
        cm.dsc = (2 * tp + fp + fn) > 0 ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0;
        cm.sen = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        cm.ppv = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        sum_dsc += cm.dsc;
        sum_sen += cm.sen;
        sum_ppv += cm.ppv;
        ++present;
        micro_tp += tp;
        micro_fp += fp;
        micro_fn += fn;
    }
    rep.oa = static_cast<double>(confusion.trace()) / static_cast<double>(rep.total);
    if (present > 0) {
        rep.dsc = sum_dsc / present;
        rep.sen = sum_sen / present;
        rep.ppv = sum_ppv / present;
    }
    rep.micro_dsc = (2 * micro_tp + micro_fp + micro_fn) > 0
                        ? 2.0 * micro_tp / static_cast<double>(2 * micro_tp + micro_fp + micro_fn)
                        : 0.0;
    rep.micro_sen = (micro_tp + micro_fn) > 0
                        ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fn)
                        : 0.0;
    rep.micro_ppv = (micro_tp + micro_fp) > 0
                        ? static_cast<double>(micro_tp) / static_cast<double>(micro_tp + micro_fp)
                        : 0.0;
    return rep;
}

std::string metrics_summary_line(const MetricsReport& rep) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "OA %.4f, DSC %.4f, SEN %.4f, PPV %.4f",
                  rep.oa, rep.dsc, rep.sen, rep.ppv);
    return buf;
}

std::string metrics_table(const MetricsReport& rep) {
    std::string out;
    out += "class    DSC     SEN     PPV\n";
    char buf[128];
    for (int c = 0; c < kNumClasses; ++c) {
        const ClassMetrics& cm = rep.per_class[c];
        std::snprintf(buf, sizeof(buf), "%-5s %7.4f %7.4f %7.4f%s\n", kClassNames[c],
                      cm.dsc, cm.sen, cm.ppv, cm.absent ? "  (absent)" : "");
        out += buf;
    }
    out += metrics_summary_line(rep);
    out += "\n";
    return out;
}

} // namespace bmseg
