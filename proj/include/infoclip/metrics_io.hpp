#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "infoclip/errors.hpp"
#include "infoclip/tensor_io.hpp"
#include "infoclip/train.hpp"

namespace infoclip {

/// Canonical text form of a real number in this library's files and CLI
/// output: at least 12 significant digits, trailing zeros kept, so values
/// like log2(4) render as "2.000000000000".
inline std::string format_real(double v) {
  if (!std::isfinite(v)) throw InputError("format_real: non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%#.13g", v);
  return std::string(buf);
}

namespace detail {

inline std::string metrics_jsonl(const TrainReport& report) {
  std::string out;
  for (const StepRecord& s : report.steps) {
    out += "{\"step\": " + std::to_string(s.step);
    out += ", \"task\": " + format_real(s.losses.task);
    out += ", \"lc\": " + format_real(s.losses.compression);
    out += ", \"ld\": " + format_real(s.losses.distillation);
    out += ", \"total\": " + format_real(s.losses.total);
    out += ", \"mi_ts\": " + format_real(s.mi_ts);
    out += "}\n";
  }
  return out;
}

inline std::string metrics_csv(const TrainReport& report) {
  std::string out = "step,task,lc,ld,total,mi_ts\n";
  for (const StepRecord& s : report.steps) {
    out += std::to_string(s.step);
    out += ',' + format_real(s.losses.task);
    out += ',' + format_real(s.losses.compression);
    out += ',' + format_real(s.losses.distillation);
    out += ',' + format_real(s.losses.total);
    out += ',' + format_real(s.mi_ts);
    out += '\n';
  }
  return out;
}

inline void write_text_atomic(const std::string& path, const std::string& text) {
  write_file_atomic(path, std::vector<char>(text.begin(), text.end()));
}

} // namespace detail

/// Per-step training diagnostics as JSON-lines plus a companion CSV with
/// identical columns. `jsonl_path` keeps its name; the CSV lands next to it
/// with the extension swapped for .csv. Wall-clock time is deliberately not
/// written, keeping repeated seeded runs byte-identical.
inline void emit_metrics(const TrainReport& report, const std::string& jsonl_path) {
  std::string csv_path = jsonl_path;
  if (const auto dot = csv_path.rfind(".jsonl"); dot != std::string::npos &&
      dot == csv_path.size() - 6) {
    csv_path.resize(dot);
  }
  csv_path += ".csv";
  detail::write_text_atomic(jsonl_path, detail::metrics_jsonl(report));
  detail::write_text_atomic(csv_path, detail::metrics_csv(report));
}

/// Final metrics as key=value text, one line per metric. Deterministic for
/// a fixed report; wall-clock is excluded here too.
inline std::string summary_text(const EvalMetrics& m) {
  std::string out;
  out += "patches = " + std::to_string(m.patches) + "\n";
  out += "accuracy = " + format_real(m.accuracy) + "\n";
  out += "mean_iou = " + format_real(m.mean_iou) + "\n";
  out += "seen_accuracy = " + format_real(m.seen_accuracy) + "\n";
  out += "unseen_accuracy = " + format_real(m.unseen_accuracy) + "\n";
  out += "seen_mean_iou = " + format_real(m.seen_mean_iou) + "\n";
  out += "unseen_mean_iou = " + format_real(m.unseen_mean_iou) + "\n";
  for (std::size_t c = 0; c < m.per_class_iou.size(); ++c) {
    out += "iou_class_" + std::to_string(c) + " = ";
    out += m.per_class_defined[c] ? format_real(m.per_class_iou[c]) : std::string("undefined");
    out += "\n";
  }
  return out;
}

inline void write_summary(const std::string& path, const EvalMetrics& m) {
  detail::write_text_atomic(path, summary_text(m));
}

} // namespace infoclip
