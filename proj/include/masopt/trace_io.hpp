// Delimited-text formats for traces, summaries and comparison reports.
//
// Trace: header `step,epoch,loss,step_norm,effective_lr[,p0..p7]`, one row
// per optimizer step. A diverged run ends with the line `# diverged step=N`.
// Summary: header
// `optimizer,lambda_a,lambda_s,metric_avg,metric_max,n_runs,n_diverged`;
// a missing metric is written as `NA`.
// Doubles use the shortest text that parses back to the same value.
#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "masopt/harness.hpp"

namespace masopt {

class TraceFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  // from_chars does not take a leading '+'
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw TraceFormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                                  : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::vector<std::string> trace_columns(std::size_t param_columns) {
  std::vector<std::string> cols = {"step", "epoch", "loss", "step_norm", "effective_lr"};
  for (std::size_t i = 0; i < param_columns; ++i) cols.push_back("p" + std::to_string(i));
  return cols;
}

inline void write_trace(std::ostream& out, const Trace& trace) {
  const auto cols = trace_columns(trace.param_columns);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : trace.records) {
    out << r.step << ',' << r.epoch << ',' << format_double(r.loss) << ','
        << format_double(r.step_norm) << ',' << format_double(r.effective_lr);
    for (double p : r.params) out << ',' << format_double(p);
    out << '\n';
  }
  if (trace.diverged) out << "# diverged step=" << trace.diverged_step << '\n';
}

struct LoadedTrace {
  std::vector<std::string> columns;
  Trace trace;
};

inline LoadedTrace read_trace(std::istream& in) {
  LoadedTrace out;
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("empty trace");
  for (auto f : split_fields(line)) out.columns.emplace_back(f);
  if (out.columns.size() < 5 || out.columns.size() > 5 + kMaxTracedParams) {
    throw TraceFormatError("unexpected trace header: " + line);
  }
  out.trace.param_columns = out.columns.size() - 5;
  if (out.columns != trace_columns(out.trace.param_columns)) {
    throw TraceFormatError("unexpected trace header: " + line);
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.front() == '#') {
      constexpr std::string_view marker = "# diverged step=";
      if (line.starts_with(marker)) {
        out.trace.diverged = true;
        out.trace.diverged_step =
            static_cast<std::size_t>(parse_double(std::string_view(line).substr(marker.size())));
      }
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != out.columns.size()) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(out.columns.size()) + " fields");
    }
    TraceRecord r;
    r.step = static_cast<std::size_t>(parse_double(fields[0]));
    r.epoch = static_cast<int>(parse_double(fields[1]));
    r.loss = parse_double(fields[2]);
    r.step_norm = parse_double(fields[3]);
    r.effective_lr = parse_double(fields[4]);
    for (std::size_t i = 5; i < fields.size(); ++i) r.params.push_back(parse_double(fields[i]));
    out.trace.records.push_back(std::move(r));
  }
  return out;
}

inline std::string format_metric(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("NA");
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "optimizer,lambda_a,lambda_s,metric_avg,metric_max,n_runs,n_diverged\n";
  for (const auto& r : rows) {
    out << r.optimizer << ',' << format_double(r.lambda_a) << ',' << format_double(r.lambda_s)
        << ',' << format_metric(r.metric_avg) << ',' << format_metric(r.metric_max) << ','
        << r.n_runs << ',' << r.n_diverged << '\n';
  }
}

inline std::vector<SummaryRow> read_summary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "optimizer,lambda_a,lambda_s,metric_avg,metric_max,n_runs,n_diverged") {
    throw TraceFormatError("unexpected summary header");
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 7) throw TraceFormatError("summary row: expected 7 fields");
    auto metric = [](std::string_view s) -> std::optional<double> {
      if (s == "NA") return std::nullopt;
      return parse_double(s);
    };
    rows.push_back({std::string(f[0]), parse_double(f[1]), parse_double(f[2]), metric(f[3]),
                    metric(f[4]), static_cast<std::size_t>(parse_double(f[5])),
                    static_cast<std::size_t>(parse_double(f[6]))});
  }
  return rows;
}

inline std::string format_report(const ComparisonReport& r) {
  std::ostringstream out;
  out << "compared steps: " << r.common_steps << '\n';
  if (r.length_mismatch) out << "warning: traces differ in length; compared over the common prefix\n";
  for (const auto& t : r.thresholds) {
    out << "threshold " << format_double(t.threshold) << ":";
    for (const auto& [label, step] : t.order) {
      out << ' ' << label << '=' << (step ? std::to_string(*step) : std::string("never"));
    }
    out << " | first: " << (t.winner ? *t.winner : std::string("none")) << '\n';
  }
  out << "final loss ranking:";
  for (std::size_t i = 0; i < r.final_ranking.size(); ++i) {
    out << ' ' << (i + 1) << '.' << r.final_ranking[i].first << '('
        << format_double(r.final_ranking[i].second) << ')';
  }
  out << '\n';
  return out.str();
}

}  // namespace masopt
