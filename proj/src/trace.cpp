#include "lsvi/trace.hpp"

#include <cstdio>
#include <sstream>

#include "lsvi/errors.hpp"

namespace lsvi {

namespace {

void append_full(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

std::string render(const IterationTrace& tr, bool keep_timing) {
  std::string out = "t,epsilon,kl_estimate,residual_std,halvings,elapsed_ns";
  for (const auto& label : tr.param_labels) {
    out += ',';
    out += label;
  }
  out += '\n';
  for (const auto& row : tr.rows) {
    out += std::to_string(row.t);
    out += ',';
    append_full(out, row.epsilon);
    out += ',';
    append_full(out, row.kl_estimate);
    out += ',';
    append_full(out, row.residual_std);
    out += ',';
    out += std::to_string(row.halvings);
    out += ',';
    out += std::to_string(keep_timing ? row.elapsed_ns : 0);
    for (Eigen::Index i = 0; i < row.params.size(); ++i) {
      out += ',';
      append_full(out, row.params[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

std::string IterationTrace::to_csv() const { return render(*this, true); }

std::string IterationTrace::to_csv_without_timing() const { return render(*this, false); }

IterationTrace parse_trace_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("trace csv: empty document");
  IterationTrace tr;
  {
    std::istringstream hs(line);
    std::string col;
    int idx = 0;
    while (std::getline(hs, col, ',')) {
      if (idx >= 6) tr.param_labels.push_back(col);
      ++idx;
    }
    if (idx < 6) throw ParseError("trace csv: malformed header");
  }
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(std::strtod(cell.c_str(), nullptr));
    if (cells.size() != 6 + tr.param_labels.size())
      throw ParseError("trace csv: wrong column count at line " + std::to_string(lineno));
    TraceRow row;
    row.t = static_cast<std::int64_t>(cells[0]);
    row.epsilon = cells[1];
    row.kl_estimate = cells[2];
    row.residual_std = cells[3];
    row.halvings = static_cast<int>(cells[4]);
    row.elapsed_ns = static_cast<std::int64_t>(cells[5]);
    row.params = Eigen::Map<const Eigen::VectorXd>(cells.data() + 6,
                                                   static_cast<Eigen::Index>(cells.size()) - 6);
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

}  // namespace lsvi
