#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcmpr/degree_model.hpp"
#include "dcmpr/errors.hpp"
#include "dcmpr/experiments.hpp"
#include "dcmpr/multidigraph.hpp"
#include "dcmpr/pagerank.hpp"
#include "dcmpr/tbt.hpp"

// CSV and JSON formats. Node ids are 0-based everywhere.
namespace dcmpr::io {

using nlohmann::json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class T>
T parse_field(std::string_view text, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw IoError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

// Calls fn(fields, line_no) for each data row after checking the header.
template <class Fn>
void for_each_csv_row(std::istream& in, std::string_view header, Fn&& fn) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw IoError("expected CSV header '" + std::string(header) + "', got '" + line + "'");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(split_csv_line(line), line_no);
  }
}

}  // namespace detail

// ---- bi-degree sequences --------------------------------------------------

inline void write_bidegree_csv(std::ostream& out, const BiDegreeSequence& seq) {
  out << "node,in_degree,out_degree\n";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out << i << ',' << seq.in_degree(i) << ',' << seq.out_degree(i) << '\n';
  }
}

inline BiDegreeSequence read_bidegree_csv(std::istream& in) {
  std::vector<Degree> in_deg, out_deg;
  detail::for_each_csv_row(in, "node,in_degree,out_degree", [&](const auto& f, std::size_t line_no) {
    if (f.size() != 3) throw IoError("line " + std::to_string(line_no) + ": expected 3 fields");
    const auto node = detail::parse_field<std::size_t>(f[0], line_no);
    if (node != in_deg.size()) throw IoError("line " + std::to_string(line_no) + ": nodes must be 0..n-1 in order");
    in_deg.push_back(detail::parse_field<Degree>(f[1], line_no));
    out_deg.push_back(detail::parse_field<Degree>(f[2], line_no));
  });
  return BiDegreeSequence(std::move(in_deg), std::move(out_deg));
}

inline json params_json(const DegreeParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
          {"x1", p.x1()},     {"x2", p.x2()}};
}

inline json bidegree_sidecar(const BiDegreeSequence& seq, const DegreeParams& params,
                             std::uint64_t seed) {
  return {{"n", seq.size()}, {"L_n", seq.total_stubs()}, {"params", params_json(params)}, {"seed", seed}};
}

// ---- graphs ---------------------------------------------------------------

inline void write_edges_csv(std::ostream& out, const MultiDigraph& graph) {
  out << "src,dst,multiplicity\n";
  for (const Edge& e : graph.edges()) out << e.src << ',' << e.dst << ',' << e.multiplicity << '\n';
}

/// Reads an edge list. Without `n` the graph has max id + 1 nodes.
inline MultiDigraph read_edges_csv(std::istream& in, std::optional<std::size_t> n = std::nullopt) {
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  detail::for_each_csv_row(in, "src,dst,multiplicity", [&](const auto& f, std::size_t line_no) {
    if (f.size() != 3) throw IoError("line " + std::to_string(line_no) + ": expected 3 fields");
    Edge e{detail::parse_field<std::size_t>(f[0], line_no), detail::parse_field<std::size_t>(f[1], line_no),
           detail::parse_field<std::int64_t>(f[2], line_no)};
    max_id = std::max({max_id, e.src, e.dst});
    edges.push_back(e);
  });
  const std::size_t nodes = n ? *n : (edges.empty() ? 0 : max_id + 1);
  return MultiDigraph::from_edges(nodes, std::move(edges));
}

inline json graph_sidecar(const MultiDigraph& graph, std::uint64_t seed,
                          std::optional<std::size_t> root = std::nullopt) {
  json j = {{"n", graph.size()}, {"L_n", graph.total_edges()}, {"seed", seed}};
  j["root"] = root ? json(*root) : json(nullptr);
  return j;
}

// ---- rank vectors ---------------------------------------------------------

inline void write_rank_csv(std::ostream& out, const RankVector& rank) {
  out << "node,value\n";
  for (std::size_t i = 0; i < rank.values.size(); ++i) out << i << ',' << format_double(rank.values[i]) << '\n';
}

inline std::vector<double> read_rank_csv(std::istream& in) {
  std::vector<double> values;
  detail::for_each_csv_row(in, "node,value", [&](const auto& f, std::size_t line_no) {
    if (f.size() != 2) throw IoError("line " + std::to_string(line_no) + ": expected 2 fields");
    values.push_back(detail::parse_field<double>(f[1], line_no));
  });
  return values;
}

/// `mode` is the iteration count for k-step runs, or "converged" / "exact".
inline json rank_sidecar(const PageRankConfig& cfg, const json& mode, const RankVector& rank) {
  return {{"c", cfg.c},
          {"r0", cfg.r0},
          {"eps0", cfg.eps0},
          {"k_or_converged", mode},
          {"iterations_used", rank.iterations_used},
          {"converged", rank.converged}};
}

// ---- trees and coupling ---------------------------------------------------

inline json tree_json(const Tbt& tree) {
  json nodes = json::array();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& node = tree.node(i);
    json entry = {{"id", i}, {"offspring", node.offspring}, {"thorns", node.thorns}};
    entry["parent"] = node.parent == npos ? json(nullptr) : json(node.parent);
    entry["source"] = node.source == npos ? json(nullptr) : json(node.source);
    nodes.push_back(std::move(entry));
  }
  return {{"root", Tbt::root()}, {"nodes", std::move(nodes)}, {"depth", tree.depth()}};
}

inline json coupling_stats_json(const CouplingStats& stats) {
  json j = {{"Z", stats.Z}, {"Zhat", stats.Zhat}, {"Vhat", stats.Vhat}, {"root", stats.root}, {"k", stats.k}};
  j["tau"] = stats.tau ? json(*stats.tau) : json("gt_k");
  return j;
}

// ---- experiments ----------------------------------------------------------

inline constexpr std::string_view kTableHeader =
    "n,k,c,mean_R_inf,mean_R_k,mean_Rhat_k,mse_R_k,mse_Rhat_k,"
    "se_R_inf,ci95_lo_R_inf,ci95_hi_R_inf,se_mse_R_k,se_mse_Rhat_k,"
    "coupling_break_fraction,replications,failures,seed";

inline void write_table_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << kTableHeader << '\n';
  for (const ExperimentRow& r : rows) {
    const double z = 1.959963984540054;
    out << r.n << ',' << r.k << ',' << format_double(r.c) << ',' << format_double(r.mean_R_inf) << ','
        << format_double(r.mean_R_k) << ',' << format_double(r.mean_Rhat_k) << ','
        << format_double(r.mse_R_k) << ',' << format_double(r.mse_Rhat_k) << ','
        << format_double(r.se_R_inf) << ',' << format_double(r.mean_R_inf - z * r.se_R_inf) << ','
        << format_double(r.mean_R_inf + z * r.se_R_inf) << ',' << format_double(r.se_mse_R_k) << ','
        << format_double(r.se_mse_Rhat_k) << ',' << format_double(r.coupling_break_fraction) << ','
        << r.replications << ',' << r.failures << ',' << r.seed << '\n';
  }
}

inline void write_coupling_csv(std::ostream& out, const std::vector<CouplingRow>& rows) {
  out << "n,k,runs,breaks,p_break,ci95_lo,ci95_hi,failures,seed\n";
  for (const CouplingRow& r : rows) {
    out << r.n << ',' << r.k << ',' << r.runs << ',' << r.breaks << ',' << format_double(r.p_break.estimate)
        << ',' << format_double(r.p_break.lo) << ',' << format_double(r.p_break.hi) << ',' << r.failures
        << ',' << r.seed << '\n';
  }
}

inline json cdf_json(const CdfResult& result) {
  return {{"n", result.n},
          {"k", result.k},
          {"c", result.c},
          {"seed", result.seed},
          {"true", result.truth.sorted},
          {"k_iter", result.iter.sorted},
          {"tbt", result.tbt.sorted},
          {"ks", {{"true_vs_k_iter", result.ks_iter}, {"true_vs_tbt", result.ks_tbt}}}};
}

}  // namespace dcmpr::io
