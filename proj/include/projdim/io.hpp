#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "projdim/dimension.hpp"
#include "projdim/grassmannian.hpp"
#include "projdim/ifs.hpp"
#include "projdim/systems.hpp"

// Plain-text system descriptions and the CSV shapes written by experiments.
// The system format is documented in docs/system-format.md; every CSV written
// here can be read back by the readers below.

namespace projdim {

struct SystemFile {
  std::string name;
  bool graph_directed = false;
  std::optional<SelfSimilarIFS> ss;
  std::optional<GraphDirectedIFS> gd;

  int ambient_dim() const { return graph_directed ? gd->ambient_dim() : ss->ambient_dim(); }
};

inline SystemFile to_system_file(const BuiltinSystem& b) {
  SystemFile f;
  f.name = b.name;
  f.graph_directed = b.graph_directed;
  f.ss = b.ss;
  f.gd = b.gd;
  return f;
}

namespace detail {

struct RawRecord {
  bool is_edge = false;
  int line = 0;
  std::optional<double> ratio;
  std::vector<double> orthogonal;
  std::vector<double> translation;
  std::optional<int> source, target;
};

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    if (!tok.empty() && tok[0] == '#') break;
    out.push_back(tok);
  }
  return out;
}

inline double parse_real(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("system file line " + std::to_string(line) +
                          ": expected a real number, got '" + tok + "'");
  }
}

inline int parse_int(const std::string& tok, int line) {
  try {
    std::size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("system file line " + std::to_string(line) +
                          ": expected an integer, got '" + tok + "'");
  }
}

}  // namespace detail

// Parses the key-value system format. Maps and edges open blocks with the
// bare keywords `map` / `edge`; ratio, orthogonal (n*n reals, row-major),
// translation (n reals), and for edges source/target (1-based) follow.
// Non-orthogonal parts and malformed graphs are rejected.
inline SystemFile parse_system(std::istream& in) {
  std::string line;
  int lineno = 0;
  std::string name;
  std::string type;
  int ambient = 0, vertices = 0;
  std::vector<detail::RawRecord> records;
  detail::RawRecord* open = nullptr;

  while (std::getline(in, line)) {
    ++lineno;
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    auto need_values = [&](std::size_t count) {
      if (toks.size() != count + 1)
        throw ValidationError("system file line " + std::to_string(lineno) + ": key '" + key +
                              "' expects " + std::to_string(count) + " value(s)");
    };
    if (key == "type") {
      need_values(1);
      type = toks[1];
      if (type != "self_similar" && type != "graph_directed")
        throw ValidationError("system file line " + std::to_string(lineno) +
                              ": type must be self_similar or graph_directed");
    } else if (key == "name") {
      need_values(1);
      name = toks[1];
    } else if (key == "ambient_dim") {
      need_values(1);
      ambient = detail::parse_int(toks[1], lineno);
    } else if (key == "vertices") {
      need_values(1);
      vertices = detail::parse_int(toks[1], lineno);
    } else if (key == "map" || key == "edge") {
      if (toks.size() != 1)
        throw ValidationError("system file line " + std::to_string(lineno) +
                              ": '" + key + "' opens a block and takes no values");
      records.emplace_back();
      open = &records.back();
      open->is_edge = (key == "edge");
      open->line = lineno;
    } else if (key == "ratio" || key == "orthogonal" || key == "translation" ||
               key == "source" || key == "target") {
      if (!open)
        throw ValidationError("system file line " + std::to_string(lineno) + ": '" + key +
                              "' outside of a map/edge block");
      if (key == "ratio") {
        need_values(1);
        open->ratio = detail::parse_real(toks[1], lineno);
      } else if (key == "source") {
        need_values(1);
        open->source = detail::parse_int(toks[1], lineno);
      } else if (key == "target") {
        need_values(1);
        open->target = detail::parse_int(toks[1], lineno);
      } else {
        std::vector<double>& dst = (key == "orthogonal") ? open->orthogonal : open->translation;
        dst.clear();
        for (std::size_t i = 1; i < toks.size(); ++i)
          dst.push_back(detail::parse_real(toks[i], lineno));
      }
    } else {
      throw ValidationError("system file line " + std::to_string(lineno) +
                            ": unknown key '" + key + "'");
    }
  }

  if (type.empty()) throw ValidationError("system file: missing 'type'");
  if (ambient < 1) throw ValidationError("system file: missing or invalid 'ambient_dim'");
  if (records.empty()) throw ValidationError("system file: no map/edge blocks");
  bool graph = (type == "graph_directed");
  if (graph && vertices < 1)
    throw ValidationError("system file: graph_directed requires 'vertices'");

  auto build_similarity = [&](const detail::RawRecord& r) {
    if (!r.ratio)
      throw ValidationError("system file line " + std::to_string(r.line) + ": block missing 'ratio'");
    if (int(r.orthogonal.size()) != ambient * ambient)
      throw ValidationError("system file line " + std::to_string(r.line) +
                            ": 'orthogonal' must have ambient_dim^2 entries");
    if (int(r.translation.size()) != ambient)
      throw ValidationError("system file line " + std::to_string(r.line) +
                            ": 'translation' must have ambient_dim entries");
    Mat T(ambient, ambient);
    T.a = r.orthogonal;
    return Similarity(*r.ratio, std::move(T), r.translation);
  };

  SystemFile out;
  out.name = name;
  out.graph_directed = graph;
  if (!graph) {
    std::vector<Similarity> maps;
    for (const auto& r : records) {
      if (r.is_edge)
        throw ValidationError("system file line " + std::to_string(r.line) +
                              ": 'edge' block in a self_similar system");
      maps.push_back(build_similarity(r));
    }
    out.ss = SelfSimilarIFS(ambient, std::move(maps));
  } else {
    std::vector<GraphEdge> edges;
    for (const auto& r : records) {
      if (!r.is_edge)
        throw ValidationError("system file line " + std::to_string(r.line) +
                              ": 'map' block in a graph_directed system");
      if (!r.source || !r.target)
        throw ValidationError("system file line " + std::to_string(r.line) +
                              ": edge missing 'source' or 'target'");
      if (*r.source < 1 || *r.source > vertices || *r.target < 1 || *r.target > vertices)
        throw ValidationError("system file line " + std::to_string(r.line) +
                              ": edge endpoints must lie in 1..vertices");
      edges.push_back({*r.source - 1, *r.target - 1, build_similarity(r)});
    }
    out.gd = GraphDirectedIFS(ambient, vertices, std::move(edges));
  }
  return out;
}

inline SystemFile load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open system file: " + path);
  return parse_system(in);
}

inline void write_system(std::ostream& out, const SystemFile& sys) {
  out << "type " << (sys.graph_directed ? "graph_directed" : "self_similar") << "\n";
  if (!sys.name.empty()) out << "name " << sys.name << "\n";
  out << "ambient_dim " << sys.ambient_dim() << "\n";
  auto write_map_body = [&](const Similarity& g) {
    out << "  ratio " << format_double(g.ratio) << "\n";
    out << "  orthogonal";
    for (double v : g.rotation.a) out << " " << format_double(v);
    out << "\n  translation";
    for (double v : g.translation) out << " " << format_double(v);
    out << "\n";
  };
  if (!sys.graph_directed) {
    for (const auto& g : sys.ss->maps()) {
      out << "map\n";
      write_map_body(g);
    }
  } else {
    out << "vertices " << sys.gd->vertex_count() << "\n";
    for (const auto& e : sys.gd->edges()) {
      out << "edge\n";
      out << "  source " << (e.source + 1) << "\n";
      out << "  target " << (e.target + 1) << "\n";
      write_map_body(e.map);
    }
  }
}

inline void save_system(const std::string& path, const SystemFile& sys) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write system file: " + path);
  write_system(out, sys);
}

// Resolves either a path or the form `builtin:<name>`.
inline SystemFile resolve_system(const std::string& ref) {
  if (ref.rfind("builtin:", 0) == 0) return to_system_file(find_builtin(ref.substr(8)));
  return load_system(ref);
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write csv: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open csv: " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

// Net serialization: metadata header (n, k, delta2, seed), then one row per
// member with the n*k frame entries in row-major order.
inline void write_net_csv(const std::string& path, const DeltaNet& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write net csv: " + path);
  out << "n,k,delta2,seed\n";
  out << net.n << "," << net.k << "," << format_double(net.separation) << "," << net.seed
      << "\n";
  for (int i = 0; i < net.n * net.k; ++i) out << (i ? ",f" : "f") << i;
  out << "\n";
  for (const auto& V : net.members) {
    for (std::size_t i = 0; i < V.frame().a.size(); ++i)
      out << (i ? "," : "") << format_double(V.frame().a[i]);
    out << "\n";
  }
}

inline DeltaNet read_net_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open net csv: " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"n", "k", "delta2", "seed"})
    throw ValidationError("net csv: bad metadata header in " + path);
  if (!std::getline(in, line)) throw ValidationError("net csv: missing metadata row");
  auto meta = split_csv_line(line);
  if (meta.size() != 4) throw ValidationError("net csv: metadata row must have 4 fields");
  DeltaNet net;
  net.n = std::stoi(meta[0]);
  net.k = std::stoi(meta[1]);
  net.separation = std::stod(meta[2]);
  net.seed = std::stoull(meta[3]);
  if (!std::getline(in, line)) throw ValidationError("net csv: missing frame header");
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (int(cells.size()) != net.n * net.k)
      throw ValidationError("net csv: member row with wrong entry count");
    Mat F(net.n, net.k);
    for (std::size_t i = 0; i < cells.size(); ++i) F.a[i] = std::stod(cells[i]);
    net.members.push_back(Subspace::from_frame(std::move(F)));
  }
  return net;
}

inline void write_series_csv(const std::string& path, const BoxCountSeries& series) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < series.scales.size(); ++i)
    rows.push_back({format_double(series.scales[i]), std::to_string(series.counts[i])});
  write_csv(path, {"delta", "count"}, rows);
}

inline BoxCountSeries read_series_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"delta", "count"})
    throw ValidationError("series csv: unexpected header in " + path);
  BoxCountSeries s;
  for (const auto& row : t.rows) {
    if (row.size() != 2) throw ValidationError("series csv: bad row in " + path);
    s.scales.push_back(std::stod(row[0]));
    s.counts.push_back(std::stoull(row[1]));
  }
  return s;
}

inline void write_estimate_csv(const std::string& path, const DimensionEstimate& est) {
  write_csv(path, {"value", "stderr", "delta_min", "delta_max", "method"},
            {{format_double(est.value), format_double(est.std_error),
              format_double(est.delta_min), format_double(est.delta_max),
              to_string(est.method)}});
}

inline DimensionEstimate read_estimate_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  if (t.header != std::vector<std::string>{"value", "stderr", "delta_min", "delta_max", "method"} ||
      t.rows.size() != 1 || t.rows[0].size() != 5)
    throw ValidationError("estimate csv: unexpected shape in " + path);
  DimensionEstimate est;
  est.value = std::stod(t.rows[0][0]);
  est.std_error = std::stod(t.rows[0][1]);
  est.delta_min = std::stod(t.rows[0][2]);
  est.delta_max = std::stod(t.rows[0][3]);
  est.method = dimension_method_from_string(t.rows[0][4]);
  return est;
}

inline void ensure_dir(const std::string& dir) {
  if (!dir.empty()) std::filesystem::create_directories(dir);
}

inline std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

}  // namespace projdim
