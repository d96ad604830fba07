#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "projdim/ifs.hpp"

// Bundled example systems used by the CLI, the test suite, and the docs.

namespace projdim {

struct BuiltinSystem {
  std::string name;
  std::string description;
  bool graph_directed = false;
  std::optional<SelfSimilarIFS> ss;
  std::optional<GraphDirectedIFS> gd;
  bool claims_ssc = false;
  double closed_form_dimension = 0.0;
};

namespace detail {

inline Similarity translation_map(double ratio, Vec b) {
  int n = int(b.size());
  return Similarity(ratio, Mat::identity(n), std::move(b));
}

inline Mat rotation2(double angle) {
  Mat R(2, 2);
  R(0, 0) = std::cos(angle);
  R(0, 1) = -std::sin(angle);
  R(1, 0) = std::sin(angle);
  R(1, 1) = std::cos(angle);
  return R;
}

inline std::vector<BuiltinSystem> make_builtins() {
  std::vector<BuiltinSystem> out;
  const double log2 = std::log(2.0), log3 = std::log(3.0);

  {
    BuiltinSystem s;
    s.name = "cantor_middle_thirds";
    s.description = "middle-thirds Cantor set on the line, 2 maps of ratio 1/3";
    s.ss = SelfSimilarIFS(1, {translation_map(1.0 / 3.0, {0.0}),
                              translation_map(1.0 / 3.0, {2.0 / 3.0})});
    s.claims_ssc = true;
    s.closed_form_dimension = log2 / log3;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "cantor_middle_half";
    s.description = "middle-half Cantor set on the line, 2 maps of ratio 1/4";
    s.ss = SelfSimilarIFS(1, {translation_map(0.25, {0.0}),
                              translation_map(0.25, {0.75})});
    s.claims_ssc = true;
    s.closed_form_dimension = 0.5;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "four_corner";
    s.description = "four-corner Cantor set in the plane, 4 maps of ratio 1/4 at the unit square corners";
    s.ss = SelfSimilarIFS(2, {translation_map(0.25, {0.0, 0.0}),
                              translation_map(0.25, {0.75, 0.0}),
                              translation_map(0.25, {0.0, 0.75}),
                              translation_map(0.25, {0.75, 0.75})});
    s.claims_ssc = true;
    s.closed_form_dimension = 1.0;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "sierpinski";
    s.description = "Sierpinski triangle, 3 maps of ratio 1/2 (touching, so no strong separation)";
    s.ss = SelfSimilarIFS(2, {translation_map(0.5, {0.0, 0.0}),
                              translation_map(0.5, {0.5, 0.0}),
                              translation_map(0.5, {0.25, std::sqrt(3.0) / 4.0})});
    s.claims_ssc = false;
    s.closed_form_dimension = log3 / log2;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "product_cantor_thirds";
    s.description = "product of two middle-thirds Cantor sets in the plane, 4 maps of ratio 1/3";
    s.ss = SelfSimilarIFS(2, {translation_map(1.0 / 3.0, {0.0, 0.0}),
                              translation_map(1.0 / 3.0, {2.0 / 3.0, 0.0}),
                              translation_map(1.0 / 3.0, {0.0, 2.0 / 3.0}),
                              translation_map(1.0 / 3.0, {2.0 / 3.0, 2.0 / 3.0})});
    s.claims_ssc = true;
    s.closed_form_dimension = 2.0 * log2 / log3;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "cantor_dust_3d";
    s.description = "3-d Cantor dust, 8 maps of ratio 1/3 at the unit cube corners";
    std::vector<Similarity> maps;
    for (int mask = 0; mask < 8; ++mask)
      maps.push_back(translation_map(1.0 / 3.0, {(mask & 1) ? 2.0 / 3.0 : 0.0,
                                                 (mask & 2) ? 2.0 / 3.0 : 0.0,
                                                 (mask & 4) ? 2.0 / 3.0 : 0.0}));
    s.ss = SelfSimilarIFS(3, std::move(maps));
    s.claims_ssc = true;
    s.closed_form_dimension = 3.0 * log2 / log3;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "two_vertex_graph";
    s.description = "graph-directed system on two vertices with a self-loop; golden-mean branching";
    s.graph_directed = true;
    std::vector<GraphEdge> edges;
    edges.push_back({0, 0, translation_map(1.0 / 3.0, {0.0})});
    edges.push_back({0, 1, translation_map(1.0 / 3.0, {2.0 / 3.0})});
    edges.push_back({1, 0, translation_map(1.0 / 3.0, {1.0 / 3.0})});
    s.gd = GraphDirectedIFS(1, 2, std::move(edges));
    s.claims_ssc = false;
    s.closed_form_dimension = std::log((1.0 + std::sqrt(5.0)) / 2.0) / log3;
    out.push_back(std::move(s));
  }
  {
    BuiltinSystem s;
    s.name = "quarter_turn";
    s.description = "planar pair with a 90-degree rotation; transformation group of order 4";
    s.ss = SelfSimilarIFS(2, {Similarity(1.0 / 3.0, rotation2(M_PI / 2.0), {0.0, 0.0}),
                              translation_map(1.0 / 3.0, {2.0 / 3.0, 0.0})});
    s.claims_ssc = true;
    s.closed_form_dimension = log2 / log3;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

inline const std::vector<BuiltinSystem>& builtin_systems() {
  static const std::vector<BuiltinSystem> systems = detail::make_builtins();
  return systems;
}

inline const BuiltinSystem& find_builtin(const std::string& name) {
  for (const auto& s : builtin_systems())
    if (s.name == name) return s;
  throw ValidationError("unknown builtin system: " + name);
}

}  // namespace projdim
