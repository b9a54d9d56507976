#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "gdash/env.hpp"
#include "gdash/skeleton.hpp"

namespace gdash {

using nlohmann::json;

inline json readJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

inline void writeTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline void writeJsonFile(const std::string& path, const json& j) {
  writeTextFile(path, j.dump(2) + "\n");
}

inline json workspaceToJson(const Workspace& ws) {
  json obstacles = json::array();
  for (const auto& poly : ws.obstacles) {
    json ring = json::array();
    for (const auto& p : poly) ring.push_back({p.x, p.y});
    obstacles.push_back(ring);
  }
  return json{{"bounds",
               {ws.bounds.xmin, ws.bounds.ymin, ws.bounds.xmax, ws.bounds.ymax}},
              {"obstacles", obstacles}};
}

inline Workspace workspaceFromJson(const json& j) {
  Workspace ws;
  const auto& b = j.at("bounds");
  ws.bounds = {b.at(0).get<double>(), b.at(1).get<double>(),
               b.at(2).get<double>(), b.at(3).get<double>()};
  for (const auto& ring : j.at("obstacles")) {
    Polygon poly;
    for (const auto& p : ring)
      poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    ws.obstacles.push_back(std::move(poly));
  }
  return ws;
}

inline json skeletonToJson(const WorkspaceSkeleton& sk) {
  json vertices = json::array();
  for (const auto& v : sk.vertices)
    vertices.push_back({{"id", v.id},
                        {"pos", {v.position.x, v.position.y}},
                        {"clearance", v.clearance}});
  json edges = json::array();
  for (const auto& e : sk.edges) {
    json poly = json::array();
    for (const auto& p : e.polyline) poly.push_back({p.x, p.y});
    edges.push_back({{"id", e.id},
                     {"u", e.u},
                     {"v", e.v},
                     {"polyline", poly},
                     {"clearances", e.clearances}});
  }
  json out{{"vertices", vertices}, {"edges", edges}};
  if (sk.cell > 0.0) out["cell"] = sk.cell;
  return out;
}

inline WorkspaceSkeleton skeletonFromJson(const json& j) {
  WorkspaceSkeleton sk;
  sk.cell = j.value("cell", 0.0);
  sk.vertices.resize(j.at("vertices").size());
  for (const auto& jv : j.at("vertices")) {
    SkeletonVertex v;
    v.id = jv.at("id").get<int>();
    v.position = {jv.at("pos").at(0).get<double>(),
                  jv.at("pos").at(1).get<double>()};
    v.clearance = jv.at("clearance").get<double>();
    if (v.id < 0 || v.id >= static_cast<int>(sk.vertices.size()))
      throw std::runtime_error("skeleton vertex ids must be dense");
    sk.vertices[v.id] = v;
  }
  sk.edges.resize(j.at("edges").size());
  for (const auto& je : j.at("edges")) {
    SkeletonEdge e;
    e.id = je.at("id").get<int>();
    e.u = je.at("u").get<int>();
    e.v = je.at("v").get<int>();
    for (const auto& p : je.at("polyline"))
      e.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    e.clearances = je.at("clearances").get<std::vector<double>>();
    if (e.polyline.size() != e.clearances.size())
      throw std::runtime_error("polyline/clearance length mismatch");
    if (e.id < 0 || e.id >= static_cast<int>(sk.edges.size()))
      throw std::runtime_error("skeleton edge ids must be dense");
    double mn = std::numeric_limits<double>::infinity();
    for (double c : e.clearances) mn = std::min(mn, c);
    e.minClearance = mn;
    e.length = polylineLength(e.polyline);
    sk.edges[e.id] = std::move(e);
  }
  sk.rebuildIncidence();
  return sk;
}

}  // namespace gdash
