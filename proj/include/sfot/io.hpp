#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfot/diagnostics.hpp"
#include "sfot/error.hpp"
#include "sfot/solver.hpp"

namespace sfot::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kInstanceKind = "sfot-instance";
inline constexpr const char* kSolutionKind = "sfot-solution";
inline constexpr const char* kReportKind = "sfot-validation";

namespace detail {

[[noreturn]] inline void fail(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::InvalidInput, "at " + (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

inline const Json& member(const Json& obj, const std::string& ptr, const char* key) {
  if (!obj.is_object()) fail(ptr, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(ptr, std::string("missing key '") + key + "'");
  return *it;
}

inline double number(const Json& v, const std::string& ptr) {
  if (!v.is_number()) fail(ptr, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(ptr, "number is not finite");
  return x;
}

inline Point2 point(const Json& v, const std::string& ptr) {
  if (!v.is_array() || v.size() != 2) fail(ptr, "expected a [x, y] pair");
  return {number(v[0], ptr + "/0"), number(v[1], ptr + "/1")};
}

inline std::vector<Point2> points(const Json& v, const std::string& ptr) {
  if (!v.is_array()) fail(ptr, "expected an array of points");
  std::vector<Point2> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(point(v[k], ptr + "/" + std::to_string(k)));
  return out;
}

inline Vector numbers(const Json& v, const std::string& ptr) {
  if (!v.is_array()) fail(ptr, "expected an array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) out[static_cast<Eigen::Index>(k)] = number(v[k], ptr + "/" + std::to_string(k));
  return out;
}

inline Json to_json(const Vector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Json to_json(const std::vector<Point2>& pts) {
  Json arr = Json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

inline void check_header(const Json& doc, const char* kind) {
  const auto& version = member(doc, "", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion)
    fail("/schema_version", "unsupported schema version");
  const auto& k = member(doc, "", "kind");
  if (!k.is_string() || k.get<std::string>() != kind) fail("/kind", std::string("expected '") + kind + "'");
}

inline void mix(std::uint64_t& h, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) {
    h ^= (bits >> (8 * b)) & 0xffu;
    h *= 0x100000001b3ULL;
  }
}

}  // namespace detail

/// Parses text into JSON; syntax errors report the line and column.
inline Json parse_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorCode::InvalidInput,
                source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed document");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + path);
  out << content;
  if (!out) throw Error(ErrorCode::IOError, "write failed for " + path);
}

/// Round-trip exact (shortest representation that parses back to the same double).
inline std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

inline Json instance_to_json(const Instance& inst) {
  Json mesh;
  mesh["vertices"] = detail::to_json(inst.mesh.vertices());
  Json tris = Json::array();
  for (const auto& t : inst.mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
  mesh["triangles"] = tris;
  mesh["density"] = inst.mesh.values();

  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = kInstanceKind;
  doc["domain"] = detail::to_json(inst.domain.vertices());
  doc["mesh"] = mesh;
  doc["sites"] = detail::to_json(inst.sites);
  doc["capacities"] = detail::to_json(inst.params.w);
  doc["h"] = inst.params.h;
  doc["eps"] = inst.params.eps;
  if (inst.psi0) doc["psi0"] = detail::to_json(*inst.psi0);
  return doc;
}

/// Builds and validates an instance. The density is rescaled to unit mass unless it already
/// integrates to one within 1e-12, which keeps serialize/parse an exact round trip.
inline Instance instance_from_json(const Json& doc) {
  using detail::member;
  detail::check_header(doc, kInstanceKind);
  Instance inst;
  inst.domain = ConvexPolygon(detail::points(member(doc, "", "domain"), "/domain"));

  const auto& mesh = member(doc, "", "mesh");
  auto verts = detail::points(member(mesh, "/mesh", "vertices"), "/mesh/vertices");
  const auto& tri_json = member(mesh, "/mesh", "triangles");
  if (!tri_json.is_array()) detail::fail("/mesh/triangles", "expected an array");
  std::vector<DensityMesh::Triangle> tris;
  for (std::size_t k = 0; k < tri_json.size(); ++k) {
    const auto& t = tri_json[k];
    const std::string ptr = "/mesh/triangles/" + std::to_string(k);
    if (!t.is_array() || t.size() != 3) detail::fail(ptr, "expected three vertex indices");
    DensityMesh::Triangle tri{};
    for (std::size_t c = 0; c < 3; ++c) {
      if (!t[c].is_number_unsigned()) detail::fail(ptr + "/" + std::to_string(c), "expected a vertex index");
      tri[c] = t[c].get<std::uint32_t>();
    }
    tris.push_back(tri);
  }
  const Vector dens = detail::numbers(member(mesh, "/mesh", "density"), "/mesh/density");
  try {
    DensityMesh m(std::move(verts), std::move(tris), std::vector<double>(dens.data(), dens.data() + dens.size()));
    inst.mesh = std::abs(m.total_mass() - 1.0) > 1e-12 ? m.normalized() : m;
  } catch (const Error& e) {
    detail::fail("/mesh", e.what());
  }

  inst.sites = detail::points(member(doc, "", "sites"), "/sites");
  inst.params.w = detail::numbers(member(doc, "", "capacities"), "/capacities");
  inst.params.h = detail::number(member(doc, "", "h"), "/h");
  inst.params.eps = detail::number(member(doc, "", "eps"), "/eps");
  if (doc.contains("psi0") && !doc["psi0"].is_null()) inst.psi0 = detail::numbers(doc["psi0"], "/psi0");
  try {
    inst.validate();
  } catch (const Error& e) {
    detail::fail("", e.what());
  }
  return inst;
}

inline Instance read_instance(const std::string& path) {
  try {
    return instance_from_json(parse_text(read_file(path), path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidInput) throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
    throw;
  }
}

/// Hash of the geometry (domain, mesh, sites); independent of h, eps and capacities.
inline std::string geometry_digest(const Instance& inst) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : inst.domain.vertices()) {
    detail::mix(h, p.x);
    detail::mix(h, p.y);
  }
  for (const auto& p : inst.mesh.vertices()) {
    detail::mix(h, p.x);
    detail::mix(h, p.y);
  }
  for (const auto& t : inst.mesh.triangles())
    for (auto v : t) detail::mix(h, static_cast<double>(v));
  for (double v : inst.mesh.values()) detail::mix(h, v);
  for (const auto& p : inst.sites) {
    detail::mix(h, p.x);
    detail::mix(h, p.y);
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

inline Json solution_to_json(const Solution& sol, const Instance& inst, const SolverConfig& config) {
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = kSolutionKind;
  doc["geometry_digest"] = geometry_digest(inst);
  doc["h"] = inst.params.h;
  doc["eps"] = inst.params.eps;
  doc["capacities"] = detail::to_json(inst.params.w);
  doc["solver"] = {{"zeta", config.zeta}, {"max_iter", config.max_iter}, {"ell_max", config.ell_max}};
  doc["converged"] = sol.converged;
  doc["iterations"] = sol.trace.size();
  doc["eps0"] = sol.eps0;
  doc["initial_residual"] = sol.initial_residual;
  if (sol.psi.size() > 0) {
    const Vector diff = sol.wbar - inst.params.w;
    doc["residual"] = {{"l2", diff.norm()}, {"l1", diff.lpNorm<1>()}, {"linf", diff.lpNorm<Eigen::Infinity>()}};
    doc["psi"] = detail::to_json(sol.psi);
    doc["masses"] = detail::to_json(sol.masses);
    doc["wbar"] = detail::to_json(sol.wbar);
    doc["transport_cost"] = transport_cost(sol.diagram, inst.mesh, inst.sites);
  } else {
    doc["psi"] = nullptr;
  }
  doc["optimality_error"] = std::isfinite(sol.optimality_error) ? Json(sol.optimality_error) : Json(nullptr);
  if (sol.failure)
    doc["failure"] = {{"code", std::string(to_string(sol.failure->code))}, {"message", sol.failure->message}};
  else
    doc["failure"] = nullptr;
  return doc;
}

/// The fields of a solution document that downstream diagnostics need.
struct SolutionDoc {
  std::string geometry_digest;
  StorageParams params;
  bool converged = false;
  Vector psi;
  Vector wbar;
};

inline SolutionDoc solution_from_json(const Json& doc) {
  using detail::member;
  detail::check_header(doc, kSolutionKind);
  SolutionDoc s;
  const auto& digest = member(doc, "", "geometry_digest");
  if (!digest.is_string()) detail::fail("/geometry_digest", "expected a string");
  s.geometry_digest = digest.get<std::string>();
  s.params.h = detail::number(member(doc, "", "h"), "/h");
  s.params.eps = detail::number(member(doc, "", "eps"), "/eps");
  s.params.w = detail::numbers(member(doc, "", "capacities"), "/capacities");
  const auto& conv = member(doc, "", "converged");
  if (!conv.is_boolean()) detail::fail("/converged", "expected a boolean");
  s.converged = conv.get<bool>();
  const auto& psi = member(doc, "", "psi");
  if (psi.is_null()) detail::fail("/psi", "solution has no dual vector");
  s.psi = detail::numbers(psi, "/psi");
  s.wbar = detail::numbers(member(doc, "", "wbar"), "/wbar");
  if (s.wbar.size() != s.psi.size() || s.params.w.size() != s.psi.size())
    detail::fail("", "psi, wbar and capacities differ in length");
  return s;
}

inline SolutionDoc read_solution(const std::string& path) {
  try {
    return solution_from_json(parse_text(read_file(path), path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidInput) throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
    throw;
  }
}

/// Reads a dual vector from either a bare JSON array or a solution document.
inline Vector read_psi(const std::string& path) {
  const Json doc = parse_text(read_file(path), path);
  if (doc.is_array()) return detail::numbers(doc, "");
  return solution_from_json(doc).psi;
}

inline void write_trace_csv(const std::vector<IterationRecord>& trace, std::ostream& out) {
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "k,residual_l2,residual_l1,residual_linf,ell,tau,r,min_wbar,sum_gap\n";
  out << std::setprecision(17);
  for (const auto& rec : trace) {
    out << rec.k + 1 << ',' << rec.residual_norm << ',' << rec.residual_l1 << ',' << rec.residual_linf << ','
        << rec.ell << ',' << rec.tau << ',' << rec.r << ',' << rec.min_wbar << ',' << rec.sum_gap << '\n';
  }
}

/// Cell boundaries as SVG: one closed path per nonempty cell, the domain as a polygon and
/// the sites as small circles. The y axis points up.
inline void write_svg(const PowerDiagram& diagram, const ConvexPolygon& domain, const std::vector<Point2>& sites,
                      std::ostream& out) {
  const auto box = sfot::detail::bounding_box(domain);
  const double w = box[2] - box[0], h = box[3] - box[1];
  const double pad = 0.02 * std::max(w, h);
  const double stroke = 0.002 * std::max(w, h);
  out << std::setprecision(10);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" data-schema-version=\"" << kSchemaVersion << "\" viewBox=\""
      << box[0] - pad << ' ' << -(box[3] + pad) << ' ' << w + 2 * pad << ' ' << h + 2 * pad << "\">\n";
  out << "<g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"" << stroke << "\">\n";
  out << "<polygon stroke=\"black\" points=\"";
  for (const auto& v : domain.vertices()) out << v.x << ',' << v.y << ' ';
  out << "\"/>\n";
  for (std::size_t i = 0; i < diagram.size(); ++i) {
    const auto& cell = diagram.cells[i];
    if (cell.empty()) continue;
    out << "<path stroke=\"steelblue\" data-cell=\"" << i << "\" d=\"M";
    for (std::size_t k = 0; k < cell.size(); ++k) out << (k ? " L" : " ") << cell[k].x << ' ' << cell[k].y;
    out << " Z\"/>\n";
  }
  for (const auto& s : sites) out << "<circle fill=\"crimson\" cx=\"" << s.x << "\" cy=\"" << s.y << "\" r=\"" << 2 * stroke << "\"/>\n";
  out << "</g>\n</svg>\n";
}

/// Side-by-side comparison of two solutions of the same geometry.
inline Json validation_report(const Instance& inst, const SolutionDoc& a, const SolutionDoc& b) {
  const std::string digest = geometry_digest(inst);
  if (a.geometry_digest != digest || b.geometry_digest != digest)
    throw Error(ErrorCode::GeometryMismatch, "solutions do not belong to the given instance geometry");
  if (a.psi.size() != static_cast<Eigen::Index>(inst.size()) || b.psi.size() != a.psi.size())
    throw Error(ErrorCode::MismatchedN, "solution length differs from site count");

  const LaguerreBuilder builder(inst.domain, inst.sites);
  const PowerDiagram da = builder.build(as_span(a.psi));
  const PowerDiagram db = builder.build(as_span(b.psi));
  const PartitionDistanceReport dist = sym_diff_partitions(da, db, inst.mesh);

  Json hd = Json::array();
  for (const auto& v : dist.per_cell_hausdorff) hd.push_back(v ? Json(*v) : Json(nullptr));
  Json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = kReportKind;
  doc["geometry_digest"] = digest;
  doc["partition"] = {{"per_cell_sym_diff", dist.per_cell_sym_diff},
                      {"total_sym_diff", dist.total_sym_diff},
                      {"per_cell_hausdorff", hd},
                      {"l1_weight_gap", dist.l1_weight_gap}};

  const auto weight_gap = [&](const SolutionDoc& s, const PowerDiagram& d) {
    Solution sol;
    sol.psi = s.psi;
    sol.wbar = s.wbar;
    sol.masses = mass_vector(d, inst.mesh);
    const WeightGapReport r = thm16_report(sol, s.params, s.params.w);
    Json j = {{"h", s.params.h},           {"eps", s.params.eps},         {"converged", s.converged},
              {"n_eps", r.n_eps},          {"residual_l1", r.residual_l1}, {"sqrt_h", r.sqrt_h}};
    j["classical_l1_gap"] = r.classical_gap ? Json(*r.classical_gap) : Json(nullptr);
    return j;
  };
  doc["weight_gap"] = {{"a", weight_gap(a, da)}, {"b", weight_gap(b, db)}};
  return doc;
}

}  // namespace sfot::io
