#pragma once

// JSON experiment descriptions and JSON renderings of reports.

#include "rsde/analysis.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rsde::config {

using nlohmann::json;

/// FNV-1a 64; stable across platforms, used to tag artifacts with their config.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline Vec to_vec(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a non-empty array");
  }
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

inline json from_vec(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json json_number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// domain ----------------------------------------------------------------------

inline Domain parse_domain(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "half-space") return Domain::half_space(to_vec(j.at("normal"), "normal"), j.value("offset", 0.0));
  if (kind == "ball") return Domain::ball(to_vec(j.at("center"), "center"), j.at("radius").get<double>());
  if (kind == "box") return Domain::box(to_vec(j.at("lower"), "lower"), to_vec(j.at("upper"), "upper"));
  if (kind == "exterior-of-ball")
    return Domain::exterior_ball(to_vec(j.at("center"), "center"), j.at("radius").get<double>());
  if (kind == "convex-polyhedron") {
    std::vector<HalfSpace> faces;
    for (const auto& f : j.at("faces")) faces.push_back({to_vec(f.at("normal"), "normal"), f.value("offset", 0.0)});
    return Domain::polyhedron(std::move(faces));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown domain kind '" + kind + "'");
}

inline json domain_json(const Domain& d) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, HalfSpace>)
          return {{"kind", "half-space"}, {"normal", from_vec(s.normal)}, {"offset", s.offset}};
        else if constexpr (std::is_same_v<S, Ball>)
          return {{"kind", "ball"}, {"center", from_vec(s.center)}, {"radius", s.radius}};
        else if constexpr (std::is_same_v<S, Box>)
          return {{"kind", "box"}, {"lower", from_vec(s.lower)}, {"upper", from_vec(s.upper)}};
        else if constexpr (std::is_same_v<S, Polyhedron>) {
          json faces = json::array();
          for (const auto& f : s.faces) faces.push_back({{"normal", from_vec(f.normal)}, {"offset", f.offset}});
          return {{"kind", "convex-polyhedron"}, {"faces", faces}};
        } else
          return {{"kind", "exterior-of-ball"}, {"center", from_vec(s.center)}, {"radius", s.radius}};
      },
      d.shape());
}

// coefficient -------------------------------------------------------------------

inline Coefficient parse_coefficient(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant-matrix") {
    const auto& rows = j.at("matrix");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Mat m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto row = to_vec(rows[r], "matrix row");
      require(row.size() == n, ErrorCode::DimensionMismatch, "constant matrix must be square");
      m.row(r) = row.transpose();
    }
    return Coefficient::constant(std::move(m));
  }
  if (kind == "linear-diagonal") {
    const auto d = j.at("dimension").get<Eigen::Index>();
    const auto& wr = j.at("working_region");
    return Coefficient::linear_diagonal(
        d, j.value("scale", 1.0),
        WorkingRegion{to_vec(wr.at("center"), "working_region.center"), wr.at("radius").get<double>()});
  }
  if (kind == "catalog-smooth") {
    return Coefficient::catalog(j.at("id").get<std::string>(), j.at("dimension").get<Eigen::Index>(),
                                j.value("scale", 1.0));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown coefficient kind '" + kind + "'");
}

inline json coefficient_json(const Coefficient& c) {
  const auto d = c.dimension();
  switch (c.kind()) {
    case CoefficientKind::constant_matrix: {
      const Mat m = c(Vec::Zero(d));
      json rows = json::array();
      for (Eigen::Index r = 0; r < d; ++r) rows.push_back(from_vec(m.row(r).transpose()));
      return {{"kind", "constant-matrix"}, {"matrix", rows}};
    }
    case CoefficientKind::linear_diagonal: {
      const auto& wr = *c.working_region();
      return {{"kind", "linear-diagonal"},
              {"dimension", d},
              {"scale", c.params().at(0)},
              {"working_region", {{"center", from_vec(wr.center)}, {"radius", wr.radius}}}};
    }
    case CoefficientKind::catalog_smooth:
      return {{"kind", "catalog-smooth"}, {"id", c.name()}, {"dimension", d}, {"scale", c.params().at(0)}};
    case CoefficientKind::custom: return {{"kind", "custom"}, {"dimension", d}};
  }
  return {};
}

// driver ------------------------------------------------------------------------

inline DriverSpec parse_driver(const json& j, double horizon, Eigen::Index d) {
  DriverSpec s;
  const auto kind = j.value("kind", std::string("brownian"));
  s.horizon = j.value("horizon", horizon);
  s.dimension = j.value("dimension", d);
  s.steps = j.value("steps", 1024);
  s.diffusion_scale = j.value("diffusion_scale", 1.0);
  require(s.steps >= 1, ErrorCode::InvalidArgument, "driver.steps must be >= 1");
  if (kind == "brownian") {
    s.kind = DriverSpec::Kind::brownian;
  } else if (kind == "jump") {
    s.kind = DriverSpec::Kind::jump;
    s.jump_rate = j.value("jump_rate", 0.0);
    const auto law = j.value("jump_law", json{{"kind", "uniform-ball"}, {"radius", 0.0}});
    const auto lk = law.at("kind").get<std::string>();
    if (lk == "uniform-ball") s.jump_law = JumpLaw::uniform_ball(law.at("radius").get<double>());
    else if (lk == "fixed-vector") s.jump_law = JumpLaw::fixed(to_vec(law.at("vector"), "jump_law.vector"));
    else throw Error(ErrorCode::InvalidArgument, "unknown jump law '" + lk + "'");
  } else if (kind == "single-jump") {
    s.kind = DriverSpec::Kind::single_jump;
    s.jump_time = j.value("jump_time", 1.0);
    s.jump_size = to_vec(j.at("jump_size"), "driver.jump_size");
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown driver kind '" + kind + "'");
  }
  return s;
}

inline json driver_json(const DriverSpec& s) {
  json j{{"horizon", s.horizon}, {"dimension", s.dimension}, {"steps", s.steps},
         {"diffusion_scale", s.diffusion_scale}};
  switch (s.kind) {
    case DriverSpec::Kind::brownian: j["kind"] = "brownian"; break;
    case DriverSpec::Kind::jump:
      j["kind"] = "jump";
      j["jump_rate"] = s.jump_rate;
      if (s.jump_law.kind == JumpLaw::Kind::uniform_ball)
        j["jump_law"] = {{"kind", "uniform-ball"}, {"radius", s.jump_law.radius}};
      else
        j["jump_law"] = {{"kind", "fixed-vector"}, {"vector", from_vec(s.jump_law.vector)}};
      break;
    case DriverSpec::Kind::single_jump:
      j["kind"] = "single-jump";
      j["jump_time"] = s.jump_time;
      j["jump_size"] = from_vec(s.jump_size);
      break;
  }
  return j;
}

// experiment --------------------------------------------------------------------

inline json default_config_json() {
  return json::parse(R"({
    "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
    "coefficient": {"kind": "constant-matrix", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
    "driver": {"kind": "brownian", "steps": 1024},
    "scheme": {"kind": "wz-bar"},
    "x0": [0.0, 0.0],
    "horizon": 1.0,
    "mesh_ladder": [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625],
    "n_paths": 20,
    "seed": 1,
    "reference": {"kind": "numerical"},
    "observation": "driver",
    "output_dir": "out"
  })");
}

/// Parses and validates; throws rsde::Error on any problem.
inline ExperimentConfig parse_experiment(const json& j) {
  try {
    ExperimentConfig c;
    c.domain = parse_domain(j.at("domain"));
    c.coefficient = parse_coefficient(j.at("coefficient"));
    c.horizon = j.value("horizon", 1.0);
    c.driver = parse_driver(j.value("driver", json::object()), c.horizon, c.domain.dimension());
    const auto sch = j.value("scheme", json::object());
    c.scheme = scheme_kind_from_string(sch.value("kind", std::string("projection")));
    c.flow.substeps = sch.value("flow_substeps", 32);
    c.flow.adaptive = sch.value("flow_adaptive", false);
    c.substeps_bar = sch.value("substeps_bar", 64);
    c.x0 = to_vec(j.at("x0"), "x0");
    c.mesh_ladder = j.at("mesh_ladder").get<std::vector<double>>();
    c.n_paths = j.value("n_paths", 1);
    c.seed = j.value("seed", std::uint64_t{1});
    const auto ref = j.value("reference", json{{"kind", "numerical"}});
    const auto rk = ref.value("kind", std::string("numerical"));
    if (rk == "numerical") c.reference = ReferenceKind::numerical;
    else if (rk == "closed-form-exponential") c.reference = ReferenceKind::closed_form_exponential;
    else throw Error(ErrorCode::InvalidArgument, "unknown reference kind '" + rk + "'");
    c.refine = ref.value("refine", 4);
    c.reference_flow.substeps = ref.value("flow_substeps", 256);
    const auto obs = j.value("observation", json("driver"));
    if (obs.is_array()) {
      c.observation = ObservationKind::explicit_times;
      c.observation_times = obs.get<std::vector<double>>();
    } else {
      const auto o = obs.get<std::string>();
      if (o == "driver") c.observation = ObservationKind::driver_grid;
      else if (o == "partition") c.observation = ObservationKind::partition_only;
      else throw Error(ErrorCode::InvalidArgument, "observation must be 'driver', 'partition' or a list");
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.jobs = j.value("jobs", 0);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
}

/// Fully explicit rendering, every default spelled out.
inline json experiment_json(const ExperimentConfig& c) {
  json obs;
  switch (c.observation) {
    case ObservationKind::driver_grid: obs = "driver"; break;
    case ObservationKind::partition_only: obs = "partition"; break;
    case ObservationKind::explicit_times: obs = c.observation_times; break;
  }
  json ref{{"kind", c.reference == ReferenceKind::numerical ? "numerical" : "closed-form-exponential"},
           {"refine", c.refine},
           {"flow_substeps", c.reference_flow.substeps}};
  return {{"domain", domain_json(c.domain)},
          {"coefficient", coefficient_json(c.coefficient)},
          {"driver", driver_json(c.driver)},
          {"scheme",
           {{"kind", to_string(c.scheme)},
            {"flow_substeps", c.flow.substeps},
            {"flow_adaptive", c.flow.adaptive},
            {"substeps_bar", c.substeps_bar}}},
          {"x0", from_vec(c.x0)},
          {"horizon", c.horizon},
          {"mesh_ladder", c.mesh_ladder},
          {"n_paths", c.n_paths},
          {"seed", c.seed},
          {"reference", ref},
          {"observation", obs},
          {"output_dir", c.output_dir},
          {"jobs", c.jobs}};
}

// reports -------------------------------------------------------------------------

inline json rate_table_json(const RateTable& t, const std::string& config_hash) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"mesh", r.mesh},
                    {"err_unif_med", json_number(r.err_unif_med)},
                    {"err_unif_p90", json_number(r.err_unif_p90)},
                    {"err_grid_med", json_number(r.err_grid_med)},
                    {"err_grid_p90", json_number(r.err_grid_p90)},
                    {"k_err_med", json_number(r.k_err_med)},
                    {"kvar_med", json_number(r.kvar_med)},
                    {"kvar_max", json_number(r.kvar_max)},
                    {"slope_partial", json_number(r.slope_partial)},
                    {"failures", r.failures}});
  }
  return {{"version", kVersion},
          {"config_hash", config_hash},
          {"n_paths", t.n_paths},
          {"rows", rows},
          {"slope", json_number(t.fit.slope)},
          {"r2", json_number(t.fit.r2)},
          {"slope_defined", t.fit.defined()},
          {"failures", t.failure_messages}};
}

inline json remark4_json(const Remark4Report& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"mesh", row.mesh},
                    {"substeps_bar", row.substeps},
                    {"bar_endpoint", from_vec(row.bar_endpoint)},
                    {"projection_endpoint", from_vec(row.projection_endpoint)},
                    {"gap", row.gap}});
  }
  return {{"version", kVersion},
          {"rows", rows},
          {"bar_endpoint", from_vec(r.bar_endpoint)},
          {"projection_endpoint", from_vec(r.projection_endpoint)},
          {"gap", r.gap},
          {"integrator_tol", r.integrator_tol},
          {"gap_spread", r.gap_spread},
          {"gap_stable", r.gap_stable},
          {"gap_significant", r.gap_significant}};
}

inline json lemma1_json(const Lemma1Report& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"from", row.interval.from},
                    {"to", row.interval.to},
                    {"y_variation", row.y_variation},
                    {"k_variation", row.k_variation},
                    {"x_variation", row.x_variation},
                    {"k_bound", row.k_bound},
                    {"x_bound", row.x_bound}});
  }
  return {{"jump_condition", r.jump_condition}, {"all_hold", r.all_hold()}, {"rows", rows}};
}

inline json run_metadata_json(const ExperimentConfig& c, double mesh, std::size_t path_index,
                              std::uint64_t path_seed, const SchemeMeta& m,
                              const std::string& config_hash) {
  return {{"version", kVersion},
          {"config_hash", config_hash},
          {"scheme", to_string(c.scheme)},
          {"mesh", mesh},
          {"seed", c.seed},
          {"path_index", path_index},
          {"path_seed", path_seed},
          {"counts",
           {{"steps", m.steps}, {"projections", m.projections}, {"boundary_hits", m.boundary_hits}}}};
}

}  // namespace rsde::config
