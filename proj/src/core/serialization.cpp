#include "serialization.hpp"

#include <cmath>
#include <set>

#include "error.hpp"

namespace neckcalib {

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be an object");
  const auto it = j.find(key);
  require(it != j.end(), ErrorKind::config, where + " is missing '" + key + "'");
  return *it;
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    require(ok.count(key) != 0, ErrorKind::config, where + " has unknown field '" + key + "'");
}

double as_double(const Json& j, const std::string& where) {
  require(j.is_number(), ErrorKind::config, where + " must be a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& where) {
  require(j.is_number_integer(), ErrorKind::config, where + " must be an integer");
  return j.get<int>();
}

std::string as_string(const Json& j, const std::string& where) {
  require(j.is_string(), ErrorKind::config, where + " must be a string");
  return j.get<std::string>();
}

Vec as_vec(const Json& j, const std::string& where) {
  require(j.is_array(), ErrorKind::config, where + " must be an array of numbers");
  Vec out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_double(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

FactorProfile::Kind profile_kind(const std::string& s) {
  if (s == "constant") return FactorProfile::Kind::constant;
  if (s == "even-polynomial") return FactorProfile::Kind::even_polynomial;
  if (s == "jlt") return FactorProfile::Kind::jlt;
  if (s == "reciprocal-jlt") return FactorProfile::Kind::reciprocal_jlt;
  fail(ErrorKind::config, "unknown profile kind '" + s + "'");
}

FiberMetricSpec::Kind fiber_kind(const std::string& s) {
  if (s == "euclidean") return FiberMetricSpec::Kind::euclidean;
  if (s == "jlt-induced") return FiberMetricSpec::Kind::jlt_induced;
  if (s == "explicit") return FiberMetricSpec::Kind::explicit_matrix;
  fail(ErrorKind::config, "unknown fiber metric kind '" + s + "'");
}

const char* factor_fn_name(ChartFactor::Fn fn) {
  switch (fn) {
    case ChartFactor::Fn::pow: return "pow";
    case ChartFactor::Fn::cos: return "cos";
    case ChartFactor::Fn::sin: return "sin";
  }
  return "pow";
}

ChartFactor::Fn factor_fn(const std::string& s) {
  if (s == "pow") return ChartFactor::Fn::pow;
  if (s == "cos") return ChartFactor::Fn::cos;
  if (s == "sin") return ChartFactor::Fn::sin;
  fail(ErrorKind::config, "unknown chart function '" + s + "' (expected pow, cos or sin)");
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

}  // namespace

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Geometry geometry_from_json(const Json& j) {
  const std::string kind = as_string(field(j, "kind", "geometry"), "geometry.kind");
  if (kind == "sphere") {
    only_keys(j, {"kind", "n"}, "geometry");
    return Geometry::sphere(as_int(field(j, "n", "geometry"), "geometry.n"));
  }
  require(kind == "immersed-chart", ErrorKind::config, "unknown geometry kind '" + kind + "'");
  only_keys(j, {"kind", "expressions", "domain", "jacobian"}, "geometry");
  ChartGeometry chart;
  const Json& dom = field(j, "domain", "geometry");
  only_keys(dom, {"lo", "hi"}, "geometry.domain");
  chart.lo = as_vec(field(dom, "lo", "geometry.domain"), "geometry.domain.lo");
  chart.hi = as_vec(field(dom, "hi", "geometry.domain"), "geometry.domain.hi");
  if (j.contains("jacobian")) {
    const std::string mode = as_string(j["jacobian"], "geometry.jacobian");
    require(mode == "analytic" || mode == "finite-difference", ErrorKind::config,
            "geometry.jacobian must be 'analytic' or 'finite-difference'");
    chart.jacobian = mode == "analytic" ? JacobianMode::analytic : JacobianMode::finite_difference;
  }
  const Json& exprs = field(j, "expressions", "geometry");
  require(exprs.is_array(), ErrorKind::config, "geometry.expressions must be an array (one entry per component)");
  for (std::size_t c = 0; c < exprs.size(); ++c) {
    const std::string where = "geometry.expressions[" + std::to_string(c) + "]";
    require(exprs[c].is_array(), ErrorKind::config, where + " must be an array of terms");
    std::vector<ChartTerm> terms;
    for (std::size_t t = 0; t < exprs[c].size(); ++t) {
      const Json& term = exprs[c][t];
      const std::string tw = where + "[" + std::to_string(t) + "]";
      only_keys(term, {"coef", "factors"}, tw);
      ChartTerm ct;
      ct.coef = as_double(field(term, "coef", tw), tw + ".coef");
      if (term.contains("factors")) {
        require(term["factors"].is_array(), ErrorKind::config, tw + ".factors must be an array");
        for (const Json& f : term["factors"]) {
          only_keys(f, {"fn", "var", "k"}, tw + ".factors");
          ChartFactor cf;
          cf.fn = factor_fn(as_string(field(f, "fn", tw), tw + ".fn"));
          cf.var = as_int(field(f, "var", tw), tw + ".var") - 1;
          cf.k = as_int(field(f, "k", tw), tw + ".k");
          ct.factors.push_back(cf);
        }
      }
      terms.push_back(std::move(ct));
    }
    chart.components.push_back(std::move(terms));
  }
  return Geometry::immersed_chart(std::move(chart));
}

Json geometry_to_json(const Geometry& geom) {
  if (const auto* s = geom.as_sphere()) return Json{{"kind", "sphere"}, {"n", s->n}};
  const ChartGeometry& c = *geom.as_chart();
  Json exprs = Json::array();
  for (const auto& comp : c.components) {
    Json terms = Json::array();
    for (const auto& t : comp) {
      Json factors = Json::array();
      for (const auto& f : t.factors) factors.push_back({{"fn", factor_fn_name(f.fn)}, {"var", f.var + 1}, {"k", f.k}});
      terms.push_back({{"coef", t.coef}, {"factors", factors}});
    }
    exprs.push_back(terms);
  }
  return Json{{"kind", "immersed-chart"},
              {"expressions", exprs},
              {"domain", {{"lo", c.lo}, {"hi", c.hi}}},
              {"jacobian", c.jacobian == JacobianMode::analytic ? "analytic" : "finite-difference"}};
}

NeckSpec spec_from_json(const Json& j) {
  only_keys(j, {"id", "n", "k", "t", "profiles", "fiber_metric", "fiber_domain", "geometry"}, "spec");
  const std::string id = j.contains("id") ? as_string(j["id"], "spec.id") : std::string("neck");
  Geometry geom = geometry_from_json(field(j, "geometry", "spec"));

  std::vector<FactorProfile> profiles;
  const Json& profs = field(j, "profiles", "spec");
  require(profs.is_array(), ErrorKind::config, "spec.profiles must be an array");
  for (std::size_t i = 0; i < profs.size(); ++i) {
    const std::string where = "spec.profiles[" + std::to_string(i) + "]";
    only_keys(profs[i], {"kind", "params"}, where);
    profiles.push_back({profile_kind(as_string(field(profs[i], "kind", where), where + ".kind")),
                        as_vec(field(profs[i], "params", where), where + ".params")});
  }

  const Json& fm = field(j, "fiber_metric", "spec");
  only_keys(fm, {"kind", "params"}, "spec.fiber_metric");
  FiberMetricSpec fiber;
  fiber.kind = fiber_kind(as_string(field(fm, "kind", "spec.fiber_metric"), "spec.fiber_metric.kind"));
  if (fm.contains("params")) fiber.params = as_vec(fm["params"], "spec.fiber_metric.params");

  const Json& dom = field(j, "fiber_domain", "spec");
  only_keys(dom, {"lo", "hi"}, "spec.fiber_domain");
  FiberBox box{as_vec(field(dom, "lo", "spec.fiber_domain"), "spec.fiber_domain.lo"),
               as_vec(field(dom, "hi", "spec.fiber_domain"), "spec.fiber_domain.hi")};

  NeckSpec spec(id, std::move(geom), std::move(profiles), std::move(fiber), std::move(box));
  const int n = as_int(field(j, "n", "spec"), "spec.n");
  const int k = as_int(field(j, "k", "spec"), "spec.k");
  const int t = as_int(field(j, "t", "spec"), "spec.t");
  require(n == spec.n() && k == spec.k() && t == spec.t(), ErrorKind::config,
          "spec dimensions (n, k, t) = (" + std::to_string(n) + ", " + std::to_string(k) + ", " + std::to_string(t) +
              ") do not match the geometry and fiber domain (" + std::to_string(spec.n()) + ", " +
              std::to_string(spec.k()) + ", " + std::to_string(spec.t()) + ")");
  return spec;
}

Json spec_to_json(const NeckSpec& spec) {
  require(!spec.fiber_metric().callable, ErrorKind::config, "a callable fiber metric cannot be serialized");
  Json profiles = Json::array();
  for (const auto& p : spec.profiles()) profiles.push_back({{"kind", to_string(p.kind)}, {"params", p.params}});
  return Json{{"id", spec.id()},
              {"n", spec.n()},
              {"k", spec.k()},
              {"t", spec.t()},
              {"profiles", profiles},
              {"fiber_metric", {{"kind", to_string(spec.fiber_metric().kind)}, {"params", spec.fiber_metric().params}}},
              {"fiber_domain", {{"lo", spec.fiber_domain().lo}, {"hi", spec.fiber_domain().hi}}},
              {"geometry", geometry_to_json(spec.geometry())}};
}

Json frame_to_json(const TangentFrame& frame) {
  Json vectors = Json::array();
  for (const auto& v : frame.vectors) vectors.push_back({{"base", vec_json(v.base)}, {"fiber", vec_json(v.fiber)}});
  return Json{{"point", {{"p", vec_json(frame.at.p)}, {"q", vec_json(frame.at.q)}}}, {"vectors", vectors}};
}

Json comass_report_to_json(const ComassReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations)
    violations.push_back({{"ratio", number_or_null(v.ratio)}, {"frame", frame_to_json(v.frame)}});
  return Json{{"spec_id", report.spec_id},
              {"samples", report.samples},
              {"max_ratio", number_or_null(report.max_ratio)},
              {"argmax", report.argmax ? frame_to_json(*report.argmax) : Json(nullptr)},
              {"violations", violations},
              {"seed", report.seed},
              {"wall_time_s", report.wall_time_s}};
}

Json search_result_to_json(const SearchResult& result) {
  return Json{{"ratio", number_or_null(result.ratio)},
              {"frame", result.frame ? frame_to_json(*result.frame) : Json(nullptr)}};
}

Json probe_report_to_json(const ProbeReport& report) {
  Json witness = nullptr;
  if (report.witness)
    witness = {{"ratio", number_or_null(report.witness->ratio)}, {"frame", frame_to_json(report.witness->frame)}};
  return Json{{"coordinatewise_min", report.coordinatewise_min},
              {"max_ratio", number_or_null(report.max_ratio)},
              {"witness", witness},
              {"sweep", comass_report_to_json(report.sweep)},
              {"search", search_result_to_json(report.search)}};
}

Json volume_report_to_json(const VolumeReport& report) {
  Json entries = Json::array();
  for (const auto& e : report.entries)
    entries.push_back(
        {{"amplitudes", vec_json(e.amplitudes)}, {"volume", number_or_null(e.volume)}, {"excess", number_or_null(e.excess)}});
  return Json{{"baseline_volume", number_or_null(report.baseline_volume)},
              {"entries", entries},
              {"min_excess", number_or_null(report.min_excess)},
              {"defect", report.defect ? number_or_null(*report.defect) : Json(nullptr)}};
}

}  // namespace neckcalib
