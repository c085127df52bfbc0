#include "variational.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace neckcalib {

using linalg::DenseMatrix;

namespace {

// Neumaier compensated accumulator.
class CompensatedSum {
public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void check_graph_setting(const NeckSpec& spec) {
  require(spec.geometry().is_sphere(), ErrorKind::invalid_argument, "graph volumes need a sphere base");
  require(spec.t() == 1, ErrorKind::invalid_argument, "graph volumes need a one-dimensional fiber");
  require(spec.n() <= kMaxQuadratureAmbient, ErrorKind::invalid_argument, "graph volumes support n <= 6");
  spec.q0();
}

}  // namespace

double Mode::value(std::span<const double> p) const noexcept {
  double v = 1.0;
  for (int i : vars) v *= p[static_cast<std::size_t>(i)];
  return v;
}

double Mode::derivative(std::span<const double> p, std::span<const double> x) const noexcept {
  switch (vars.size()) {
    case 0: return 0.0;
    case 1: return x[static_cast<std::size_t>(vars[0])];
    default: {
      const auto i = static_cast<std::size_t>(vars[0]);
      const auto j = static_cast<std::size_t>(vars[1]);
      return p[j] * x[i] + p[i] * x[j];
    }
  }
}

double Mode::sup_norm() const noexcept {
  if (vars.size() == 2 && vars[0] != vars[1]) return 0.5;
  return 1.0;
}

std::string Mode::name() const {
  if (vars.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (i != 0) out += '*';
    out += 'x' + std::to_string(vars[i] + 1);
  }
  return out;
}

Mode Mode::parse(const std::string& text, int n) {
  if (text == "1") return Mode{};
  Mode m;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('*', pos), text.size());
    const std::string tok = text.substr(pos, end - pos);
    require(tok.size() >= 2 && tok[0] == 'x' && tok.find_first_not_of("0123456789", 1) == std::string::npos,
            ErrorKind::config, "bad mode '" + text + "' (expected 1, xI or xI*xJ)");
    const int idx = std::stoi(tok.substr(1));
    require(idx >= 1 && idx <= n, ErrorKind::config, "mode '" + text + "' refers to a coordinate outside 1.." +
                                                         std::to_string(n));
    m.vars.push_back(idx - 1);
    pos = end + 1;
  }
  require(m.vars.size() <= 2, ErrorKind::config, "mode '" + text + "' has degree above 2");
  std::sort(m.vars.begin(), m.vars.end());
  return m;
}

std::vector<Mode> all_modes(int n) {
  std::vector<Mode> modes{Mode{}};
  for (int i = 0; i < n; ++i) modes.push_back(Mode{{i}});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) modes.push_back(Mode{{i, j}});
  return modes;
}

double GraphSection::value(double q0, std::span<const double> p) const noexcept {
  double u = q0;
  for (std::size_t m = 0; m < modes.size(); ++m) u += amplitudes[m] * modes[m].value(p);
  return u;
}

double GraphSection::derivative(std::span<const double> p, std::span<const double> x) const noexcept {
  double d = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) d += amplitudes[m] * modes[m].derivative(p, x);
  return d;
}

QuadratureRule::QuadratureRule(int n, int nodes_per_angle) : n_(n), nodes_per_angle_(nodes_per_angle) {
  require(n >= 2 && n <= kMaxQuadratureAmbient, ErrorKind::invalid_argument, "quadrature supports 2 <= n <= 6");
  require(nodes_per_angle >= 1 && nodes_per_angle <= 512, ErrorKind::invalid_argument,
          "nodes_per_angle must be in 1..512");
  const int angles = n - 1;
  const std::size_t m = static_cast<std::size_t>(nodes_per_angle);
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(m), &gsl_integration_glfixed_table_free);
  require(table != nullptr, ErrorKind::invalid_argument, "could not build Gauss-Legendre table");
  for (int a = 0; a < angles; ++a) {
    const double hi = a == angles - 1 ? 2.0 * std::numbers::pi : std::numbers::pi;
    Vec nodes(m);
    Vec weights(m);
    for (std::size_t i = 0; i < m; ++i) gsl_integration_glfixed_point(0.0, hi, i, &nodes[i], &weights[i], table.get());
    angle_nodes_.push_back(std::move(nodes));
    angle_weights_.push_back(std::move(weights));
  }

  const Geometry sphere = Geometry::sphere(n);
  std::vector<std::size_t> idx(static_cast<std::size_t>(angles), 0);
  for (;;) {
    Vec p(static_cast<std::size_t>(n));
    double w = 1.0;
    double sin_prod = 1.0;
    for (int a = 0; a < angles; ++a) {
      const double phi = angle_nodes_[static_cast<std::size_t>(a)][idx[static_cast<std::size_t>(a)]];
      w *= angle_weights_[static_cast<std::size_t>(a)][idx[static_cast<std::size_t>(a)]];
      if (a < angles - 1) {
        p[static_cast<std::size_t>(a)] = sin_prod * std::cos(phi);
        w *= std::pow(std::sin(phi), n - 2 - a);
        sin_prod *= std::sin(phi);
      } else {
        p[static_cast<std::size_t>(a)] = sin_prod * std::cos(phi);
        p[static_cast<std::size_t>(a + 1)] = sin_prod * std::sin(phi);
      }
    }
    tangents_.push_back(tangent_basis(sphere, p).vectors);
    points_.push_back(std::move(p));
    weights_.push_back(w);

    int axis = 0;
    while (axis < angles && ++idx[static_cast<std::size_t>(axis)] == m) idx[static_cast<std::size_t>(axis++)] = 0;
    if (axis == angles) break;
  }
}

double graph_volume(const NeckSpec& spec, const GraphSection& section, const QuadratureRule& rule, unsigned threads) {
  check_graph_setting(spec);
  require(rule.ambient_dim() == spec.n(), ErrorKind::invalid_argument, "quadrature rule built for another n");
  require(section.modes.size() == section.amplitudes.size(), ErrorKind::invalid_argument,
          "one amplitude per mode required");
  const double q0 = spec.q0()[0];
  const FiberBox& box = spec.fiber_domain();
  const int k = spec.k();
  const int n = spec.n();

  const std::size_t chunks = (rule.size() + kQuadratureChunk - 1) / kQuadratureChunk;
  Vec partial(chunks, 0.0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    CompensatedSum sum;
    Vec du(static_cast<std::size_t>(k));
    const std::size_t end = std::min(rule.size(), (c + 1) * kQuadratureChunk);
    for (std::size_t i = c * kQuadratureChunk; i < end; ++i) {
      const Vec& p = rule.point(i);
      const DenseMatrix& x = rule.tangent(i);
      const double u = section.value(q0, p);
      require(box.contains(std::span<const double>(&u, 1)), ErrorKind::domain,
              "graph leaves the fiber domain (u = " + format_real(u) + ")");
      for (int r = 0; r < k; ++r) du[static_cast<std::size_t>(r)] = section.derivative(p, x.row(r));
      const Vec q{u};
      const Vec w = base_weights(spec, q);
      const double h = fiber_matrix(spec, p, q)(0, 0);
      DenseMatrix g(k, k);
      for (int a = 0; a < k; ++a)
        for (int b = 0; b <= a; ++b) {
          double v = h * du[static_cast<std::size_t>(a)] * du[static_cast<std::size_t>(b)];
          for (int l = 0; l < n; ++l) v += w[static_cast<std::size_t>(l)] * x(a, l) * x(b, l);
          g(a, b) = v;
          g(b, a) = v;
        }
      const double d = linalg::det(g);
      require(std::isfinite(d), ErrorKind::numerical_degeneracy, "graph Gram determinant is not finite");
      sum.add(rule.weight(i) * std::sqrt(std::max(d, 0.0)));
    }
    partial[c] = sum.value();
  });
  CompensatedSum total;
  for (double v : partial) total.add(v);
  return total.value();
}

double amplitude_bound(const NeckSpec& spec, const std::vector<Mode>& modes) {
  check_graph_setting(spec);
  const double q0 = spec.q0()[0];
  const FiberBox& box = spec.fiber_domain();
  const double margin = std::min(q0 - box.lo[0], box.hi[0] - q0);
  double sup = 0.0;
  for (const auto& m : modes) sup += m.sup_norm();
  return sup == 0.0 ? 0.0 : margin / sup;
}

VolumeReport perturbation_test(const NeckSpec& spec, const PerturbationOptions& options, const QuadratureRule& rule) {
  check_graph_setting(spec);
  require(!options.modes.empty(), ErrorKind::invalid_argument, "perturbation test needs at least one mode");
  require(!options.amplitudes.empty() || options.trials == 0, ErrorKind::invalid_argument,
          "perturbation test needs at least one amplitude");
  const double eps_max = amplitude_bound(spec, options.modes);
  for (double a : options.amplitudes)
    require(std::isfinite(a) && std::abs(a) <= eps_max, ErrorKind::invalid_argument,
            "amplitude " + format_real(a) + " exceeds the fiber window bound " + format_real(eps_max));

  VolumeReport report;
  const GraphSection flat{options.modes, Vec(options.modes.size(), 0.0)};
  report.baseline_volume = graph_volume(spec, flat, rule, options.threads);

  report.entries.resize(static_cast<std::size_t>(options.trials));
  parallel_for(report.entries.size(), options.threads, [&](std::size_t t) {
    CounterRng rng = stream_for(options.seed, t);
    const double scale =
        options.amplitudes[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(options.amplitudes.size()))];
    GraphSection s{options.modes, Vec(options.modes.size())};
    for (double& a : s.amplitudes) a = scale * rng.uniform(-1.0, 1.0);
    VolumeEntry& e = report.entries[t];
    e.volume = graph_volume(spec, s, rule, 1);
    e.excess = (e.volume - report.baseline_volume) / report.baseline_volume;
    e.amplitudes = std::move(s.amplitudes);
  });
  for (std::size_t i = 0; i < report.entries.size(); ++i)
    if (report.entries[i].excess < report.min_excess) {
      report.min_excess = report.entries[i].excess;
      report.worst = i;
    }
  return report;
}

VolumeReport mean_curvature_defect(const NeckSpec& spec, const std::vector<Mode>& modes, double step,
                                   const QuadratureRule& rule, unsigned threads) {
  check_graph_setting(spec);
  require(step > 0.0 && std::isfinite(step), ErrorKind::invalid_argument, "finite-difference step must be positive");
  VolumeReport report;
  report.baseline_volume = graph_volume(spec, GraphSection{}, rule, threads);
  report.entries.resize(2 * modes.size());
  parallel_for(report.entries.size(), threads, [&](std::size_t i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    const GraphSection s{{modes[i / 2]}, {sign * step}};
    VolumeEntry& e = report.entries[i];
    e.volume = graph_volume(spec, s, rule, 1);
    e.excess = (e.volume - report.baseline_volume) / report.baseline_volume;
    e.amplitudes.assign(modes.size(), 0.0);
    e.amplitudes[i / 2] = sign * step;
  });
  double defect = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double d = std::abs(report.entries[2 * m].volume - report.entries[2 * m + 1].volume) / (2.0 * step);
    defect = std::max(defect, d);
  }
  for (std::size_t i = 0; i < report.entries.size(); ++i)
    if (report.entries[i].excess < report.min_excess) {
      report.min_excess = report.entries[i].excess;
      report.worst = i;
    }
  report.defect = defect;
  return report;
}

}  // namespace neckcalib
