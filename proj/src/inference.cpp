#include "cmrf/inference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "cmrf/keyvalue.hpp"

namespace cmrf {

void check(const PcbpConfig& cfg) {
  if (cfg.n_particles < 1) throw std::invalid_argument("pcbp: n_particles must be >= 1");
  if (cfg.n_outer_iters < 1) throw std::invalid_argument("pcbp: n_outer_iters must be >= 1");
  if (!(cfg.sigma_alpha0 >= 0.0 && cfg.sigma_beta0 >= 0.0 && cfg.sigma_gamma0 >= 0.0))
    throw std::invalid_argument("pcbp: sigmas must be >= 0");
  if (!(cfg.decay > 0.0)) throw std::invalid_argument("pcbp: decay must be positive");
  if (cfg.bp_max_sweeps < 1) throw std::invalid_argument("pcbp: bp_max_sweeps must be >= 1");
  if (!(cfg.bp_tolerance >= 0.0)) throw std::invalid_argument("pcbp: bp_tolerance must be >= 0");
}

Sigma sigma_at(const PcbpConfig& cfg, int t) {
  const double f = std::exp(-static_cast<double>(t) / cfg.decay);
  return {cfg.sigma_alpha0 * f, cfg.sigma_beta0 * f, cfg.sigma_gamma0 * f};
}

namespace {

constexpr int kFitTriples = 50;
constexpr int kIrlsRounds = 5;
constexpr double kHuberMin = 0.1;

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t mid = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + mid, x.end());
  const double upper = x[mid];
  if (x.size() % 2 == 1) return upper;
  const double lower = *std::max_element(x.begin(), x.begin() + mid);
  return 0.5 * (lower + upper);
}

struct Sample {
  double x, y, d;
};

double truncated_cost(const std::vector<Sample>& s, const Eigen::Vector3d& p, double K) {
  double sum = 0.0;
  for (const Sample& q : s) sum += truncated_quadratic(q.d, p[0] * q.x + p[1] * q.y + p[2], K);
  return sum;
}

std::optional<Eigen::Vector3d> weighted_ls(const std::vector<Sample>& s, const std::vector<double>& w) {
  Eigen::MatrixXd a(s.size(), 3);
  Eigen::VectorXd b(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double r = std::sqrt(w[k]);
    a.row(k) << r * s[k].x, r * s[k].y, r;
    b[k] = r * s[k].d;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) return std::nullopt;
  return Eigen::Vector3d(qr.solve(b));
}

std::optional<Plane> robust_fit(const std::vector<Sample>& s, double K, std::uint64_t stream) {
  if (s.size() < 3) return std::nullopt;
  std::vector<double> w(s.size(), 1.0);
  const auto ls = weighted_ls(s, w);
  if (!ls) return std::nullopt;
  Eigen::Vector3d best = *ls;
  double best_cost = truncated_cost(s, best, K);
  std::mt19937_64 rng(0x5eed5eedULL ^ (stream * 0x9E3779B97F4A7C15ULL));
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  for (int t = 0; t < kFitTriples && s.size() > 3; ++t) {
    const Sample& p = s[pick(rng)];
    const Sample& q = s[pick(rng)];
    const Sample& r = s[pick(rng)];
    Eigen::Matrix3d m;
    m << p.x, p.y, 1, q.x, q.y, 1, r.x, r.y, 1;
    if (std::abs(m.determinant()) < 1e-6) continue;
    const Eigen::Vector3d c = m.partialPivLu().solve(Eigen::Vector3d(p.d, q.d, r.d));
    const double cost = truncated_cost(s, c, K);
    if (cost < best_cost) {
      best_cost = cost;
      best = c;
    }
  }
  std::vector<double> res(s.size()), abs_dev(s.size());
  for (int round = 0; round < kIrlsRounds; ++round) {
    for (std::size_t k = 0; k < s.size(); ++k) res[k] = s[k].d - (best[0] * s[k].x + best[1] * s[k].y + best[2]);
    const double med = median(res);
    for (std::size_t k = 0; k < s.size(); ++k) abs_dev[k] = std::abs(res[k] - med);
    const double delta = std::max(kHuberMin, 1.345 * 1.4826 * median(abs_dev));
    for (std::size_t k = 0; k < s.size(); ++k) w[k] = std::abs(res[k]) <= delta ? 1.0 : delta / std::abs(res[k]);
    const auto next = weighted_ls(s, w);
    if (!next) break;
    best = *next;
  }
  return Plane{best[0], best[1], best[2]};
}

}  // namespace

std::vector<Plane> fit_initial_planes(const Segmentation& seg, const DisparityImage& obs, double K) {
  if (obs.width() != seg.width || obs.height() != seg.height)
    throw std::invalid_argument("fit_initial_planes: observation and segmentation sizes differ");
  const std::size_t n = seg.size();
  std::vector<Plane> planes(n);
  std::vector<char> fitted(n, 0);
  std::vector<double> all;
  std::vector<std::size_t> unresolved;
  for (const Segment& s : seg.segments) {
    std::vector<Sample> samples;
    for (const Pixel& p : s.pixels)
      if (obs.valid(p.u, p.v)) samples.push_back({p.u - s.cx, p.v - s.cy, double(obs.at(p.u, p.v))});
    for (const Sample& q : samples) all.push_back(q.d);
    if (const auto fit = robust_fit(samples, K, static_cast<std::uint64_t>(s.id))) {
      planes[s.id] = *fit;
      fitted[s.id] = 1;
    } else if (!samples.empty()) {
      std::vector<double> d;
      for (const Sample& q : samples) d.push_back(q.d);
      planes[s.id] = {0.0, 0.0, median(std::move(d))};
      fitted[s.id] = 1;
    } else {
      unresolved.push_back(static_cast<std::size_t>(s.id));
    }
  }
  std::vector<std::vector<int>> neighbors(n);
  for (const NeighborPair& p : seg.adjacency) {
    neighbors[p.i].push_back(p.j);
    neighbors[p.j].push_back(p.i);
  }
  const double global = all.empty() ? 0.0 : median(all);
  for (std::size_t i : unresolved) {
    std::vector<double> g;
    for (int j : neighbors[i])
      if (fitted[j]) g.push_back(planes[j].gamma);
    planes[i] = {0.0, 0.0, g.empty() ? global : median(std::move(g))};
  }
  return planes;
}

std::vector<Plane> sample_particles(const Plane& current, const Sigma& sigma, int n, std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("sample_particles: need at least one particle");
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Plane> out{current};
  for (int k = 1; k < n; ++k) {
    Plane p = current;
    p.alpha += sigma.alpha * z(rng);
    p.beta += sigma.beta * z(rng);
    p.gamma += sigma.gamma * z(rng);
    out.push_back(p);
  }
  return out;
}

Discretization discretize(const StereoModel& model, const std::vector<std::vector<Plane>>& particles) {
  const Segmentation& seg = model.segmentation();
  const PotentialWeights& w = model.params().w;
  if (particles.size() != seg.size()) throw std::invalid_argument("discretize: one particle list per segment");
  Discretization out;
  out.n_segments = static_cast<int>(seg.size());
  FactorGraph& g = out.graph;
  for (const auto& list : particles) {
    if (list.empty()) throw std::invalid_argument("discretize: empty particle list");
    g.add_variable(static_cast<int>(list.size()));
  }
  for (std::size_t k = 0; k < seg.adjacency.size(); ++k) g.add_variable(kBoundaryStates);

  for (std::size_t i = 0; i < seg.size(); ++i) {
    std::vector<double> t;
    for (const Plane& y : particles[i]) t.push_back(w.seg * model.phi_seg(static_cast<int>(i), y));
    g.add_factor({static_cast<int>(i)}, std::move(t));
  }
  for (std::size_t k = 0; k < seg.adjacency.size(); ++k) {
    std::vector<double> t;
    for (int o = 0; o < kBoundaryStates; ++o) t.push_back(w.col * model.phi_color(static_cast<int>(k), BoundaryLabel(o)));
    g.add_factor({out.label_var(static_cast<int>(k))}, std::move(t));
  }

  for (std::size_t k = 0; k < seg.adjacency.size(); ++k) {
    const int pair = static_cast<int>(k);
    const NeighborPair& np = seg.adjacency[k];
    const auto& pi = particles[np.i];
    const auto& pj = particles[np.j];
    const std::size_t ni = pi.size(), nj = pj.size();
    std::vector<double> fit_i(ni), fit_j(nj), neg_i(ni), neg_j(nj);
    for (std::size_t a = 0; a < ni; ++a) {
      fit_i[a] = model.band_fit(pair, 0, pi[a]);
      neg_i[a] = model.phi_neg(pair, 0, pi[a]);
    }
    for (std::size_t b = 0; b < nj; ++b) {
      fit_j[b] = model.band_fit(pair, 1, pj[b]);
      neg_j[b] = model.phi_neg(pair, 1, pj[b]);
    }
    std::vector<double> t(kBoundaryStates * ni * nj);
    for (std::size_t a = 0; a < ni; ++a)
      for (std::size_t b = 0; b < nj; ++b) {
        const double occ_i = model.phi_occ(pair, 0, pi[a], pj[b]);
        const double occ_j = model.phi_occ(pair, 1, pi[a], pj[b]);
        const double hinge = model.hinge_mean(pair, pi[a], pj[b]);
        const double co = model.coplanar_mean(pair, pi[a], pj[b]);
        for (int o = 0; o < kBoundaryStates; ++o) {
          const BoundaryLabel l = BoundaryLabel(o);
          // the same component values the model's own potentials pass on
          const double b2 = model.combine_bdy2(l, neg_i[a], neg_j[b], l == BoundaryLabel::LeftOccludes ? occ_i : 0.0,
                                               l == BoundaryLabel::RightOccludes ? occ_j : 0.0,
                                               l == BoundaryLabel::Hinge ? hinge : 0.0,
                                               l == BoundaryLabel::Coplanar ? co : 0.0);
          t[(o * ni + a) * nj + b] = w.bdy1 * StereoModel::combine_bdy1(l, fit_i[a], fit_j[b]) + w.bdy2 * b2;
        }
      }
    g.add_factor({out.label_var(pair), static_cast<int>(np.i), static_cast<int>(np.j)}, std::move(t));
  }

  const double imp = model.params().lambda_imp;
  std::map<int, int> j3_tables, j4_tables;
  for (const Junction3& j : seg.junctions3) {
    int mask = 0;
    for (int m = 0; m < 3; ++m) mask |= (seg.adjacency[j.pairs[m]].i == j.segments[m]) << m;
    auto it = j3_tables.find(mask);
    if (it == j3_tables.end()) {
      std::vector<double> t(64);
      for (int idx = 0; idx < 64; ++idx) {
        const int o[3] = {idx / 16, (idx / 4) % 4, idx % 4};
        std::array<DirectedLabel, 3> d{};
        for (int m = 0; m < 3; ++m) d[m] = directed(BoundaryLabel(o[m]), (mask >> m) & 1);
        t[idx] = w.jct3 * phi_junction3(d, imp);
      }
      it = j3_tables.emplace(mask, g.add_table(std::move(t))).first;
    }
    g.add_factor({out.label_var(j.pairs[0]), out.label_var(j.pairs[1]), out.label_var(j.pairs[2])}, it->second);
  }
  for (const Junction4& j : seg.junctions4) {
    int mask = 0;
    for (int m = 0; m < 4; ++m) mask |= (seg.adjacency[j.pairs[m]].i == j.cycle[m]) << m;
    mask |= (j.orientation[0] == BoundaryOrientation::Vertical) << 4;
    auto it = j4_tables.find(mask);
    if (it == j4_tables.end()) {
      std::vector<double> t(256);
      for (int idx = 0; idx < 256; ++idx) {
        const int o[4] = {idx / 64, (idx / 16) % 4, (idx / 4) % 4, idx % 4};
        std::array<DirectedLabel, 4> d{};
        for (int m = 0; m < 4; ++m) d[m] = directed(BoundaryLabel(o[m]), (mask >> m) & 1);
        t[idx] = w.crs4 * phi_junction4(d, j.orientation, imp);
      }
      it = j4_tables.emplace(mask, g.add_table(std::move(t))).first;
    }
    g.add_factor({out.label_var(j.pairs[0]), out.label_var(j.pairs[1]), out.label_var(j.pairs[2]),
                  out.label_var(j.pairs[3])},
                 it->second);
  }
  return out;
}

std::vector<BoundaryLabel> pairwise_best_labels(const StereoModel& model, const std::vector<Plane>& planes) {
  const auto& adj = model.segmentation().adjacency;
  const PotentialWeights& w = model.params().w;
  std::vector<BoundaryLabel> labels(adj.size(), BoundaryLabel::Coplanar);
  for (std::size_t k = 0; k < adj.size(); ++k) {
    const int p = static_cast<int>(k);
    double best = std::numeric_limits<double>::infinity();
    for (int o = 0; o < kBoundaryStates; ++o) {
      const BoundaryLabel l = BoundaryLabel(o);
      const Plane& yi = planes[adj[k].i];
      const Plane& yj = planes[adj[k].j];
      const double e = w.bdy1 * model.phi_bdy1(p, l, yi, yj) + w.bdy2 * model.phi_bdy2(p, l, yi, yj) +
                       w.col * model.phi_color(p, l);
      if (e < best) {
        best = e;
        labels[k] = l;
      }
    }
  }
  return labels;
}

Solution pcbp(const StereoModel& model, const PcbpConfig& cfg) {
  return pcbp(model, cfg, fit_initial_planes(model.segmentation(), model.observations(), model.params().K));
}

Solution pcbp(const StereoModel& model, const PcbpConfig& cfg, std::vector<Plane> initial) {
  check(cfg);
  if (initial.size() != model.n_segments()) throw std::invalid_argument("pcbp: one initial plane per segment");
  Solution sol;
  sol.planes = std::move(initial);
  sol.labels = pairwise_best_labels(model, sol.planes);
  sol.energy = model.total_energy(sol.planes, sol.labels);
  sol.energy_trace.push_back(sol.energy);
  std::mt19937_64 rng(cfg.seed);
  const int n_seg = static_cast<int>(model.n_segments());
  for (int t = 1; t <= cfg.n_outer_iters; ++t) {
    OuterIteration it;
    it.t = t;
    it.sigma = sigma_at(cfg, t);
    std::vector<std::vector<Plane>> particles;
    particles.reserve(n_seg);
    for (const Plane& y : sol.planes) particles.push_back(sample_particles(y, it.sigma, cfg.n_particles, rng));
    const Discretization d = discretize(model, particles);
    const BpResult bp = convex_bp(d.graph, cfg.bp_max_sweeps, cfg.bp_tolerance);
    std::vector<Plane> planes(n_seg);
    for (int i = 0; i < n_seg; ++i) planes[i] = particles[i][bp.assignment[i]];
    std::vector<BoundaryLabel> labels(model.n_pairs());
    for (std::size_t k = 0; k < labels.size(); ++k)
      labels[k] = BoundaryLabel(bp.assignment[d.label_var(static_cast<int>(k))]);
    it.decoded_energy = model.total_energy(planes, labels);
    it.bound = bp.bound;
    it.sweeps = bp.sweeps;
    it.bound_trace = bp.bound_trace;
    sol.bound = bp.bound;
    if (it.decoded_energy <= sol.energy) {
      sol.planes = std::move(planes);
      sol.labels = std::move(labels);
      sol.energy = it.decoded_energy;
      it.adopted = true;
    }
    it.incumbent_energy = sol.energy;
    sol.energy_trace.push_back(sol.energy);
    sol.iterations.push_back(std::move(it));
  }
  return sol;
}

void write_trace(std::ostream& out, const Solution& sol, const PcbpConfig& cfg) {
  out << "# pcbp particles=" << cfg.n_particles << " outer_iters=" << cfg.n_outer_iters
      << " sigma0=" << format_double(cfg.sigma_alpha0) << ',' << format_double(cfg.sigma_beta0) << ','
      << format_double(cfg.sigma_gamma0) << " decay=" << format_double(cfg.decay)
      << " bp_max_sweeps=" << cfg.bp_max_sweeps << " bp_tolerance=" << format_double(cfg.bp_tolerance)
      << " seed=" << cfg.seed << '\n';
  out << "init energy=" << format_double(sol.energy_trace.front()) << '\n';
  for (const OuterIteration& it : sol.iterations) {
    for (std::size_t s = 0; s < it.bound_trace.size(); ++s)
      out << "sweep t=" << it.t << " k=" << s + 1 << " bound=" << format_double(it.bound_trace[s]) << '\n';
    out << "iter t=" << it.t << " sigma=" << format_double(it.sigma.alpha) << ',' << format_double(it.sigma.beta)
        << ',' << format_double(it.sigma.gamma) << " decoded=" << format_double(it.decoded_energy)
        << " incumbent=" << format_double(it.incumbent_energy) << " adopted=" << (it.adopted ? 1 : 0)
        << " bound=" << format_double(it.bound) << " sweeps=" << it.sweeps << '\n';
  }
}

}  // namespace cmrf
