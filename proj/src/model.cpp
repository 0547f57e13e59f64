#include "cmrf/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmrf {

const char* to_string(BoundaryLabel o) {
  switch (o) {
    case BoundaryLabel::Coplanar: return "co";
    case BoundaryLabel::Hinge: return "hi";
    case BoundaryLabel::LeftOccludes: return "lo";
    case BoundaryLabel::RightOccludes: return "ro";
  }
  return "?";
}

void check(const ModelParams& p) {
  const double values[] = {p.K,      p.lambda_occ, p.lambda_hinge, p.lambda_imp, p.lambda_col, p.kappa,
                           p.w.seg,  p.w.bdy1,     p.w.bdy2,       p.w.jct3,     p.w.crs4,     p.w.col};
  for (double x : values)
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("model params must be finite and non-negative");
  if (!(p.K > 0.0)) throw std::invalid_argument("model params: K must be positive");
  if (!(p.lambda_occ > p.lambda_hinge && p.lambda_hinge > 0.0))
    throw std::invalid_argument("model params: need lambda_occ > lambda_hinge > 0");
}

double truncated_quadratic(double d_obs, double d_hat, double K) {
  const double r = std::min(std::abs(d_obs - d_hat), K);
  return r * r;
}

double phi_seg(const Plane& y, const Segment& s, const DisparityImage& obs, double K) {
  double sum = 0.0;
  for (const Pixel& p : s.pixels)
    if (obs.valid(p.u, p.v)) sum += truncated_quadratic(obs.at(p.u, p.v), plane_disparity(y, p, s.cx, s.cy), K);
  return sum;
}

double phi_bdy1(BoundaryLabel o, const Plane& yi, const Segment& si, const Plane& yj, const Segment& sj,
                std::span<const Pixel> band, const DisparityImage& obs, double K) {
  double fi = 0.0, fj = 0.0;
  for (const Pixel& p : band) {
    if (!obs.valid(p.u, p.v)) continue;
    fi += truncated_quadratic(obs.at(p.u, p.v), plane_disparity(yi, p, si.cx, si.cy), K);
    fj += truncated_quadratic(obs.at(p.u, p.v), plane_disparity(yj, p, sj.cx, sj.cy), K);
  }
  return StereoModel::combine_bdy1(o, fi, fj);
}

double phi_occ(const Plane& front, const Segment& sf, const Plane& back, const Segment& sb,
               std::span<const Pixel> band, double lambda_imp) {
  for (const Pixel& p : band)
    if (plane_disparity(front, p, sf.cx, sf.cy) - plane_disparity(back, p, sb.cx, sb.cy) < -kOcclusionSlack)
      return lambda_imp;
  return 0.0;
}

double phi_neg(const Plane& y, const Segment& s, std::span<const Pixel> band, double lambda_imp) {
  for (const Pixel& p : band)
    if (plane_disparity(y, p, s.cx, s.cy) < 0.0) return lambda_imp;
  return 0.0;
}

namespace {

template <typename Pixels>
double mean_squared_gap(const Plane& yi, const Segment& si, const Plane& yj, const Segment& sj, const Pixels& pixels,
                        std::size_t count) {
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (const Pixel& p : pixels) {
    const double d = plane_disparity(yi, p, si.cx, si.cy) - plane_disparity(yj, p, sj.cx, sj.cy);
    sum += d * d;
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double phi_bdy2(BoundaryLabel o, const Plane& yi, const Segment& si, const Plane& yj, const Segment& sj,
                std::span<const Pixel> band, const ModelParams& params) {
  const double neg = phi_neg(yi, si, band, params.lambda_imp) + phi_neg(yj, sj, band, params.lambda_imp);
  switch (o) {
    case BoundaryLabel::LeftOccludes:
      return params.lambda_occ + neg + phi_occ(yi, si, yj, sj, band, params.lambda_imp);
    case BoundaryLabel::RightOccludes:
      return params.lambda_occ + neg + phi_occ(yj, sj, yi, si, band, params.lambda_imp);
    case BoundaryLabel::Hinge:
      return params.lambda_hinge + neg + mean_squared_gap(yi, si, yj, sj, band, band.size());
    case BoundaryLabel::Coplanar: {
      double sum = mean_squared_gap(yi, si, yj, sj, si.pixels, 1) + mean_squared_gap(yi, si, yj, sj, sj.pixels, 1);
      return neg + sum / static_cast<double>(si.pixels.size() + sj.pixels.size());
    }
  }
  throw std::invalid_argument("phi_bdy2: bad label");
}

double phi_color(BoundaryLabel o, const ColorHistogram& hi, const ColorHistogram& hj, const ModelParams& params) {
  if (o != BoundaryLabel::Coplanar) return params.lambda_col;
  return std::min(params.kappa * chi_squared(hi, hj), params.lambda_col);
}

Moments Moments::of(std::span<const Pixel> pixels) {
  Moments m;
  m.n = static_cast<double>(pixels.size());
  if (pixels.empty()) return m;
  for (const Pixel& p : pixels) {
    m.mu += p.u;
    m.mv += p.v;
  }
  m.mu /= m.n;
  m.mv /= m.n;
  for (const Pixel& p : pixels) {
    const double du = p.u - m.mu, dv = p.v - m.mv;
    m.suu += du * du;
    m.svv += dv * dv;
    m.suv += du * dv;
  }
  m.suu /= m.n;
  m.svv /= m.n;
  m.suv /= m.n;
  return m;
}

Moments Moments::pooled(const Moments& a, const Moments& b) {
  Moments m;
  m.n = a.n + b.n;
  if (m.n == 0.0) return m;
  m.mu = (a.n * a.mu + b.n * b.mu) / m.n;
  m.mv = (a.n * a.mv + b.n * b.mv) / m.n;
  auto part = [&](const Moments& x, double& uu, double& vv, double& uv) {
    const double du = x.mu - m.mu, dv = x.mv - m.mv;
    uu += x.n * (x.suu + du * du);
    vv += x.n * (x.svv + dv * dv);
    uv += x.n * (x.suv + du * dv);
  };
  part(a, m.suu, m.svv, m.suv);
  part(b, m.suu, m.svv, m.suv);
  m.suu /= m.n;
  m.svv /= m.n;
  m.suv /= m.n;
  return m;
}

std::vector<Pixel> convex_hull(std::span<const Pixel> points) {
  std::vector<Pixel> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Pixel& a, const Pixel& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Pixel& o, const Pixel& a, const Pixel& b) {
    return static_cast<long long>(a.u - o.u) * (b.v - o.v) - static_cast<long long>(a.v - o.v) * (b.u - o.u);
  };
  std::vector<Pixel> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Pixel& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

StereoModel::StereoModel(Segmentation segmentation, DisparityImage observations, ModelParams params)
    : seg_(std::move(segmentation)), obs_(std::move(observations)), params_(params) {
  check(params_);
  if (obs_.width() != seg_.width || obs_.height() != seg_.height)
    throw std::invalid_argument("StereoModel: observation and segmentation sizes differ");
  seg_obs_.resize(seg_.size());
  std::vector<Moments> seg_moments(seg_.size());
  for (const Segment& s : seg_.segments) {
    for (const Pixel& p : s.pixels)
      if (obs_.valid(p.u, p.v)) seg_obs_[s.id].push_back({double(p.u), double(p.v), double(obs_.at(p.u, p.v))});
    seg_moments[s.id] = Moments::of(s.pixels);
  }
  const std::size_t np = seg_.adjacency.size();
  band_obs_.resize(np);
  hull_.resize(np);
  band_moments_.resize(np);
  union_moments_.resize(np);
  chi2_.resize(np);
  for (std::size_t k = 0; k < np; ++k) {
    const NeighborPair& pair = seg_.adjacency[k];
    for (const Pixel& p : pair.band)
      if (obs_.valid(p.u, p.v)) band_obs_[k].push_back({double(p.u), double(p.v), double(obs_.at(p.u, p.v))});
    hull_[k] = convex_hull(pair.band);
    band_moments_[k] = Moments::of(pair.band);
    union_moments_[k] = Moments::pooled(seg_moments[pair.i], seg_moments[pair.j]);
    chi2_[k] = chi_squared(seg_.segments[pair.i].histogram, seg_.segments[pair.j].histogram);
  }
}

double StereoModel::phi_seg(int i, const Plane& y) const {
  const Segment& s = seg_.segments[i];
  double sum = 0.0;
  for (const Observation& o : seg_obs_[i])
    sum += truncated_quadratic(o.d, plane_disparity(y, o.u, o.v, s.cx, s.cy), params_.K);
  return sum;
}

double StereoModel::band_fit(int pair, int side, const Plane& y) const {
  const NeighborPair& p = seg_.adjacency[pair];
  const Segment& s = seg_.segments[side == 0 ? p.i : p.j];
  double sum = 0.0;
  for (const Observation& o : band_obs_[pair])
    sum += truncated_quadratic(o.d, plane_disparity(y, o.u, o.v, s.cx, s.cy), params_.K);
  return sum;
}

double StereoModel::combine_bdy1(BoundaryLabel o, double fit_i, double fit_j) {
  switch (o) {
    case BoundaryLabel::LeftOccludes: return fit_i;
    case BoundaryLabel::RightOccludes: return fit_j;
    case BoundaryLabel::Hinge:
    case BoundaryLabel::Coplanar: return 0.5 * (fit_i + fit_j);
  }
  throw std::invalid_argument("phi_bdy1: bad label");
}

double StereoModel::phi_bdy1(int pair, BoundaryLabel o, const Plane& yi, const Plane& yj) const {
  return combine_bdy1(o, band_fit(pair, 0, yi), band_fit(pair, 1, yj));
}

double StereoModel::phi_neg(int pair, int side, const Plane& y) const {
  const NeighborPair& p = seg_.adjacency[pair];
  const Segment& s = seg_.segments[side == 0 ? p.i : p.j];
  for (const Pixel& v : hull_[pair])
    if (plane_disparity(y, v, s.cx, s.cy) < 0.0) return params_.lambda_imp;
  return 0.0;
}

double StereoModel::phi_occ(int pair, int front_side, const Plane& yi, const Plane& yj) const {
  const NeighborPair& p = seg_.adjacency[pair];
  const Segment& si = seg_.segments[p.i];
  const Segment& sj = seg_.segments[p.j];
  for (const Pixel& v : hull_[pair]) {
    const double gap = plane_disparity(yi, v, si.cx, si.cy) - plane_disparity(yj, v, sj.cx, sj.cy);
    if ((front_side == 0 ? gap : -gap) < -kOcclusionSlack) return params_.lambda_imp;
  }
  return 0.0;
}

namespace {

double mean_squared_affine(const Moments& m, const Plane& yi, const Segment& si, const Plane& yj,
                           const Segment& sj) {
  if (m.n == 0.0) return 0.0;
  const double a = yi.alpha - yj.alpha, b = yi.beta - yj.beta;
  const double c = plane_disparity(yi, m.mu, m.mv, si.cx, si.cy) - plane_disparity(yj, m.mu, m.mv, sj.cx, sj.cy);
  return std::max(0.0, a * a * m.suu + 2.0 * a * b * m.suv + b * b * m.svv) + c * c;
}

}  // namespace

double StereoModel::hinge_mean(int pair, const Plane& yi, const Plane& yj) const {
  const NeighborPair& p = seg_.adjacency[pair];
  return mean_squared_affine(band_moments_[pair], yi, seg_.segments[p.i], yj, seg_.segments[p.j]);
}

double StereoModel::coplanar_mean(int pair, const Plane& yi, const Plane& yj) const {
  const NeighborPair& p = seg_.adjacency[pair];
  return mean_squared_affine(union_moments_[pair], yi, seg_.segments[p.i], yj, seg_.segments[p.j]);
}

double StereoModel::combine_bdy2(BoundaryLabel o, double neg_i, double neg_j, double occ_i, double occ_j,
                                 double hinge, double coplanar) const {
  switch (o) {
    case BoundaryLabel::LeftOccludes: return params_.lambda_occ + neg_i + neg_j + occ_i;
    case BoundaryLabel::RightOccludes: return params_.lambda_occ + neg_i + neg_j + occ_j;
    case BoundaryLabel::Hinge: return params_.lambda_hinge + neg_i + neg_j + hinge;
    case BoundaryLabel::Coplanar: return neg_i + neg_j + coplanar;
  }
  throw std::invalid_argument("phi_bdy2: bad label");
}

double StereoModel::phi_bdy2(int pair, BoundaryLabel o, const Plane& yi, const Plane& yj) const {
  const double neg_i = phi_neg(pair, 0, yi), neg_j = phi_neg(pair, 1, yj);
  switch (o) {
    case BoundaryLabel::LeftOccludes: return combine_bdy2(o, neg_i, neg_j, phi_occ(pair, 0, yi, yj), 0.0, 0.0, 0.0);
    case BoundaryLabel::RightOccludes: return combine_bdy2(o, neg_i, neg_j, 0.0, phi_occ(pair, 1, yi, yj), 0.0, 0.0);
    case BoundaryLabel::Hinge: return combine_bdy2(o, neg_i, neg_j, 0.0, 0.0, hinge_mean(pair, yi, yj), 0.0);
    case BoundaryLabel::Coplanar: return combine_bdy2(o, neg_i, neg_j, 0.0, 0.0, 0.0, coplanar_mean(pair, yi, yj));
  }
  throw std::invalid_argument("phi_bdy2: bad label");
}

double StereoModel::phi_color(int pair, BoundaryLabel o) const {
  if (o != BoundaryLabel::Coplanar) return params_.lambda_col;
  return std::min(params_.kappa * chi2_[pair], params_.lambda_col);
}

double StereoModel::phi_junction3(int k, std::span<const BoundaryLabel> labels) const {
  const Junction3& j = seg_.junctions3[k];
  std::array<DirectedLabel, 3> d{};
  for (int m = 0; m < 3; ++m) d[m] = directed(labels[j.pairs[m]], seg_.adjacency[j.pairs[m]].i == j.segments[m]);
  return cmrf::phi_junction3(d, params_.lambda_imp);
}

double StereoModel::phi_junction4(int k, std::span<const BoundaryLabel> labels) const {
  const Junction4& j = seg_.junctions4[k];
  std::array<DirectedLabel, 4> d{};
  for (int m = 0; m < 4; ++m) d[m] = directed(labels[j.pairs[m]], seg_.adjacency[j.pairs[m]].i == j.cycle[m]);
  return cmrf::phi_junction4(d, j.orientation, params_.lambda_imp);
}

double StereoModel::total_energy(std::span<const Plane> planes, std::span<const BoundaryLabel> labels) const {
  if (planes.size() != n_segments() || labels.size() != n_pairs())
    throw std::invalid_argument("total_energy: incomplete assignment");
  const PotentialWeights& w = params_.w;
  double seg = 0.0;
  for (std::size_t i = 0; i < planes.size(); ++i) seg += phi_seg(static_cast<int>(i), planes[i]);
  double pairs = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int p = static_cast<int>(k);
    const Plane& yi = planes[seg_.adjacency[k].i];
    const Plane& yj = planes[seg_.adjacency[k].j];
    pairs += w.bdy1 * phi_bdy1(p, labels[k], yi, yj) + w.bdy2 * phi_bdy2(p, labels[k], yi, yj) +
             w.col * phi_color(p, labels[k]);
  }
  double j3 = 0.0;
  for (std::size_t k = 0; k < seg_.junctions3.size(); ++k) j3 += phi_junction3(static_cast<int>(k), labels);
  double j4 = 0.0;
  for (std::size_t k = 0; k < seg_.junctions4.size(); ++k) j4 += phi_junction4(static_cast<int>(k), labels);
  return w.seg * seg + pairs + w.jct3 * j3 + w.crs4 * j4;
}

}  // namespace cmrf
