#include "finfocal/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace finfocal {

namespace {

int gcd_int(int a, int b) { return b == 0 ? a : gcd_int(b, a % b); }

}  // namespace

GridGraphOracle::GridGraphOracle(const MetricModel& metric,
                                 const GridOracleSettings& settings)
    : metric_(&metric), settings_(settings), res_(settings.resolution) {
  if (metric.dim() != 2) throw ConfigError("grid oracle is 2D only");
  hx_ = (settings_.box_hi[0] - settings_.box_lo[0]) / (res_ - 1);
  hy_ = (settings_.box_hi[1] - settings_.box_lo[1]) / (res_ - 1);
  const int Rt = settings_.stencil_radius;
  for (int dx = -Rt; dx <= Rt; ++dx)
    for (int dy = -Rt; dy <= Rt; ++dy) {
      if (dx == 0 && dy == 0) continue;
      if (gcd_int(std::abs(dx), std::abs(dy)) != 1) continue;
      stencil_.emplace_back(dx, dy);
    }
  dist_.assign(static_cast<size_t>(res_ * res_), kInf);
}

Vec GridGraphOracle::node_pos(int i, int j) const {
  Vec p(2);
  p[0] = settings_.box_lo[0] + i * hx_;
  p[1] = settings_.box_lo[1] + j * hy_;
  return p;
}

bool GridGraphOracle::inside(const Vec& q) const {
  return q[0] >= settings_.box_lo[0] && q[0] <= settings_.box_hi[0] &&
         q[1] >= settings_.box_lo[1] && q[1] <= settings_.box_hi[1];
}

void GridGraphOracle::run(const std::vector<std::pair<Vec, double>>& sources) {
  sources_ = sources;
  std::fill(dist_.begin(), dist_.end(), kInf);
  using QItem = std::pair<double, int>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<QItem>> heap;

  // seed nodes near each source with the exact local leg
  for (const auto& [src, head] : sources) {
    if (!inside(src)) throw OutOfBox("source outside oracle box");
    int ci = static_cast<int>(std::round((src[0] - settings_.box_lo[0]) / hx_));
    int cj = static_cast<int>(std::round((src[1] - settings_.box_lo[1]) / hy_));
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj) {
        int i = ci + di, j = cj + dj;
        if (i < 0 || i >= res_ || j < 0 || j >= res_) continue;
        Vec p = node_pos(i, j);
        Vec leg = p - src;
        double w = head;
        if (leg.norm() > 1e-14) w += metric_->finsler(Vec(0.5 * (p + src)), leg);
        int id = index(i, j);
        if (w < dist_[static_cast<size_t>(id)]) {
          dist_[static_cast<size_t>(id)] = w;
          heap.push({w, id});
        }
      }
  }

  while (!heap.empty()) {
    auto [d, id] = heap.top();
    heap.pop();
    if (d > dist_[static_cast<size_t>(id)] + 1e-15) continue;
    int i = id / res_, j = id % res_;
    Vec p = node_pos(i, j);
    for (const auto& [dx, dy] : stencil_) {
      int ni = i + dx, nj = j + dy;
      if (ni < 0 || ni >= res_ || nj < 0 || nj >= res_) continue;
      Vec step(2);
      step[0] = dx * hx_;
      step[1] = dy * hy_;
      double w = metric_->finsler(Vec(p + 0.5 * step), step);
      int nid = index(ni, nj);
      double nd = d + w;
      if (nd < dist_[static_cast<size_t>(nid)]) {
        dist_[static_cast<size_t>(nid)] = nd;
        heap.push({nd, nid});
      }
    }
  }
}

void GridGraphOracle::run_from_submanifold(const Submanifold& sub, int samples) {
  std::vector<std::pair<Vec, double>> sources;
  if (sub.param_dim() == 0) {
    sources.push_back({sub.embed(Vec(0)), 0.0});
  } else {
    double lo = sub.param_lo()[0], hi = sub.param_hi()[0];
    for (int i = 0; i < samples; ++i) {
      Vec t = Vec::Constant(1, lo + (hi - lo) * i / samples);
      sources.push_back({sub.embed(t), 0.0});
    }
  }
  run(sources);
}

void GridGraphOracle::run_from_point(const Vec& p) { run({{p, 0.0}}); }

double GridGraphOracle::distance(const Vec& q) const {
  if (!inside(q)) throw OutOfBox("query outside oracle box");
  int ci = static_cast<int>(std::round((q[0] - settings_.box_lo[0]) / hx_));
  int cj = static_cast<int>(std::round((q[1] - settings_.box_lo[1]) / hy_));
  double best = kInf;
  for (int di = -3; di <= 3; ++di)
    for (int dj = -3; dj <= 3; ++dj) {
      int i = ci + di, j = cj + dj;
      if (i < 0 || i >= res_ || j < 0 || j >= res_) continue;
      double d = dist_[static_cast<size_t>(index(i, j))];
      if (!std::isfinite(d)) continue;
      Vec p = node_pos(i, j);
      Vec leg = q - p;
      double w = d;
      if (leg.norm() > 1e-14) w += metric_->finsler(Vec(0.5 * (p + q)), leg);
      best = std::min(best, w);
    }
  // a direct short leg from a nearby source beats any node dog-leg
  double r_direct = 6.0 * std::max(hx_, hy_);
  for (const auto& [src, head] : sources_) {
    Vec leg = q - src;
    double len = leg.norm();
    if (len > r_direct) continue;
    double w = head;
    if (len > 1e-14) w += metric_->finsler(Vec(0.5 * (src + q)), leg);
    best = std::min(best, w);
  }
  return best;
}

// ---------------------------------------------------------------------------
// index form
// ---------------------------------------------------------------------------

Mat curvature_operator(const RayFrame& frame, double t, double fd_step) {
  const int n = frame.n();
  double h = fd_step;
  if (t - h < 0.0) h = 0.5 * t;
  if (t + h > frame.horizon()) h = 0.5 * (frame.horizon() - t);
  auto stacked = [&](double tt) {
    Mat P, Q, Pp, Qp;
    frame.fundamental(tt, P, Q, Pp, Qp);
    Mat Y(n, 2 * n);
    Y.leftCols(n) = Pp;
    Y.rightCols(n) = Qp;
    return Y;
  };
  Mat Ypp = (stacked(t + h) - stacked(t - h)) / (2.0 * h);
  Mat P, Q, Pp, Qp;
  frame.fundamental(t, P, Q, Pp, Qp);
  Mat Y(n, 2 * n);
  Y.leftCols(n) = P;
  Y.rightCols(n) = Q;
  // J'' = M J on the full solution space: M = Y'' Y^T (Y Y^T)^{-1}
  Mat M = Ypp * Y.transpose() * (Y * Y.transpose()).inverse();
  return 0.5 * (M + M.transpose());
}

IndexFormMatrix assemble_index_form(const RayFrame& frame, double T, int mesh) {
  const int n = frame.n();
  const int m = frame.basis().tangent_count;
  const int K = mesh;
  const double dt = T / K;
  // unknowns: boundary fields (m, node 0) then interior nodes 1..K-1 x n dirs
  const int dim = m + (K - 1) * n;

  // boundary field directions in frame coordinates: tangent block of the frame
  Mat W0 = Mat::Zero(n, m);
  for (int a = 0; a < m; ++a) W0(1 + a, a) = 1.0;  // frame order: radial, tangents, fiber

  auto node_base = [&](int node) { return m + (node - 1) * n; };

  Mat A = Mat::Zero(dim, dim);

  // precompute M(t) at the two Gauss points of every interval
  const double g1 = 0.5 - 0.5 / std::sqrt(3.0), g2 = 0.5 + 0.5 / std::sqrt(3.0);
  std::vector<Mat> Mg(static_cast<size_t>(2 * K));
  for (int i = 0; i < K; ++i) {
    Mg[static_cast<size_t>(2 * i)] = curvature_operator(frame, (i + g1) * dt);
    Mg[static_cast<size_t>(2 * i + 1)] = curvature_operator(frame, (i + g2) * dt);
  }

  // value/derivative of the two hats covering interval i at a Gauss point
  // phi_left = 1 - s, phi_right = s with s in (0,1); derivatives ±1/dt
  auto add_block = [&](int row0, int col0, const Mat& B) {
    if (row0 < 0 || col0 < 0) return;
    A.block(row0, col0, B.rows(), B.cols()) += B;
  };

  for (int i = 0; i < K; ++i) {
    // contributions in frame-direction blocks between the two covering nodes
    // left node: i (boundary fields if i == 0), right node: i+1 (absent at K)
    for (int gp = 0; gp < 2; ++gp) {
      double s = gp == 0 ? g1 : g2;
      const Mat& M = Mg[static_cast<size_t>(2 * i + gp)];
      double wq = 0.5 * dt;  // Gauss weight
      double phiL = 1.0 - s, phiR = s;
      double dphiL = -1.0 / dt, dphiR = 1.0 / dt;

      // pair (left,left), (left,right), (right,left), (right,right)
      struct Node {
        int base;     // column base, -1 if fixed/absent
        const Mat* dirs;  // directions matrix (n x cols)
        double phi, dphi;
      };
      Mat In = Mat::Identity(n, n);
      Node L{-1, &In, phiL, dphiL}, Rn{-1, &In, phiR, dphiR};
      if (i == 0) {
        L.base = 0;
        L.dirs = &W0;
      } else {
        L.base = node_base(i);
      }
      if (i + 1 <= K - 1) Rn.base = node_base(i + 1);

      for (const Node& a : {L, Rn}) {
        if (a.base < 0) continue;
        for (const Node& b : {L, Rn}) {
          if (b.base < 0) continue;
          Mat blk = (a.dphi * b.dphi * wq) * (a.dirs->transpose() * *b.dirs) +
                    (a.phi * b.phi * wq) * (a.dirs->transpose() * M * *b.dirs);
          add_block(a.base, b.base, blk);
        }
      }
    }
  }

  // boundary term  + g(A_v X(0), Y(0)) on the boundary fields; with the frame
  // g-orthonormal this is the tangential block of B0 restricted to tangents.
  {
    const Mat& B0 = frame.B0();
    Mat Abd(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) Abd(a, b) = B0(1 + a, 1 + b);
    A.block(0, 0, m, m) += 0.5 * (Abd + Abd.transpose());
  }

  IndexFormMatrix out;
  out.matrix = 0.5 * (A + A.transpose());
  out.mesh = K;
  out.boundary_fields = m;
  return out;
}

int index_form_negative_count(const RayFrame& frame, double T, int mesh,
                              double zero_band) {
  IndexFormMatrix ifm = assemble_index_form(frame, T, mesh);
  Eigen::LDLT<Mat> ldlt(ifm.matrix);
  Vec Dv = ldlt.vectorD();
  double scale = Dv.cwiseAbs().maxCoeff();
  int neg = 0;
  for (int i = 0; i < Dv.size(); ++i) {
    if (std::abs(Dv[i]) < zero_band * scale)
      throw MeshTooCoarse("index form has an eigenvalue inside the zero band");
    if (Dv[i] < 0.0) ++neg;
  }
  return neg;
}

}  // namespace finfocal
