#include "skytrack/association.hpp"

#include <algorithm>
#include <map>

namespace skytrack {

double mahalanobis(const Vector& nu, const Matrix& S) {
  if (S.rows() != nu.size() || S.cols() != nu.size())
    throw InvalidArgument("innovation and covariance dimensions differ");
  if (nu.size() == 0) return 0.0;
  const Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is singular");
  const Vector white = llt.matrixL().solve(nu);
  return white.norm();
}

// ---------------------------------------------------------------------------

const TransformResult* HypothesisTable::moments(int track, int detection) const {
  const int idx = moment_index.at(static_cast<size_t>(track)).at(static_cast<size_t>(detection));
  return idx < 0 ? nullptr : &predicted[static_cast<size_t>(idx)];
}

std::vector<Hypothesis> HypothesisTable::hypotheses() const {
  std::vector<Hypothesis> out;
  for (Eigen::Index t = 0; t < tracks(); ++t) {
    for (Eigen::Index d = 0; d < detections(); ++d) {
      const double dist = distance(t, d);
      out.push_back({static_cast<int>(t), static_cast<int>(d), dist, dist != kInfeasible});
    }
    out.push_back({static_cast<int>(t), kMissed, gate, true});
  }
  return out;
}

HypothesisTable hypothesize(std::span<const GaussianState> tracks,
                            std::span<const Detection> detections, MomentTransform& transform,
                            double gate) {
  if (!(gate > 0.0)) throw InvalidArgument("gate must be positive");
  for (const auto& det : detections) {
    if (!det.model) throw InvalidArgument("detection has no measurement model");
    if (!detections.empty() && det.timestamp != detections.front().timestamp)
      throw InvalidArgument("detections in one scan must share a timestamp");
  }

  HypothesisTable table;
  table.gate = gate;
  const auto n_tracks = static_cast<Eigen::Index>(tracks.size());
  const auto n_dets = static_cast<Eigen::Index>(detections.size());
  table.distance = Matrix::Constant(n_tracks, n_dets, kInfeasible);
  table.moment_index.assign(tracks.size(), std::vector<int>(detections.size(), -1));

  for (size_t t = 0; t < tracks.size(); ++t) {
    std::map<const MeasurementModel*, int> cache;
    for (size_t d = 0; d < detections.size(); ++d) {
      const Detection& det = detections[d];
      const MeasurementModel* key = det.model.get();
      auto it = cache.find(key);
      if (it == cache.end()) {
        int idx = -1;
        try {
          table.predicted.push_back(transform.apply(*det.model, tracks[t].density));
          idx = static_cast<int>(table.predicted.size()) - 1;
        } catch (const std::exception&) {
          idx = -1;
        }
        it = cache.emplace(key, idx).first;
      }
      const int idx = it->second;
      table.moment_index[t][d] = idx;
      if (idx < 0) continue;

      const TransformResult& pred = table.predicted[static_cast<size_t>(idx)];
      try {
        const double dist = mahalanobis(det.model->residual(det.z, pred.z_mean), pred.cov_zz);
        if (dist <= gate)
          table.distance(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = dist;
      } catch (const std::exception&) {
        // stays infeasible
      }
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

namespace {

struct HungarianSolution {
  std::vector<int> row_to_col;
  Vector row_potential;
  Vector col_potential;
  double total = 0.0;
};

// Shortest augmenting path Hungarian method, rows <= cols, all entries finite.
HungarianSolution hungarian(const Matrix& a) {
  const auto n = static_cast<int>(a.rows());
  const auto m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(m) + 1, 0), way(static_cast<size_t>(m) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<size_t>(m) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      const int i0 = p[static_cast<size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  HungarianSolution sol;
  sol.row_to_col.assign(static_cast<size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<size_t>(j)] != 0) sol.row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
  sol.row_potential.resize(n);
  sol.col_potential.resize(m);
  for (int i = 0; i < n; ++i) sol.row_potential[i] = u[static_cast<size_t>(i) + 1];
  for (int j = 0; j < m; ++j) sol.col_potential[j] = v[static_cast<size_t>(j) + 1];
  for (int i = 0; i < n; ++i) sol.total += a(i, sol.row_to_col[static_cast<size_t>(i)]);
  return sol;
}

// Optimal cost with rows [0, fixed_rows) pinned to `pinned` columns.
double pinned_optimum(const Matrix& a, const std::vector<int>& pinned, size_t fixed_rows,
                      std::vector<int>& rest) {
  const auto n = a.rows();
  const auto m = a.cols();
  std::vector<char> taken(static_cast<size_t>(m), 0);
  double fixed = 0.0;
  for (size_t i = 0; i < fixed_rows; ++i) {
    taken[static_cast<size_t>(pinned[i])] = 1;
    fixed += a(static_cast<Eigen::Index>(i), pinned[i]);
  }
  std::vector<int> free_cols;
  for (Eigen::Index j = 0; j < m; ++j)
    if (!taken[static_cast<size_t>(j)]) free_cols.push_back(static_cast<int>(j));
  const auto sub_rows = n - static_cast<Eigen::Index>(fixed_rows);
  rest.clear();
  if (sub_rows == 0) return fixed;
  Matrix sub(sub_rows, static_cast<Eigen::Index>(free_cols.size()));
  for (Eigen::Index i = 0; i < sub_rows; ++i)
    for (size_t j = 0; j < free_cols.size(); ++j)
      sub(i, static_cast<Eigen::Index>(j)) = a(static_cast<Eigen::Index>(fixed_rows) + i, free_cols[j]);
  const HungarianSolution s = hungarian(sub);
  for (int c : s.row_to_col) rest.push_back(free_cols[static_cast<size_t>(c)]);
  return fixed + s.total;
}

}  // namespace

Assignment2D assign_2d(const Matrix& cost) {
  const Eigen::Index rows = cost.rows();
  const Eigen::Index cols = cost.cols();
  Assignment2D out;
  out.row_to_col.assign(static_cast<size_t>(rows), -1);
  if (rows == 0 || cols == 0) return out;

  if (rows > cols) {
    const Assignment2D t = assign_2d(cost.transpose());
    for (size_t c = 0; c < t.row_to_col.size(); ++c)
      if (t.row_to_col[c] >= 0) out.row_to_col[static_cast<size_t>(t.row_to_col[c])] = static_cast<int>(c);
    out.total_cost = t.total_cost;
    return out;
  }

  double max_abs = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double c = cost(i, j);
      if (std::isnan(c) || c == -kInfeasible) throw InvalidArgument("cost matrix has NaN or -inf");
      if (c != kInfeasible) max_abs = std::max(max_abs, std::abs(c));
    }
  const double big = (max_abs + 1.0) * 4.0 * static_cast<double>(rows + 1);
  const Matrix a = cost.unaryExpr([big](double c) { return c == kInfeasible ? big : c; });

  const HungarianSolution sol = hungarian(a);
  std::vector<int> best = sol.row_to_col;
  const double optimum = sol.total;
  const double tol = 1e-9 * (1.0 + std::abs(optimum) + max_abs);

  // Lexicographic tie-break. Only edges tight under the optimal duals can
  // appear in any optimal assignment.
  std::vector<int> rest;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto ui = static_cast<size_t>(i);
    for (int c = 0; c < best[ui]; ++c) {
      const double reduced = a(i, c) - sol.row_potential[i] - sol.col_potential[c];
      if (reduced > tol) continue;
      bool used_earlier = false;
      for (size_t k = 0; k < ui; ++k) used_earlier |= best[k] == c;
      if (used_earlier) continue;
      std::vector<int> pinned(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(ui));
      pinned.push_back(c);
      const double total = pinned_optimum(a, pinned, ui + 1, rest);
      if (std::abs(total - optimum) <= tol) {
        best = pinned;
        best.insert(best.end(), rest.begin(), rest.end());
        break;
      }
    }
  }

  for (Eigen::Index i = 0; i < rows; ++i) {
    const int c = best[static_cast<size_t>(i)];
    if (cost(i, c) == kInfeasible) continue;
    out.row_to_col[static_cast<size_t>(i)] = c;
    out.total_cost += cost(i, c);
  }
  return out;
}

Assignment associate(const HypothesisTable& table) {
  const Eigen::Index n_tracks = table.tracks();
  const Eigen::Index n_dets = table.detections();
  Matrix cost = Matrix::Constant(n_tracks, n_dets + n_tracks, kInfeasible);
  cost.leftCols(n_dets) = table.distance;
  for (Eigen::Index t = 0; t < n_tracks; ++t) cost(t, n_dets + t) = table.gate;

  const Assignment2D solved = assign_2d(cost);
  Assignment out;
  out.total_cost = solved.total_cost;
  std::vector<char> used(static_cast<size_t>(n_dets), 0);
  for (Eigen::Index t = 0; t < n_tracks; ++t) {
    const int col = solved.row_to_col[static_cast<size_t>(t)];
    if (col >= 0 && col < n_dets) {
      out.pairs.emplace_back(static_cast<int>(t), col);
      used[static_cast<size_t>(col)] = 1;
    } else {
      out.pairs.emplace_back(static_cast<int>(t), kMissed);
    }
  }
  for (Eigen::Index d = 0; d < n_dets; ++d)
    if (!used[static_cast<size_t>(d)]) out.unassigned_detections.push_back(static_cast<int>(d));
  return out;
}

StaleSplit delete_stale(std::vector<Track> tracks, double now, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("deletion threshold must be positive");
  StaleSplit out;
  for (auto& track : tracks) {
    if (now - track.last_update_time > threshold) {
      track.status = TrackStatus::kDeleted;
      out.deleted.push_back(std::move(track));
    } else {
      out.surviving.push_back(std::move(track));
    }
  }
  return out;
}

}  // namespace skytrack
