#pragma once

// Exact dense transportation solver: successive shortest augmenting paths
// with node potentials (Dijkstra on reduced costs). Every augmentation
// saturates a source or a sink, so at most ns + nt rounds run; costs must be
// nonnegative, supplies/demands are arbitrary nonnegative reals with equal
// totals.

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

namespace upsilon {

struct TransportEntry {
  int from = 0;
  int to = 0;
  double mass = 0.0;
};

struct TransportSolution {
  double cost = 0.0;
  std::vector<TransportEntry> plan;
};

inline TransportSolution solve_transport(const Eigen::VectorXd& supply,
                                         const Eigen::VectorXd& demand,
                                         const Eigen::MatrixXd& cost,
                                         double mass_tol = 1e-10) {
  const int ns = static_cast<int>(supply.size());
  const int nt = static_cast<int>(demand.size());
  if (cost.rows() != ns || cost.cols() != nt)
    throw std::invalid_argument("transport: cost matrix shape mismatch");
  if (supply.minCoeff() < -1e-15 || demand.minCoeff() < -1e-15)
    throw std::invalid_argument("transport: negative mass");
  if (ns > 0 && nt > 0 && cost.minCoeff() < 0.0)
    throw std::invalid_argument("transport: negative costs unsupported");
  const double total_s = supply.sum();
  const double total_d = demand.sum();
  if (std::abs(total_s - total_d) > mass_tol)
    throw std::invalid_argument("transport: unbalanced masses");

  std::vector<double> a(supply.data(), supply.data() + ns);
  std::vector<double> b(demand.data(), demand.data() + nt);
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(ns, nt);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pot_u(ns, 0.0), pot_v(nt, 0.0);
  // initial potentials keep reduced costs nonnegative
  for (int j = 0; j < nt; ++j) {
    double best = inf;
    for (int i = 0; i < ns; ++i) best = std::min(best, cost(i, j));
    pot_v[j] = best;
  }

  const double eps = 1e-15 * std::max(1.0, total_s);

  while (true) {
    double remaining = 0.0;
    for (double x : a) remaining += x;
    if (remaining <= mass_tol + 1e-15) break;

    // Dijkstra over the bipartite residual graph, multi-source from all
    // sources with remaining supply. Node ids: sources [0, ns), sinks [ns, ns+nt).
    const int nn = ns + nt;
    std::vector<double> dist(nn, inf);
    std::vector<int> parent(nn, -1);
    std::vector<char> done(nn, 0);
    for (int i = 0; i < ns; ++i)
      if (a[i] > eps) dist[i] = 0.0;

    int reached_sink = -1;
    while (true) {
      int cur = -1;
      double best = inf;
      for (int k = 0; k < nn; ++k)
        if (!done[k] && dist[k] < best) {
          best = dist[k];
          cur = k;
        }
      if (cur < 0) break;
      done[cur] = 1;
      if (cur >= ns && b[cur - ns] > eps) {
        reached_sink = cur;
        break;
      }
      if (cur < ns) {
        const int i = cur;
        for (int j = 0; j < nt; ++j) {
          // clamp: reduced costs are >= 0 up to rounding
          const double rc = std::max(0.0, cost(i, j) - pot_u[i] - pot_v[j]);
          if (dist[i] + rc < dist[ns + j] - 1e-18) {
            dist[ns + j] = dist[i] + rc;
            parent[ns + j] = i;
          }
        }
      } else {
        const int j = cur - ns;
        for (int i = 0; i < ns; ++i) {
          if (flow(i, j) <= eps) continue;  // reverse arc needs positive flow
          const double rc = std::max(0.0, -(cost(i, j) - pot_u[i] - pot_v[j]));
          if (dist[ns + j] + rc < dist[i] - 1e-18) {
            dist[i] = dist[ns + j] + rc;
            parent[i] = ns + j;
          }
        }
      }
    }
    if (reached_sink < 0)
      throw std::runtime_error("transport: no augmenting path (mass imbalance beyond tolerance)");

    // potential update keeps all reduced costs nonnegative and makes the
    // shortest-path arcs tight; distances are capped at the sink distance
    const double d_cap = dist[reached_sink];
    for (int i = 0; i < ns; ++i) pot_u[i] -= std::min(dist[i], d_cap);
    for (int j = 0; j < nt; ++j) pot_v[j] += std::min(dist[ns + j], d_cap);

    // bottleneck along the path: start supply, end demand, reverse flows
    double push = b[reached_sink - ns];
    int start = reached_sink;
    for (int node = reached_sink; parent[node] >= 0; node = parent[node]) {
      const int prev = parent[node];
      if (node < ns) push = std::min(push, flow(node, prev - ns));  // reverse arc
      start = prev;
    }
    push = std::min(push, a[start]);

    for (int node = reached_sink; parent[node] >= 0; node = parent[node]) {
      const int prev = parent[node];
      if (node >= ns)
        flow(prev, node - ns) += push;
      else
        flow(node, prev - ns) -= push;
    }
    a[start] -= push;
    b[reached_sink - ns] -= push;
  }

  TransportSolution sol;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nt; ++j)
      if (flow(i, j) > eps) {
        sol.plan.push_back({i, j, flow(i, j)});
        sol.cost += flow(i, j) * cost(i, j);
      }
  return sol;
}

}  // namespace upsilon
