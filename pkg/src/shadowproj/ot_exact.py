"""Exact discrete optimal transport.

Finite ``p`` is solved with the transportation simplex (northwest-corner start,
most-negative reduced cost with lowest-index ties, Bland's rule after a run of
degenerate pivots), so the optimal plan it returns is a deterministic function
of the inputs. ``p = inf`` is solved by a threshold
search over the distinct costs with a max-flow feasibility test.
"""

import csv
import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, SolverError
from .measures import DiscreteMeasure, MetricSpec, pairwise_cost

PLAN_TOL = 1e-9
CERT_TOL = 1e-9
_FLOW_CLEAN = 1e-15


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Coupling table between ``source`` (rows) and ``target`` (columns)."""

    source: DiscreteMeasure
    target: DiscreteMeasure
    table: np.ndarray

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.shape != (self.source.n_atoms, self.target.n_atoms):
            raise InputError(f"plan shape {t.shape} does not match measures")
        if np.any(t < 0):
            raise InputError("plan entries must be nonnegative", field="table")
        if np.max(np.abs(t.sum(axis=1) - self.source.weights)) > PLAN_TOL:
            raise InputError("plan row sums differ from source weights", field="table")
        if np.max(np.abs(t.sum(axis=0) - self.target.weights)) > PLAN_TOL:
            raise InputError("plan column sums differ from target weights", field="table")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def T(self):
        return TransportPlan(self.target, self.source, self.table.T)

    def support(self):
        return list(zip(*np.nonzero(self.table > 0)))

    def nnz(self):
        return int(np.count_nonzero(self.table > 0))

    def is_deterministic(self):
        """Every column (target atom) receives mass from a single source atom."""
        return bool(np.all(np.count_nonzero(self.table > 0, axis=0) == 1))


@dataclass(frozen=True, eq=False)
class OTResult:
    plan: TransportPlan
    value: float
    iterations: int
    u: np.ndarray = None
    v: np.ndarray = None
    cost: np.ndarray = None
    degenerate_p1: bool = False

    @property
    def duality_gap(self):
        if self.u is None:
            return 0.0
        primal = float(np.sum(self.plan.table * self.cost))
        dual = float(self.plan.source.weights @ self.u + self.plan.target.weights @ self.v)
        return abs(primal - dual)


def _check_pair(source, target, spec):
    if source.dim != target.dim:
        raise InputError(f"dimension mismatch {source.dim} vs {target.dim}")
    if spec.dim != source.dim:
        raise InputError(f"spec dimension {spec.dim} does not match measures ({source.dim})")


# -- transportation simplex ------------------------------------------------


def _northwest_corner(a, b):
    n, m = len(a), len(b)
    a = a.copy()
    b = b.copy()
    flow = np.zeros((n, m))
    basis = []
    i = j = 0
    while True:
        x = min(a[i], b[j])
        flow[i, j] = x
        basis.append((i, j))
        a[i] -= x
        b[j] -= x
        if i == n - 1 and j == m - 1:
            break
        if i == n - 1:
            j += 1
        elif j == m - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return flow, basis


def _duals(C, basis, n, m):
    rows = [[] for _ in range(n)]
    cols = [[] for _ in range(m)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    u[0] = 0.0
    stack = [("r", 0)]
    while stack:
        kind, k = stack.pop()
        if kind == "r":
            for j in rows[k]:
                if np.isnan(v[j]):
                    v[j] = C[k, j] - u[k]
                    stack.append(("c", j))
        else:
            for i in cols[k]:
                if np.isnan(u[i]):
                    u[i] = C[i, k] - v[k]
                    stack.append(("r", i))
    if np.isnan(u).any() or np.isnan(v).any():
        raise SolverError("basis is not a spanning tree")
    return u, v, rows, cols


def _tree_path(rows, cols, i0, j0):
    """Cells on the tree path from row ``i0`` to column ``j0``."""
    # nodes: ("r", i) / ("c", j); BFS from row i0
    prev = {("r", i0): None}
    queue = deque([("r", i0)])
    target = ("c", j0)
    while queue:
        node = queue.popleft()
        if node == target:
            break
        kind, k = node
        nbrs = [("c", j) for j in rows[k]] if kind == "r" else [("r", i) for i in cols[k]]
        for nb in nbrs:
            if nb not in prev:
                prev[nb] = node
                queue.append(nb)
    path = []
    node = target
    while prev[node] is not None:
        p = prev[node]
        if node[0] == "c":
            path.append((p[1], node[1]))
        else:
            path.append((node[1], p[1]))
        node = p
    path.reverse()
    return path


def transport_simplex(a, b, C, max_iter=None):
    """Solve ``min <C, X>`` over couplings of ``a`` and ``b``.

    Returns ``(flow, u, v, iterations)``. Entering cell: most negative reduced
    cost, first in row-major order on ties; after ``n + m`` consecutive
    degenerate pivots, the first improving cell in row-major order (Bland)
    until a nondegenerate pivot occurs. Leaving cell: the smallest (row, col)
    among the donor cells attaining the minimum ratio. Both rules are
    index-based, so the returned vertex is reproducible.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    n, m = C.shape
    flow, basis = _northwest_corner(a, b)
    scale = max(1.0, float(np.max(np.abs(C)))) if C.size else 1.0
    tol = 1e-13 * scale
    if max_iter is None:
        max_iter = 50 * (n + m) * max(n, m) + 1000
    in_basis = np.zeros((n, m), dtype=bool)
    for cell in basis:
        in_basis[cell] = True
    it = 0
    stall = 0
    stall_limit = n + m
    while True:
        u, v, rows, cols = _duals(C, basis, n, m)
        R = C - u[:, None] - v[None, :]
        R[in_basis] = 0.0
        flat = R.reshape(-1)
        k = int(np.argmin(flat))
        if flat[k] >= -tol:
            break
        it += 1
        if it > max_iter:
            raise SolverError(f"transportation simplex exceeded {max_iter} pivots")
        if stall >= stall_limit:
            # Bland: first improving cell in row-major order
            k = int(np.flatnonzero(flat < -tol)[0])
        ei, ej = divmod(k, m)
        path = _tree_path(rows, cols, ei, ej)
        donors = path[0::2]
        receivers = path[1::2]
        theta = min(flow[c] for c in donors)
        stall = stall + 1 if theta == 0.0 else 0
        leaving = min(c for c in donors if flow[c] == theta)
        for c in donors:
            flow[c] -= theta
        for c in receivers:
            flow[c] += theta
        flow[ei, ej] += theta
        flow[leaving] = 0.0
        basis.remove(leaving)
        basis.append((ei, ej))
        in_basis[leaving] = False
        in_basis[ei, ej] = True
    flow[flow < _FLOW_CLEAN] = 0.0
    return flow, u, v, it


def _certify(C, flow, a, b, u, v):
    R = C - u[:, None] - v[None, :]
    scale = max(1.0, float(np.max(np.abs(C))))
    if R.min() < -CERT_TOL * scale:
        raise SolverError(f"optimality certificate failed: reduced cost {R.min():.3e}")
    gap = abs(float(np.sum(flow * C)) - float(a @ u + b @ v))
    if gap > CERT_TOL * scale:
        raise SolverError(f"optimality certificate failed: duality gap {gap:.3e}")


def solve_ot(source, target, spec):
    """Exact ``W_p`` for finite ``p`` with a certified vertex-optimal plan."""
    _check_pair(source, target, spec)
    if spec.is_inf:
        raise InputError("solve_ot requires finite p; use solve_ot_inf", field="p")
    C = pairwise_cost(source.atoms, target.atoms, spec)
    a, b = source.weights, target.weights
    flow, u, v, it = transport_simplex(a, b, C)
    _certify(C, flow, a, b, u, v)
    plan = TransportPlan(source, target, flow)
    return OTResult(
        plan=plan,
        value=plan_cost(plan, spec),
        iterations=it,
        u=u,
        v=v,
        cost=C,
        degenerate_p1=spec.p == 1.0,
    )


# -- bottleneck (p = inf) --------------------------------------------------


def max_flow_bipartite(a, b, allowed, tol=1e-15):
    """Edmonds-Karp max flow for supplies ``a`` -> demands ``b`` over ``allowed``.

    Returns ``(value, flow_table)``.
    """
    n, m = allowed.shape
    N = n + m + 2
    s, t = n + m, n + m + 1
    cap = np.zeros((N, N))
    cap[s, :n] = a
    cap[n : n + m, t] = b
    big = 2.0
    cap[:n, n : n + m] = np.where(allowed, big, 0.0)
    adj = [[] for _ in range(N)]
    for i in range(n):
        adj[s].append(i)
        adj[i].append(s)
    for j in range(m):
        adj[n + j].append(t)
        adj[t].append(n + j)
    for i, j in zip(*np.nonzero(allowed)):
        adj[i].append(n + j)
        adj[n + j].append(i)
    F = np.zeros((N, N))
    total = 0.0
    while True:
        prev = [-1] * N
        prev[s] = s
        queue = deque([s])
        while queue and prev[t] < 0:
            x = queue.popleft()
            for y in adj[x]:
                if prev[y] < 0 and cap[x, y] - F[x, y] > tol:
                    prev[y] = x
                    queue.append(y)
        if prev[t] < 0:
            break
        bottleneck = math.inf
        y = t
        while y != s:
            x = prev[y]
            bottleneck = min(bottleneck, cap[x, y] - F[x, y])
            y = x
        y = t
        while y != s:
            x = prev[y]
            F[x, y] += bottleneck
            F[y, x] -= bottleneck
            y = x
        total += bottleneck
    return total, np.maximum(F[:n, n : n + m], 0.0)


def _feasible(a, b, allowed, tol=1e-12):
    value, _ = max_flow_bipartite(a, b, allowed)
    return value >= 1.0 - tol


def solve_ot_inf(source, target, spec):
    """Exact ``W_inf``: the smallest threshold admitting a coupling."""
    _check_pair(source, target, spec)
    if not spec.is_inf:
        raise InputError("solve_ot_inf requires p = inf", field="p")
    D = pairwise_cost(source.atoms, target.atoms, spec)
    a, b = source.weights, target.weights
    levels = np.unique(D)
    lo, hi = 0, len(levels) - 1
    probes = 0
    while lo < hi:
        mid = (lo + hi) // 2
        probes += 1
        if _feasible(a, b, D <= levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    t = levels[lo]
    penalty = (D > t).astype(float)
    flow, u, v, it = transport_simplex(a, b, penalty)
    if float(np.sum(flow * penalty)) > 1e-12:
        raise SolverError("bottleneck threshold is not feasible for the simplex")
    flow[penalty > 0] = 0.0
    plan = TransportPlan(source, target, flow)
    return OTResult(plan=plan, value=plan_cost(plan, spec), iterations=probes + it, cost=D)


def solve(source, target, spec):
    """Dispatch on ``p``."""
    if spec.is_inf:
        return solve_ot_inf(source, target, spec)
    return solve_ot(source, target, spec)


def wasserstein(source, target, spec):
    return solve(source, target, spec).value


def plan_cost(plan, spec):
    """``(sum plan * d^p)^(1/p)``, or the max of ``d`` over the support for inf."""
    C = pairwise_cost(plan.source.atoms, plan.target.atoms, spec)
    if spec.is_inf:
        mask = plan.table > 0
        return float(C[mask].max()) if mask.any() else 0.0
    total = math.fsum((plan.table * C).reshape(-1))
    return max(total, 0.0) ** (1.0 / spec.p)


@dataclass(frozen=True, eq=False)
class BarycentricMap:
    """Conditional means of a plan's source atoms, per target atom."""

    target_atoms: np.ndarray
    mapped: np.ndarray
    target_index: np.ndarray
    excluded: tuple
    deterministic: bool

    def __iter__(self):
        return iter(zip(self.target_atoms, self.mapped))

    def __len__(self):
        return len(self.target_index)


def barycentric_map(plan):
    """Map each target atom ``y_j`` to ``sum_i plan[i, j] x_i / colsum_j``.

    Exact Monge map when every column has a single nonzero. Zero-mass columns
    are left out and listed in ``excluded``.
    """
    colsum = plan.table.sum(axis=0)
    keep = np.flatnonzero(colsum > 0)
    excluded = tuple(int(j) for j in np.flatnonzero(colsum <= 0))
    T = plan.table[:, keep]
    mapped = (T.T @ plan.source.atoms) / colsum[keep][:, None]
    det = bool(np.all(np.count_nonzero(T > 0, axis=0) == 1))
    if det:
        # exact source atoms, no division round-off
        mapped = plan.source.atoms[np.argmax(T > 0, axis=0)].copy()
    return BarycentricMap(plan.target.atoms[keep], mapped, keep, excluded, det)


# -- plan serialization ----------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def write_plan_csv(plan, path, source_file=None, target_file=None):
    """Sparse triplet CSV preceded by a one-line ``# {json}`` header."""
    header = {"source": source_file, "target": target_file,
              "shape": list(plan.table.shape)}
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_atom_index", "col_atom_index", "mass"])
        for i, j in plan.support():
            w.writerow([int(i), int(j), _fmt(plan.table[i, j])])


def read_plan_csv(path):
    """Return ``(header, table)``; the table is dense with the recorded shape."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise InputError("missing JSON header line", file=str(path))
        header = json.loads(first[2:])
        reader = csv.DictReader(fh)
        table = np.zeros(tuple(header["shape"]))
        for row in reader:
            table[int(row["row_atom_index"]), int(row["col_atom_index"])] = float(row["mass"])
    return header, table


__all__ = [
    "TransportPlan",
    "OTResult",
    "BarycentricMap",
    "MetricSpec",
    "solve_ot",
    "solve_ot_inf",
    "solve",
    "wasserstein",
    "plan_cost",
    "barycentric_map",
    "transport_simplex",
    "max_flow_bipartite",
    "write_plan_csv",
    "read_plan_csv",
]
