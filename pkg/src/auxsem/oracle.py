"""Numeric ground truth: random instances, implied covariances, coefficient recovery."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .augment import AugmentedGraph, aux_covariance, aux_name
from .graph import DirectedEdge, MixedGraph

COEF_RANGE = (0.5, 1.5)
ERROR_COV_RANGE = (0.1, 0.4)
STRESS_RANGE = (0.0, 0.05)
SPD_MARGIN = 0.05
MAX_CONDITION = 1e8
MAX_RESAMPLES = 10


class SingularSystem(ArithmeticError):
    """The instrument system is numerically singular for these parameter values."""


class CovarianceError(ValueError):
    pass


@dataclass
class CovMatrix:
    nodes: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        self.matrix = np.asarray(self.matrix, dtype=float)
        n = len(self.nodes)
        if self.matrix.shape != (n, n):
            raise CovarianceError(f"matrix shape {self.matrix.shape} does not match {n} nodes")
        self.index = {v: i for i, v in enumerate(self.nodes)}

    def __getitem__(self, key: tuple[str, str]) -> float:
        u, v = key
        return float(self.matrix[self.index[u], self.index[v]])

    def check(self, tol: float = 1e-8) -> None:
        """Raise unless the matrix is symmetric and positive semidefinite to ``tol``."""
        m = self.matrix
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        if not np.allclose(m, m.T, atol=tol * scale, rtol=0):
            raise CovarianceError("covariance matrix is not symmetric")
        if m.size and np.linalg.eigvalsh((m + m.T) / 2).min() < -tol * scale:
            raise CovarianceError("covariance matrix is not positive semidefinite")

    def reorder(self, nodes: Sequence[str]) -> "CovMatrix":
        missing = set(nodes) ^ set(self.nodes)
        if missing:
            raise CovarianceError(f"covariance nodes differ from graph nodes: {sorted(missing)}")
        idx = [self.index[v] for v in nodes]
        return CovMatrix(tuple(nodes), self.matrix[np.ix_(idx, idx)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.nodes)
        for row in self.matrix:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CovMatrix":
        rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
        if not rows:
            raise CovarianceError("empty covariance file")
        header = [c.strip() for c in rows[0]]
        body = rows[1:]
        if len(body) != len(header) or any(len(r) != len(header) for r in body):
            raise CovarianceError(f"expected a {len(header)}x{len(header)} body under the header")
        try:
            m = np.array([[float(c) for c in r] for r in body])
        except ValueError as exc:
            raise CovarianceError(f"non-numeric entry: {exc}") from None
        return cls(tuple(header), m)


def load_cov(path) -> CovMatrix:
    with open(path, encoding="utf-8") as fh:
        return CovMatrix.from_csv(fh.read())


@dataclass
class ModelInstance:
    """``lam[i, j]`` is the coefficient on ``i -> j``; ``omega`` the error covariance."""

    graph: MixedGraph
    lam: np.ndarray
    omega: np.ndarray

    def coefficient(self, e: DirectedEdge) -> float:
        g = self.graph
        return float(self.lam[g.index[e.tail], g.index[e.head]])

    def edge_values(self) -> dict[DirectedEdge, float]:
        return {e: self.coefficient(e) for e in self.graph.directed}

    def assignment(self) -> dict[str, float]:
        """Label -> value for every edge (error covariances for bidirected edges)."""
        g = self.graph
        out = {e.label: self.coefficient(e) for e in g.directed}
        for b in g.bidirected:
            out[b.label] = float(self.omega[g.index[b.a], g.index[b.b]])
        return out

    def to_json(self) -> dict:
        g = self.graph
        return {
            "nodes": list(g.nodes),
            "lambda": [{"edge": e.key, "label": e.label, "value": self.coefficient(e)}
                       for e in g.directed],
            "omega": [{"a": g.nodes[i], "b": g.nodes[j], "value": float(self.omega[i, j])}
                      for i in range(len(g)) for j in range(i, len(g))
                      if i == j or self.omega[i, j] != 0],
        }


def _draw_signed(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi))


def random_instance(g: MixedGraph, seed=0, stress: bool = False,
                    fixed: Mapping[DirectedEdge, float] | None = None) -> ModelInstance:
    """Random parameters for ``g``; ``fixed`` pins selected coefficients.

    ``stress`` draws coefficients close to zero to exercise near-singular
    instrument systems.
    """
    rng = np.random.default_rng(seed)
    n = len(g)
    lam = np.zeros((n, n))
    lo, hi = STRESS_RANGE if stress else COEF_RANGE
    for e in g.directed:
        lam[g.index[e.tail], g.index[e.head]] = _draw_signed(rng, lo, hi)
    for e, v in (fixed or {}).items():
        if v is not None:
            lam[g.index[e.tail], g.index[e.head]] = v
    omega = np.eye(n)
    for b in g.bidirected:
        i, j = g.index[b.a], g.index[b.b]
        omega[i, j] = omega[j, i] = _draw_signed(rng, *ERROR_COV_RANGE)
    if n:
        lmin = float(np.linalg.eigvalsh(omega).min())
        omega += np.eye(n) * max(0.0, SPD_MARGIN - lmin)
    return ModelInstance(g, lam, omega)


def implied_covariance(m: ModelInstance) -> CovMatrix:
    """``Sigma = (I - Lam^T)^-1 Omega (I - Lam)^-1`` by triangular solves in topological order."""
    g = m.graph
    n = len(g)
    if n == 0:
        return CovMatrix((), np.zeros((0, 0)))
    order = [g.index[v] for v in g.topological_order()]
    lam = m.lam[np.ix_(order, order)]
    omega = m.omega[np.ix_(order, order)]
    lower = np.eye(n) - lam.T  # lower unitriangular once nodes are topologically sorted
    if np.any(np.abs(np.triu(lower, 1)) > 0):
        raise ArithmeticError("coefficients do not follow a topological order")
    left = solve_triangular(lower, omega, lower=True)
    sigma = solve_triangular(lower, left.T, lower=True).T
    sigma = (sigma + sigma.T) / 2
    inv = np.argsort(order)
    return CovMatrix(g.nodes, sigma[np.ix_(inv, inv)])


def standardize(m: ModelInstance) -> ModelInstance:
    sd = np.sqrt(np.diag(implied_covariance(m).matrix))
    if np.any(sd <= 0):
        raise ArithmeticError("zero implied variance")
    lam = m.lam * sd[:, None] / sd[None, :]
    omega = m.omega / np.outer(sd, sd)
    return ModelInstance(m.graph, lam, omega)


def augmented_instance(m: ModelInstance, aug: AugmentedGraph) -> ModelInstance:
    """Instance over ``aug.graph`` whose auxiliary nodes are exact linear proxies."""
    g = aug.graph
    n = len(g)
    lam = np.zeros((n, n))
    base_n = len(m.graph)
    lam[:base_n, :base_n] = m.lam
    for y, ys in aug.aux_nodes.items():
        lam[g.index[y], g.index[ys]] = 1.0
        for e in aug.subtracted_into(y):
            lam[g.index[e.tail], g.index[ys]] -= m.coefficient(e)
    omega = np.zeros((n, n))
    omega[:base_n, :base_n] = m.omega
    # auxiliary nodes carry no error of their own; they are exact combinations
    return ModelInstance(g, lam, omega)


def _condition(A: np.ndarray, row_sd: np.ndarray, col_sd: np.ndarray) -> float:
    """Condition number of the system rescaled to correlations.

    The scaling removes units, so a single instrument with a vanishing
    correlation to its tail counts as ill-conditioned too.
    """
    if np.any(row_sd <= 0) or np.any(col_sd <= 0):
        return float("inf")
    scaled = A / np.outer(row_sd, col_sd)
    sv = np.linalg.svd(scaled, compute_uv=False)
    return float(max(sv[0], 1.0) / max(sv[-1], np.finfo(float).tiny))


@dataclass
class Solution:
    values: dict[DirectedEdge, float]
    condition: float


def solve_certificate(sigma: CovMatrix, cert, known: Mapping[DirectedEdge, float]) -> Solution:
    """Coefficients of ``cert.target`` from ``sigma`` with known values plugged into the proxies."""
    known = dict(known)
    need = cert.required_edges()
    missing = [e.key for e in need if known.get(e) is None]
    if missing:
        raise ValueError(f"no numeric value for: {', '.join(sorted(missing))}")
    y = cert.target.head
    head_vals = {e: known[e] for e in cert.head_subtracted}
    y_term = aux_name(y) if head_vals else y
    k = len(cert.target)
    A = np.empty((k, k))
    b = np.empty(k)
    z_sd = np.empty(k)
    for i, z in enumerate(cert.instruments):
        z_vals = {e: known[e] for e in cert.subtracted.get(z, ())}
        z_term = aux_name(z) if z_vals else z
        vals = {**z_vals, **head_vals}
        for j, x in enumerate(cert.target.tails):
            A[i, j] = aux_covariance(sigma, vals, z_term, x)
        b[i] = aux_covariance(sigma, vals, z_term, y_term)
        z_sd[i] = np.sqrt(max(aux_covariance(sigma, z_vals, z_term, z_term), 0.0))
    x_sd = np.sqrt(np.maximum([sigma[x, x] for x in cert.target.tails], 0.0))
    cond = _condition(A, z_sd, x_sd)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularSystem(f"instrument system for {cert.target} has condition number {cond:.3g}")
    coef = np.linalg.solve(A, b)
    return Solution(dict(zip(cert.target.edges, map(float, coef))), cond)


@dataclass
class Estimate:
    edge: DirectedEdge
    value: float
    condition: float
    certificate: object


def estimate(sigma: CovMatrix, result, known: Mapping[DirectedEdge, float] | None = None) -> list[Estimate]:
    """Walk the derivation in order, feeding each estimate forward as known."""
    values = dict(known or {})
    out = []
    for es, cert in result.identified:
        sol = solve_certificate(sigma, cert, values)
        for e in es:
            values.setdefault(e, sol.values[e])
            out.append(Estimate(e, sol.values[e], sol.condition, cert))
    return out


@dataclass
class VerificationReport:
    trials: int
    tol: float
    max_error: dict[DirectedEdge, float]
    resamples: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(err <= self.tol for err in self.max_error.values())

    @property
    def vacuous(self) -> bool:
        return not self.max_error

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "trials": self.trials,
            "tol": self.tol,
            "resamples": self.resamples,
            "max_error": {e.key: err for e, err in self.max_error.items()},
            "notes": list(self.notes),
        }

    def __str__(self) -> str:
        lines = [f"{'PASS' if self.passed else 'FAIL'}: {self.trials} trials, tol {self.tol:g}"]
        if self.vacuous:
            lines.append("  warning: no certificates to check")
        for e, err in self.max_error.items():
            lines.append(f"  {e.key:<16} max |error| = {err:.3e}")
        if self.resamples:
            lines.append(f"  resampled {self.resamples} singular trial(s)")
        lines += [f"  {n}" for n in self.notes]
        return "\n".join(lines)


def verify_identification(g: MixedGraph, result, trials: int = 100, tol: float = 1e-6,
                          seed: int = 42, standardized: bool = False,
                          stress: bool = False) -> VerificationReport:
    """Recover every certified coefficient from exact implied covariances."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    external = {e: kv.value for e, kv in result.external.items()}
    max_error: dict[DirectedEdge, float] = {e: 0.0 for es, _ in result.identified for e in es}
    resamples = 0
    for t in range(trials):
        for attempt in range(MAX_RESAMPLES + 1):
            inst = random_instance(g, [seed, t, attempt], stress=stress, fixed=external)
            if standardized:
                inst = standardize(inst)
            truth = inst.edge_values()
            sigma = implied_covariance(inst)
            known = {e: truth[e] for e in external}
            try:
                found = estimate(sigma, result, known)
            except SingularSystem:
                resamples += 1
                continue
            for est in found:
                err = abs(est.value - truth[est.edge])
                max_error[est.edge] = max(max_error[est.edge], err)
            break
        else:
            raise SingularSystem(f"trial {t}: singular after {MAX_RESAMPLES} resamples")
    return VerificationReport(trials, tol, max_error, resamples)


def dump_instance(m: ModelInstance) -> str:
    return json.dumps(m.to_json(), indent=2)


def load_instance(g: MixedGraph, data: dict) -> ModelInstance:
    n = len(g)
    lam = np.zeros((n, n))
    omega = np.zeros((n, n))
    for item in data["lambda"]:
        e = g.find_edge(item["edge"])
        lam[g.index[e.tail], g.index[e.head]] = item["value"]
    for item in data["omega"]:
        i, j = g.index[item["a"]], g.index[item["b"]]
        omega[i, j] = omega[j, i] = item["value"]
    return ModelInstance(g, lam, omega)
