"""Executable checks of the structural results behind the linear models.

Each check returns a `CheckReport`; a failing report carries the single worst
entry as a witness so the violation can be reproduced in isolation. Checks
that need a tree or a shunt-free network raise on inputs that violate those
preconditions instead of passing vacuously.

The module also provides the random radial network generator used by the
property tests and the acceptance suite.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Any, Iterable

import networkx as nx
import numpy as np

from .linmodels import LinearVoltageModel, build_fpl, build_gldf
from .netmodel import (
    PQ,
    SLACK,
    Bus,
    IndexMaps,
    Line,
    Network,
    NetworkError,
    NotRadialError,
    all_paths_to_slack,
    build_index_maps,
    is_radial,
)
from .nlpf import SolverConfig, fixed_point_solve_batch
from .ybus import (
    SystemMatrices,
    build_incidence,
    build_system,
    impedance_matrix,
    incidence_inverse_closed_form,
    line_admittance_blocks,
    line_impedance_blocks,
)

PHASE_SUBSETS = ("a", "b", "c", "ab", "ac", "bc", "abc")


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    deviation: float
    witness: dict[str, Any] | None = None
    notes: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.deviation < 0:
            raise ValueError("deviation must be nonnegative")
        if self.passed != (self.witness is None):
            raise ValueError("a witness is required exactly when the check fails")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: deviation {self.deviation:.3e}"
        if self.witness:
            text += f" witness {self.witness}"
        return text


def _require_tree(net: Network, what: str) -> None:
    if not is_radial(net):
        raise NotRadialError(f"{what} needs a radial network")


def _require_shunt_free(net: Network, what: str) -> None:
    if net.has_shunts:
        raise NetworkError(f"{what} needs a shunt-free network; use net.without_shunts()")


def _label(idx: IndexMaps, i: int) -> str:
    bus, ph = idx.nodes[i]
    return f"{bus}.{ph}"


def check_common_path(
    net: Network,
    idx: IndexMaps | None = None,
    mats: SystemMatrices | None = None,
    tol: float = 1e-9,
) -> CheckReport:
    """Compare each bus-pair block of ``Z`` with the sum of shared line impedances."""
    _require_tree(net, "common-path check")
    _require_shunt_free(net, "common-path check")
    idx = idx or build_index_maps(net)
    mats = mats or build_system(net, idx)
    Z = impedance_matrix(mats)
    buses = list(net.pq_buses)
    paths = {b: {ln.id for ln in p} for b, p in all_paths_to_slack(net).items()}
    worst, witness = 0.0, None
    for bi, bj in [(b, b) for b in buses] + list(combinations(buses, 2)):
        expected = np.zeros((len(bi.phases), len(bj.phases)), dtype=complex)
        for lid in paths[bi.id] & paths[bj.id]:
            ln = net.line(lid)
            for r, pr in enumerate(bi.phases):
                for c, pc in enumerate(bj.phases):
                    if pr in ln.phases and pc in ln.phases:
                        expected[r, c] += ln.z[ln.phases.index(pr), ln.phases.index(pc)]
        got = Z[np.ix_(idx.bus_nodes[bi.id], idx.bus_nodes[bj.id])]
        dev = np.abs(got - expected)
        if dev.max() > worst:
            r, c = np.unravel_index(dev.argmax(), dev.shape)
            worst = float(dev.max())
            witness = {
                "buses": [bi.id, bj.id],
                "phases": [bi.phases[r], bj.phases[c]],
                "Z": complex(got[r, c]),
                "path_sum": complex(expected[r, c]),
            }
    passed = worst <= tol
    return CheckReport("common_path", passed, worst, None if passed else witness)


def check_incidence_identities(
    net: Network,
    idx: IndexMaps | None = None,
    tol: float = 1e-9,
    reversed_lines: Iterable[str] = (),
    mats: SystemMatrices | None = None,
) -> CheckReport:
    """``A A^-1 = I`` exactly, ``Y_LL = A^T y A`` and ``Z = A^-1 z A^-T`` within ``tol``."""
    _require_tree(net, "incidence identities")
    _require_shunt_free(net, "incidence identities")
    idx = idx or build_index_maps(net)
    mats = mats or build_system(net, idx)
    reversed_lines = tuple(reversed_lines)
    A = build_incidence(net, idx, reversed_lines)
    Ainv = incidence_inverse_closed_form(net, idx, reversed_lines)
    y = line_admittance_blocks(net, idx)
    z = line_impedance_blocks(net, idx)

    P = A @ Ainv
    exact = np.array_equal(P, np.eye(idx.n))
    dY = np.abs(mats.Y_LL - A.T @ y @ A)
    dZ = np.abs(impedance_matrix(mats) - Ainv @ z @ Ainv.T)
    dev = max(float(dY.max(initial=0.0)), float(dZ.max(initial=0.0)))
    passed = exact and dev <= tol
    witness = None
    if not passed:
        if not exact:
            i, j = np.unravel_index(np.abs(P - np.eye(idx.n)).argmax(), P.shape)
            witness = {"identity": "A A^-1 = I", "row": idx.branches[i], "col": _label(idx, j),
                       "value": float(P[i, j])}
        elif dY.max() >= dZ.max():
            i, j = np.unravel_index(dY.argmax(), dY.shape)
            witness = {"identity": "Y_LL = A^T y A", "nodes": [_label(idx, i), _label(idx, j)],
                       "deviation": float(dY[i, j])}
        else:
            i, j = np.unravel_index(dZ.argmax(), dZ.shape)
            witness = {"identity": "Z = A^-1 z A^-T", "nodes": [_label(idx, i), _label(idx, j)],
                       "deviation": float(dZ[i, j])}
    notes = [] if exact else ["A A^-1 differs from the identity"]
    return CheckReport("incidence_identities", passed, dev, witness, notes)


def check_dominance(
    net: Network,
    mats: SystemMatrices,
    S_samples: np.ndarray,
    tol: float = 1e-7,
    tol_identity: float = 1e-12,
    cfg: SolverConfig | None = None,
    model: LinearVoltageModel | None = None,
    idx: IndexMaps | None = None,
) -> CheckReport:
    """Zero-injection GLDF against zero-injection FPL on squared magnitudes.

    For every node and converged sample: ``v_hat >= v - tol``,
    ``v_tilde >= v_hat - tol_identity`` and ``|v_hat - v| <= |v_tilde - v| + tol``,
    where ``v`` comes from the fixed-point solution started at ``E``. Samples
    whose nonlinear solve does not converge are skipped and counted.

    ``model`` replaces the GLDF model (used to inject faults).
    """
    _require_tree(net, "dominance check")
    idx = idx or build_index_maps(net)
    S = np.asarray(S_samples, dtype=complex)
    if S.ndim == 1:
        S = S[:, None]
    if S.shape[0] != mats.n:
        raise ValueError(f"samples have {S.shape[0]} rows for {mats.n} nodes")
    sol = fixed_point_solve_batch(mats, S, cfg)
    ok = sol.converged
    skipped = int((~ok).sum())
    S, V = S[:, ok], sol.V[:, ok]
    gldf = model or build_gldf(mats)
    fpl = build_fpl(mats)
    v = np.abs(V) ** 2
    v_hat = gldf.squared(S.real, S.imag)
    v_tilde = fpl.squared(S)

    slack1 = v_hat - v + tol
    slack2 = v_tilde - v_hat + tol_identity
    slack3 = np.abs(v_tilde - v) - np.abs(v_hat - v) + tol
    conditions = ("v_hat >= v", "v_tilde >= v_hat", "|v_hat - v| <= |v_tilde - v|")
    worst_slack, witness = 0.0, None
    for cond, sl in zip(conditions, (slack1, slack2, slack3)):
        if sl.size and sl.min() < worst_slack:
            worst_slack = float(sl.min())
            i, j = np.unravel_index(sl.argmin(), sl.shape)
            witness = {
                "condition": cond,
                "sample": int(np.flatnonzero(ok)[j]),
                "node": _label(idx, int(i)),
                "v": float(v[i, j]),
                "v_hat": float(v_hat[i, j]),
                "v_tilde": float(v_tilde[i, j]),
            }
    notes = [f"{S.shape[1]} samples checked", f"{skipped} non-converged samples skipped",
             "only the fixed-point solution reached from E is checked"]
    passed = witness is None
    return CheckReport("dominance", passed, -worst_slack, witness, notes)


def random_radial_network(
    rng: np.random.Generator,
    n_buses: int,
    max_load: float = 0.0,
    r_range: tuple[float, float] = (0.001, 0.05),
    mutual: float = 0.3,
) -> Network:
    """Uniform random spanning tree over ``n_buses`` buses rooted at slack bus ``"0"``.

    Each bus draws its phase set from the subsets of its parent's phases, so
    every bus carries exactly the phases of the line feeding it. Self
    impedances are uniform in ``r_range``; mutual terms are at most
    ``mutual`` times the smallest self term, which keeps each block
    diagonally dominant. Line ends are randomly swapped. With ``max_load > 0``
    each PQ node gets a load with ``p, q`` uniform in ``[0, max_load]``.
    """
    if n_buses < 2:
        raise ValueError("need at least two buses")
    if n_buses == 2:
        edges = [(0, 1)]
    else:
        seq = rng.integers(0, n_buses, size=n_buses - 2).tolist()
        edges = list(nx.from_prufer_sequence(seq).edges())
    tree = nx.Graph(edges)
    order = list(nx.bfs_edges(tree, 0))
    phases = {0: "abc"}
    lines = []
    for parent, child in order:
        pp = phases[parent]
        options = [s for s in PHASE_SUBSETS if set(s) <= set(pp)]
        ph = options[rng.integers(len(options))]
        phases[child] = ph
        k = len(ph)
        r = rng.uniform(*r_range, size=k)
        x = rng.uniform(*r_range, size=k)
        z = np.diag(r + 1j * x)
        scale = mutual * min(r.min(), x.min()) / max(k - 1, 1)
        for a, b in combinations(range(k), 2):
            zm = scale * (rng.uniform() + 1j * rng.uniform())
            z[a, b] = z[b, a] = zm
        ends = (str(parent), str(child)) if rng.uniform() < 0.5 else (str(child), str(parent))
        lines.append(Line(f"L{child}", ends[0], ends[1], ph, z))
    buses = [Bus("0", "abc", SLACK)]
    for b in range(1, n_buses):
        load = {}
        if max_load > 0:
            for p in phases[b]:
                load[p] = -complex(rng.uniform(0, max_load), rng.uniform(0, max_load))
        buses.append(Bus(str(b), phases[b], PQ, load))
    return Network(buses, lines, name=f"random{n_buses}")


def add_chord(net: Network, rng: np.random.Generator, scale: float = 0.02) -> Network:
    """Add one line between two non-adjacent buses that share a phase."""
    adjacent = {frozenset((ln.from_bus, ln.to_bus)) for ln in net.lines}
    candidates = [
        (a, b)
        for a, b in combinations(net.buses, 2)
        if frozenset((a.id, b.id)) not in adjacent and set(a.phases) & set(b.phases)
    ]
    if not candidates:
        raise NetworkError("no bus pair available for a chord")
    a, b = candidates[rng.integers(len(candidates))]
    ph = "".join(p for p in a.phases if p in b.phases)
    z = scale * np.eye(len(ph)) * complex(1.0, 2.0)
    chord = Line(f"chord-{a.id}-{b.id}", a.id, b.id, ph, z)
    return Network(net.buses, (*net.lines, chord), net.slack_voltage, net.base_kva, net.name)

