"""Bus admittance assembly, the open-circuit voltage and the impedance matrix.

Also builds the reduced oriented incidence matrix ``A`` (branches x nodes) and
its closed-form inverse for radial networks, used to check
``Y_LL = A^T y A`` and the common-path structure of ``Z``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.linalg

from .netmodel import (
    IndexMaps,
    Network,
    NetworkError,
    NotRadialError,
    all_paths_to_slack,
    build_index_maps,
    depths,
    is_radial,
)


class SingularNetworkError(NetworkError):
    """``Y_LL`` is singular: an isolated PQ island or a zero-impedance loop."""


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    Y_LL: np.ndarray
    Y_LS: np.ndarray
    Y_SL: np.ndarray
    Y_SS: np.ndarray
    V_S: np.ndarray
    Z: np.ndarray | None = None
    E: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Y_LL.shape[0]


def assemble_ybus(net: Network, idx: IndexMaps | None = None) -> SystemMatrices:
    """Assemble and partition the multiphase bus admittance matrix."""
    idx = idx or build_index_maps(net)
    n, ns = idx.n, len(idx.slack_nodes)
    pos = dict(idx.node_of)
    for k, key in enumerate(idx.slack_nodes):
        pos[key] = n + k
    Y = np.zeros((n + ns, n + ns), dtype=complex)
    for ln in net.lines:
        y = ln.y
        a = [pos[ln.from_bus, p] for p in ln.phases]
        b = [pos[ln.to_bus, p] for p in ln.phases]
        Y[np.ix_(a, a)] += y
        Y[np.ix_(b, b)] += y
        Y[np.ix_(a, b)] -= y
        Y[np.ix_(b, a)] -= y
        if ln.shunt is not None:
            Y[np.ix_(a, a)] += ln.shunt
            Y[np.ix_(b, b)] += ln.shunt
    for bus in net.buses:
        for ph, ysh in bus.shunt.items():
            Y[pos[bus.id, ph], pos[bus.id, ph]] += ysh
    return SystemMatrices(
        Y_LL=Y[:n, :n],
        Y_LS=Y[:n, n:],
        Y_SL=Y[n:, :n],
        Y_SS=Y[n:, n:],
        V_S=np.array(net.slack_voltage, dtype=complex),
    )


def _factor(Y_LL: np.ndarray):
    if Y_LL.size and np.linalg.cond(Y_LL) > 1e14:
        raise SingularNetworkError("Y_LL is singular (isolated PQ island or zero-impedance loop)")
    return scipy.linalg.lu_factor(Y_LL)


def open_circuit_voltage(mats: SystemMatrices) -> np.ndarray:
    """``E = -Y_LL^{-1} Y_LS V_S``: PQ node voltages at zero injection."""
    if mats.E is not None:
        return mats.E
    return scipy.linalg.lu_solve(_factor(mats.Y_LL), -mats.Y_LS @ mats.V_S)


def impedance_matrix(mats: SystemMatrices) -> np.ndarray:
    """``Z = Y_LL^{-1}``."""
    if mats.Z is not None:
        return mats.Z
    return scipy.linalg.lu_solve(_factor(mats.Y_LL), np.eye(mats.n, dtype=complex))


def build_system(net: Network, idx: IndexMaps | None = None) -> SystemMatrices:
    """Assemble ``Y`` and precompute ``Z`` and ``E`` with one factorisation."""
    mats = assemble_ybus(net, idx)
    lu = _factor(mats.Y_LL)
    Z = scipy.linalg.lu_solve(lu, np.eye(mats.n, dtype=complex))
    E = scipy.linalg.lu_solve(lu, -mats.Y_LS @ mats.V_S)
    if (np.abs(E) == 0).any() or not np.isfinite(E).all():
        raise SingularNetworkError("open-circuit voltage has zero or non-finite entries")
    for arr in (Z, E):
        arr.setflags(write=False)
    return replace(mats, Z=Z, E=E)


def _tails(net: Network, reversed_lines: Iterable[str]) -> dict[str, str]:
    """Bus each line is directed out of; default points towards the slack bus."""
    depth = depths(net)
    flip = set(reversed_lines)
    unknown = flip - {ln.id for ln in net.lines}
    if unknown:
        raise KeyError(f"unknown line(s) {sorted(unknown)}")
    tails = {}
    for ln in net.lines:
        tail = ln.to_bus if depth[ln.to_bus] > depth[ln.from_bus] else ln.from_bus
        if ln.id in flip:
            tail = ln.other(tail)
        tails[ln.id] = tail
    return tails


def build_incidence(
    net: Network, idx: IndexMaps | None = None, reversed_lines: Iterable[str] = ()
) -> np.ndarray:
    """Reduced oriented incidence matrix (``m x n``, entries in {-1, 0, 1}).

    A branch gets ``+1`` at the node of the bus its line leaves and ``-1`` at
    the node it enters, phase by phase; slack columns are dropped. Lines point
    towards the slack bus unless listed in ``reversed_lines``.
    """
    if net.has_shunts:
        raise NetworkError("incidence matrix encodes series topology only; network has shunts")
    idx = idx or build_index_maps(net)
    tails = _tails(net, reversed_lines)
    A = np.zeros((idx.m, idx.n))
    for ln in net.lines:
        tail = tails[ln.id]
        head = ln.other(tail)
        for ph, j in zip(ln.phases, idx.line_branches[ln.id]):
            if (tail, ph) in idx.node_of:
                A[j, idx.node_of[tail, ph]] = 1.0
            if (head, ph) in idx.node_of:
                A[j, idx.node_of[head, ph]] = -1.0
    return A


def incidence_inverse_closed_form(
    net: Network, idx: IndexMaps | None = None, reversed_lines: Iterable[str] = ()
) -> np.ndarray:
    """Closed-form inverse of the incidence matrix of a radial network.

    Entry ``(node of bus i phase p, branch of line k phase p)`` is ``+1`` when
    line ``k`` lies on the path from bus ``i`` to the slack and points along
    that path, ``-1`` when it points against it, and ``0`` otherwise.
    """
    if not is_radial(net):
        raise NotRadialError("incidence matrix of a meshed network is not square")
    if net.has_shunts:
        raise NetworkError("incidence matrix encodes series topology only; network has shunts")
    idx = idx or build_index_maps(net)
    if idx.m != idx.n:
        raise NetworkError(
            f"incidence matrix is {idx.m}x{idx.n}; every bus must have the phases of its parent line"
        )
    tails = _tails(net, reversed_lines)
    depth = depths(net)
    Ainv = np.zeros((idx.n, idx.m))
    for bus_id, path in all_paths_to_slack(net).items():
        if bus_id not in idx.bus_nodes:
            continue
        for ln in path:
            child = ln.to_bus if depth[ln.to_bus] > depth[ln.from_bus] else ln.from_bus
            sign = 1.0 if tails[ln.id] == child else -1.0
            for ph, j in zip(ln.phases, idx.line_branches[ln.id]):
                if (bus_id, ph) in idx.node_of:
                    Ainv[idx.node_of[bus_id, ph], j] = sign
    return Ainv


def line_admittance_blocks(net: Network, idx: IndexMaps | None = None) -> np.ndarray:
    """Block-diagonal ``m x m`` matrix of line admittances in branch order."""
    idx = idx or build_index_maps(net)
    y = np.zeros((idx.m, idx.m), dtype=complex)
    for ln in net.lines:
        j = idx.line_branches[ln.id]
        y[np.ix_(j, j)] = ln.y
    return y


def line_impedance_blocks(net: Network, idx: IndexMaps | None = None) -> np.ndarray:
    idx = idx or build_index_maps(net)
    z = np.zeros((idx.m, idx.m), dtype=complex)
    for ln in net.lines:
        j = idx.line_branches[ln.id]
        z[np.ix_(j, j)] = ln.z
    return z


def dump_matrices(mats: SystemMatrices, idx: IndexMaps, out_dir: str | Path) -> list[Path]:
    """Write ``Y_LL``, ``Y_LS``, ``Z`` and ``E`` as CSV (real and imaginary parts)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = [f"{b}.{p}" for b, p in idx.nodes]
    slack_labels = [f"{b}.{p}" for b, p in idx.slack_nodes]
    written = []
    blocks = {
        "Y_LL": (mats.Y_LL, labels),
        "Y_LS": (mats.Y_LS, slack_labels),
        "Z": (impedance_matrix(mats), labels),
    }
    for name, (mat, cols) in blocks.items():
        for part, fn in (("re", np.real), ("im", np.imag)):
            path = out_dir / f"{name}_{part}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["node", *cols])
                for lab, row in zip(labels, fn(mat)):
                    w.writerow([lab, *(repr(float(v)) for v in row)])
            written.append(path)
    E = open_circuit_voltage(mats)
    path = out_dir / "E.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "re", "im"])
        for lab, v in zip(labels, E):
            w.writerow([lab, repr(float(v.real)), repr(float(v.imag))])
    written.append(path)
    return written
