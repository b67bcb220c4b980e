"""Linear voltage models: generalized LinDistFlow, LinDistFlow, and FPL.

The generalized and classic LinDistFlow models map real/reactive injections
``(p, q)`` to squared voltage magnitudes::

    v = |E|^2 + M p + N q + lam

FPL maps complex injections to complex voltages by freezing the voltage in
the fixed-point equation at an operating point.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .netmodel import IndexMaps, Network, NotRadialError, all_paths_to_slack, is_radial
from .ybus import SystemMatrices, impedance_matrix, open_circuit_voltage

ALPHA = np.exp(-2j * np.pi / 3)


class NegativeSquaredVoltage(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class LinearVoltageModel:
    """``v = base + M p + N q + lam`` with ``base = |E|^2``."""

    M: np.ndarray
    N: np.ndarray
    lam: np.ndarray
    base: np.ndarray
    S_star: np.ndarray
    V_star: np.ndarray
    name: str = "gldf"

    def squared(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        return eval_squared_voltages(self, p, q)

    def magnitudes(self, S: np.ndarray) -> np.ndarray:
        """Voltage magnitudes for complex injections ``S`` (vector or ``n x K``)."""
        S = np.asarray(S)
        mags, _ = magnitudes_from_squared(self.squared(S.real, S.imag))
        return mags


@dataclass(frozen=True, eq=False)
class FplModel:
    """``V = E + K conj(S)`` with ``K = Z diag(conj(V*))^-1``."""

    E: np.ndarray
    K: np.ndarray
    S_star: np.ndarray
    V_star: np.ndarray
    name: str = "fpl"

    def voltages(self, S: np.ndarray) -> np.ndarray:
        S = np.asarray(S, dtype=complex)
        if S.ndim == 1:
            return self.E + self.K @ np.conj(S)
        return self.E[:, None] + self.K @ np.conj(S)

    def magnitudes(self, S: np.ndarray) -> np.ndarray:
        return np.abs(self.voltages(S))

    def squared(self, S: np.ndarray) -> np.ndarray:
        return np.abs(self.voltages(S)) ** 2


def _zero_point(mats: SystemMatrices, S_star, V_star):
    E = open_circuit_voltage(mats)
    if S_star is None:
        S_star = np.zeros(mats.n, dtype=complex)
    if V_star is None:
        if np.any(S_star):
            raise ValueError("V_star is required for a non-zero linearization point")
        V_star = E
    return np.asarray(S_star, dtype=complex), np.asarray(V_star, dtype=complex)


def gldf_coefficients(mats: SystemMatrices) -> tuple[np.ndarray, np.ndarray]:
    """``M = 2 Re(W)``, ``N = -2 Im(W)`` with ``W = diag(E) conj(Z) diag(E)^-1``."""
    E = open_circuit_voltage(mats)
    if (np.abs(E) == 0).any():
        raise ZeroDivisionError("open-circuit voltage has a zero entry")
    W = E[:, None] * np.conj(impedance_matrix(mats)) / E[None, :]
    return 2 * W.real, -2 * W.imag


def build_gldf(
    mats: SystemMatrices,
    S_star: np.ndarray | None = None,
    V_star: np.ndarray | None = None,
) -> LinearVoltageModel:
    """Generalized LinDistFlow model linearized at ``(S_star, V_star)``.

    With no point given the model is built at zero injection, ``V* = E``,
    where the offset ``lam`` vanishes.
    """
    S_star, V_star = _zero_point(mats, S_star, V_star)
    E = open_circuit_voltage(mats)
    M, N = gldf_coefficients(mats)
    base = np.abs(E) ** 2
    lam = np.abs(V_star) ** 2 - (base + M @ S_star.real + N @ S_star.imag)
    return LinearVoltageModel(M, N, lam, base, S_star, V_star, "gldf")


def eval_squared_voltages(mdl: LinearVoltageModel, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape or p.shape[0] != mdl.M.shape[1]:
        raise ValueError(f"injection shape {p.shape}/{q.shape} does not match model size")
    const = mdl.base + mdl.lam
    if p.ndim == 2:
        const = const[:, None]
    return const + mdl.M @ p + mdl.N @ q


def magnitudes_from_squared(v: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Square roots of ``v``; negative entries are clamped to zero and reported.

    Returns the magnitudes and the flat indices of the clamped entries.
    """
    v = np.asarray(v, dtype=float)
    neg = np.flatnonzero(v < 0)
    if neg.size:
        warnings.warn(
            f"{neg.size} negative squared voltage(s) clamped to zero", NegativeSquaredVoltage,
            stacklevel=2,
        )
    return np.sqrt(np.clip(v, 0.0, None)), neg.tolist()


def common_path_impedance(net: Network, idx: IndexMaps) -> np.ndarray:
    """``n x n`` matrix whose ``(i, j)`` block sums line impedances shared by both slack paths.

    Entries for a phase pair that a line lacks contribute nothing.
    """
    if not is_radial(net):
        raise NotRadialError("common-path sums need a radial network")
    paths = all_paths_to_slack(net)
    downstream: dict[str, list[str]] = {ln.id: [] for ln in net.lines}
    for bus_id, path in paths.items():
        if bus_id in idx.bus_nodes:
            for ln in path:
                downstream[ln.id].append(bus_id)
    Zp = np.zeros((idx.n, idx.n), dtype=complex)
    for ln in net.lines:
        rows, cols = [], []
        for bus_id in downstream[ln.id]:
            for a, pa in enumerate(ln.phases):
                node = idx.node_of.get((bus_id, pa))
                if node is not None:
                    rows.append(node)
                    cols.append(a)
        if not rows:
            continue
        D = np.zeros((idx.n, len(ln.phases)))
        D[rows, cols] = 1.0
        Zp += D @ ln.z @ D.T
    return Zp


def build_ldf(net: Network, idx: IndexMaps, mats: SystemMatrices) -> LinearVoltageModel:
    """Multiphase LinDistFlow from common-path impedance sums and phase rotation."""
    Zp = common_path_impedance(net, idx)
    ph = idx.node_phase_numbers()
    rot = ALPHA ** ((ph[:, None] - ph[None, :]) % 3)
    W = rot * np.conj(Zp)
    E = open_circuit_voltage(mats)
    n = idx.n
    return LinearVoltageModel(
        M=2 * W.real,
        N=-2 * W.imag,
        lam=np.zeros(n),
        base=np.abs(E) ** 2,
        S_star=np.zeros(n, dtype=complex),
        V_star=E,
        name="ldf",
    )


def build_fpl(
    mats: SystemMatrices,
    S_star: np.ndarray | None = None,
    V_star: np.ndarray | None = None,
) -> FplModel:
    S_star, V_star = _zero_point(mats, S_star, V_star)
    if (np.abs(V_star) == 0).any():
        raise ZeroDivisionError("linearization voltage has a zero entry")
    K = impedance_matrix(mats) / np.conj(V_star)[None, :]
    return FplModel(open_circuit_voltage(mats), K, S_star, V_star)
