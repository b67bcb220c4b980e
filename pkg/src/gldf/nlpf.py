"""Exact power flow by fixed-point (Z-bus) iteration.

Iterates ``V <- E + Z diag(conj(V))^-1 conj(S)`` from ``V = E`` until the
fixed-point defect drops below the tolerance. Non-convergence is reported in
the returned solution, never raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ybus import SystemMatrices, impedance_matrix, open_circuit_voltage

VOLTAGE_FLOOR = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 1000
    initial: np.ndarray | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True, eq=False)
class PowerFlowSolution:
    V: np.ndarray
    converged: bool
    iterations: int
    residual: float
    message: str = ""

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.V)


def residual(mats: SystemMatrices, S: np.ndarray, V: np.ndarray) -> float:
    """Infinity norm of ``V - E - Z diag(conj(V))^-1 conj(S)``."""
    V = np.asarray(V, dtype=complex)
    if (np.abs(V) < VOLTAGE_FLOOR).any():
        raise ZeroDivisionError("voltage with (near) zero magnitude")
    E = open_circuit_voltage(mats)
    Z = impedance_matrix(mats)
    d = V - E - Z @ (np.conj(S) / np.conj(V))
    return float(np.abs(d).max()) if d.size else 0.0


def fixed_point_solve(
    mats: SystemMatrices, S: np.ndarray, cfg: SolverConfig | None = None
) -> PowerFlowSolution:
    """Solve for PQ node voltages under constant-power injections ``S`` (p.u.)."""
    cfg = cfg or SolverConfig()
    E = open_circuit_voltage(mats)
    Z = impedance_matrix(mats)
    S_conj = np.conj(np.asarray(S, dtype=complex))
    V = E.copy() if cfg.initial is None else np.array(cfg.initial, dtype=complex)
    res = np.inf
    for it in range(1, cfg.max_iterations + 1):
        if (np.abs(V) < VOLTAGE_FLOOR).any():
            return PowerFlowSolution(V, False, it - 1, float(res), "voltage collapse guard tripped")
        F = E + Z @ (S_conj / np.conj(V))
        res = float(np.abs(F - V).max()) if V.size else 0.0
        if not np.isfinite(res):
            return PowerFlowSolution(V, False, it, res, "non-finite iterate")
        if res <= cfg.tolerance:
            return PowerFlowSolution(V, True, it, res)
        V = F
    return PowerFlowSolution(V, False, cfg.max_iterations, float(res),
                             "maximum iterations exceeded")


@dataclass(frozen=True, eq=False)
class BatchSolution:
    V: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray


def fixed_point_solve_batch(
    mats: SystemMatrices, S: np.ndarray, cfg: SolverConfig | None = None
) -> BatchSolution:
    """Column-wise `fixed_point_solve` for an ``n x K`` array of injections.

    Each column follows exactly the scalar iteration; columns stop updating
    once converged or failed.
    """
    cfg = cfg or SolverConfig()
    E = open_circuit_voltage(mats)
    Z = impedance_matrix(mats)
    S_conj = np.conj(np.asarray(S, dtype=complex))
    n, K = S_conj.shape
    V = np.repeat(E[:, None], K, axis=1)
    converged = np.zeros(K, dtype=bool)
    failed = np.zeros(K, dtype=bool)
    iterations = np.full(K, cfg.max_iterations)
    res = np.full(K, np.inf)
    active = np.arange(K)
    for it in range(1, cfg.max_iterations + 1):
        if active.size == 0:
            break
        Va = V[:, active]
        collapsed = (np.abs(Va) < VOLTAGE_FLOOR).any(axis=0)
        F = E[:, None] + Z @ (S_conj[:, active] / np.conj(Va))
        r = np.abs(F - Va).max(axis=0) if n else np.zeros(active.size)
        bad = collapsed | ~np.isfinite(r)
        done = (r <= cfg.tolerance) & ~bad
        res[active] = r
        iterations[active[done | bad]] = it
        converged[active[done]] = True
        failed[active[bad]] = True
        keep = ~(done | bad)
        V[:, active[keep]] = F[:, keep]
        active = active[keep]
    return BatchSolution(V, converged, iterations, res)
