"""Error studies of the linear models against the nonlinear power flow.

Two experiments are provided:

* a continuation sweep that scales a reference injection by ``k`` over a grid
  and records each model's relative magnitude error;
* Monte Carlo studies with random loads, with and without distributed
  generation, summarised by mean and max absolute magnitude error.

Random draws for sample ``j`` come from a generator seeded with
``(seed, j)``, and samples are processed in fixed-size chunks merged in
order, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .linmodels import NegativeSquaredVoltage, build_fpl, build_gldf, build_ldf
from .netmodel import IndexMaps, Network, build_index_maps, injection_vector, is_radial
from .nlpf import SolverConfig, fixed_point_solve, fixed_point_solve_batch
from .ybus import SystemMatrices, build_system

MODELS = ("ldf", "gldf", "fpl")
CHUNK = 500


def relative_error(V_true: np.ndarray, V_est_mag: np.ndarray) -> float | np.ndarray:
    """``|| |V_est| - |V| ||_2 / || |V| ||_2``, column-wise for 2-D input."""
    mag = np.abs(np.asarray(V_true))
    est = np.asarray(V_est_mag, dtype=float)
    if mag.shape != est.shape:
        raise ValueError(f"shape mismatch {mag.shape} vs {est.shape}")
    denom = np.linalg.norm(mag, axis=0)
    if np.any(denom == 0):
        raise ZeroDivisionError("true voltage vector is zero")
    out = np.linalg.norm(est - mag, axis=0) / denom
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class _Models:
    gldf: object
    ldf: object | None
    fpl: object

    def magnitudes(self, S: np.ndarray) -> tuple[dict[str, np.ndarray], int]:
        out, clamped = {}, 0
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NegativeSquaredVoltage)
            out["gldf"] = self.gldf.magnitudes(S)
            if self.ldf is not None:
                out["ldf"] = self.ldf.magnitudes(S)
        clamped = sum(1 for w in caught if issubclass(w.category, NegativeSquaredVoltage))
        out["fpl"] = self.fpl.magnitudes(S)
        return out, clamped


def _build_models(
    net: Network, idx: IndexMaps, mats: SystemMatrices, S_lin: np.ndarray,
    cfg: SolverConfig | None,
) -> _Models:
    if np.any(S_lin):
        sol = fixed_point_solve(mats, S_lin, cfg)
        if not sol.converged:
            raise RuntimeError(f"no power flow solution at the linearization point: {sol.message}")
        V_lin = sol.V
    else:
        V_lin = None
    ldf = build_ldf(net, idx, mats) if is_radial(net) else None
    return _Models(build_gldf(mats, S_lin, V_lin), ldf, build_fpl(mats, S_lin, V_lin))


def k_grid(k_min: float, k_max: float, step: float) -> np.ndarray:
    if step <= 0 or k_max < k_min:
        raise ValueError("need step > 0 and k_max >= k_min")
    count = int(round((k_max - k_min) / step)) + 1
    return np.round(k_min + step * np.arange(count), 10)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Relative errors per model over the ``k`` grid (NaN where not converged)."""

    k: np.ndarray
    errors: dict[str, np.ndarray]
    converged: np.ndarray
    lin_k: float
    feeder: str = ""
    clamped: int = 0

    def index(self, k: float) -> int:
        hits = np.flatnonzero(np.isclose(self.k, k, rtol=0, atol=1e-9))
        if not hits.size:
            raise KeyError(f"k = {k} is not on the grid")
        return int(hits[0])

    @property
    def n_failed(self) -> int:
        return int((~self.converged).sum())


def continuation_sweep(
    net: Network,
    k_min: float = -2.5,
    k_max: float = 2.5,
    step: float = 0.01,
    lin_k: float = 0.0,
    cfg: SolverConfig | None = None,
    S_ref: np.ndarray | None = None,
) -> SweepResult:
    """Solve at ``k S_ref`` for each ``k`` and compare models built at ``lin_k S_ref``.

    LDF errors are NaN on meshed networks.
    """
    idx = build_index_maps(net)
    mats = build_system(net, idx)
    S_ref = injection_vector(net, idx) if S_ref is None else np.asarray(S_ref, dtype=complex)
    models = _build_models(net, idx, mats, lin_k * S_ref, cfg)
    k = k_grid(k_min, k_max, step)
    S = S_ref[:, None] * k[None, :]
    sol = fixed_point_solve_batch(mats, S, cfg)
    ok = sol.converged
    errors = {name: np.full(k.size, np.nan) for name in MODELS}
    clamped = 0
    if ok.any():
        mags, clamped = models.magnitudes(S[:, ok])
        for name, est in mags.items():
            errors[name][ok] = relative_error(sol.V[:, ok], est)
    return SweepResult(k, errors, ok, float(lin_k), net.name, clamped)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Per-node uniform ranges for real injections and the linearization point."""

    name: str
    p_low: np.ndarray
    p_high: np.ndarray
    S_lin: np.ndarray
    der_nodes: tuple[int, ...] = ()


def positive_scenario(S_ref: np.ndarray) -> Scenario:
    """``p_i ~ U(1.5 Re S_ref_i, 0)``, linearized at ``0.75 S_ref``."""
    S_ref = np.asarray(S_ref, dtype=complex)
    lo = np.minimum(1.5 * S_ref.real, 0.0)
    hi = np.maximum(1.5 * S_ref.real, 0.0)
    return Scenario("positive", lo, hi, 0.75 * S_ref)


def der_partition(S_ref: np.ndarray, partition: str = "first", seed: int = 0) -> np.ndarray:
    """Indices of the load nodes that become generators.

    The load nodes (nonzero ``S_ref``) are taken in index order; the first
    ``ceil(n_load / 2)`` stay loads and the rest become DER. ``"swapped"``
    exchanges the two groups and ``"random"`` shuffles the order first.
    """
    loads = np.flatnonzero(np.asarray(S_ref) != 0)
    half = math.ceil(loads.size / 2)
    if partition == "first":
        der = loads[half:]
    elif partition == "swapped":
        der = loads[:half]
    elif partition == "random":
        der = np.sort(np.random.default_rng(seed).permutation(loads)[half:])
    else:
        raise ValueError(f"unknown partition {partition!r}")
    return der


def der_scenario(S_ref: np.ndarray, partition: str = "first", seed: int = 0) -> Scenario:
    """Half the load nodes draw ``U(1.5 Re S_i, 0)``, the rest ``U(0, 1.5 Re S_i)``.

    For DER nodes ``S_i = -Re S_ref_i + i Im S_ref_i``; the linearization
    point is ``0.75 S``.
    """
    S_ref = np.asarray(S_ref, dtype=complex)
    der = der_partition(S_ref, partition, seed)
    S = S_ref.copy()
    S[der] = -S_ref[der].real + 1j * S_ref[der].imag
    lo = np.minimum(1.5 * S.real, 0.0)
    hi = np.maximum(1.5 * S.real, 0.0)
    return Scenario(f"der-{partition}", lo, hi, 0.75 * S, tuple(int(i) for i in der))


def draw_injections(scn: Scenario, seed: int, start: int, count: int) -> np.ndarray:
    """Samples ``start .. start+count-1`` as an ``n x count`` complex array.

    Power factors are uniform in ``[0.7, 1]`` and ``q`` has the sign of ``p``.
    """
    n = scn.p_low.size
    out = np.empty((n, count), dtype=complex)
    for c in range(count):
        rng = np.random.default_rng([seed, start + c])
        p = rng.uniform(scn.p_low, scn.p_high)
        pf = rng.uniform(0.7, 1.0, size=n)
        out[:, c] = p + 1j * p * np.tan(np.arccos(pf))
    return out


@dataclass(frozen=True, eq=False)
class MonteCarloResult:
    """Mean and max absolute magnitude errors (p.u.) per model."""

    feeder: str
    scenario: str
    samples: int
    seed: int
    converged: int
    mean: dict[str, float]
    max: dict[str, float]
    der_nodes: tuple[str, ...] = ()
    clamped: int = 0

    @property
    def skipped(self) -> int:
        return self.samples - self.converged

    def table(self) -> dict[str, tuple[float, float]]:
        """``{model: (mean, max)}`` in units of 0.01 p.u."""
        return {m: (100 * self.mean[m], 100 * self.max[m]) for m in self.mean}


def _chunk_stats(models: _Models, mats: SystemMatrices, scn: Scenario, seed: int,
                 start: int, count: int, cfg: SolverConfig | None):
    S = draw_injections(scn, seed, start, count)
    sol = fixed_point_solve_batch(mats, S, cfg)
    ok = sol.converged
    sums, maxes = {}, {}
    clamped = 0
    if ok.any():
        mags, clamped = models.magnitudes(S[:, ok])
        true = np.abs(sol.V[:, ok])
        for name, est in mags.items():
            err = np.abs(est - true)
            sums[name] = float(err.sum())
            maxes[name] = float(err.max())
    return int(ok.sum()), sums, maxes, clamped


def monte_carlo(
    net: Network,
    scenario: Scenario,
    samples: int = 10_000,
    seed: int = 0,
    jobs: int = 1,
    cfg: SolverConfig | None = None,
) -> MonteCarloResult:
    """Run a Monte Carlo study; non-converged samples are skipped and counted."""
    if samples < 1:
        raise ValueError("samples must be positive")
    idx = build_index_maps(net)
    mats = build_system(net, idx)
    models = _build_models(net, idx, mats, scenario.S_lin, cfg)
    starts = list(range(0, samples, CHUNK))
    counts = [min(CHUNK, samples - s) for s in starts]

    def work(args):
        return _chunk_stats(models, mats, scenario, seed, *args, cfg)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, zip(starts, counts)))
    else:
        parts = [work(a) for a in zip(starts, counts)]

    converged = sum(p[0] for p in parts)
    names = [m for m in MODELS if m != "ldf" or models.ldf is not None]
    mean, mx = {}, {}
    for name in names:
        total = sum(p[1].get(name, 0.0) for p in parts)
        mean[name] = total / (idx.n * converged) if converged else math.nan
        mx[name] = max((p[2][name] for p in parts if name in p[2]), default=math.nan)
    labels = tuple(f"{idx.nodes[i][0]}.{idx.nodes[i][1]}" for i in scenario.der_nodes)
    return MonteCarloResult(net.name, scenario.name, samples, seed, converged, mean, mx,
                            labels, sum(p[3] for p in parts))


def random_load_positive(
    net: Network, seed: int = 0, samples: int = 10_000, jobs: int = 1,
    cfg: SolverConfig | None = None,
) -> MonteCarloResult:
    return monte_carlo(net, positive_scenario(injection_vector(net)), samples, seed, jobs, cfg)


def random_load_der(
    net: Network, seed: int = 0, samples: int = 10_000, partition: str = "first",
    jobs: int = 1, cfg: SolverConfig | None = None,
) -> MonteCarloResult:
    scn = der_scenario(injection_vector(net), partition, seed)
    return monte_carlo(net, scn, samples, seed, jobs, cfg)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sweep_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "err_gldf", "err_ldf", "err_fpl", "converged"])
        for i, k in enumerate(result.k):
            w.writerow([_fmt(k), *(_fmt(result.errors[m][i]) for m in ("gldf", "ldf", "fpl")),
                        int(result.converged[i])])
    return path


def write_montecarlo_csv(results: Iterable[MonteCarloResult], path: str | Path) -> Path:
    """One row per feeder, scenario and model; ``*_table`` columns are in 0.01 p.u."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["feeder", "scenario", "model", "mean_pu", "max_pu", "mean_table",
                    "max_table", "samples", "converged", "skipped", "seed"])
        for r in results:
            for m in MODELS:
                if m not in r.mean:
                    continue
                w.writerow([r.feeder, r.scenario, m, _fmt(r.mean[m]), _fmt(r.max[m]),
                            _fmt(100 * r.mean[m]), _fmt(100 * r.max[m]), r.samples,
                            r.converged, r.skipped, r.seed])
    return path
