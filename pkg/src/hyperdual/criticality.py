"""Temperature scans of dual classical models and the finite-temperature criticality verdict.

A CSS state is declared topologically ordered when the heat capacity of its
dual classical ferromagnet develops a finite-temperature singularity. At
desk scale that is read off from the heat-capacity peak: its height must keep
growing with system size while its location converges to an interior
temperature. A bounded (Schottky-like) peak, or one drifting to T -> 0,
means no finite-temperature transition.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classical import (
    DEFAULT_EXACT_CAP,
    McParams,
    Observables,
    SpinModel,
    density_of_states,
    mc_sample,
    observables_exact,
    ring_observables,
)
from .hypergraph import dual, ghz_ring, ising_ring, ising_square, toric_code

RING_FAMILIES = ("ising_ring", "ghz_ring")
FAMILIES: dict[str, Callable[[int], SpinModel]] = {
    "ising_ring": lambda n: SpinModel(ising_ring(n)),
    "ghz_ring": lambda n: SpinModel(dual(ghz_ring(n))),
    "ising_square": lambda L: SpinModel(ising_square(L)),
    "toric_code": lambda L: SpinModel(dual(toric_code(L)[0])),
}


def family_model(family: str, size: int) -> SpinModel:
    """Dual classical model of a named family; ``ghz_ring``/``toric_code`` are dualized on the fly."""
    try:
        return FAMILIES[family](size)
    except KeyError:
        raise ValueError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}") from None


def cell_seed(master_seed: int, family: str, size: int, t_index: int) -> int:
    """64-bit seed of one scan cell, hashed from the master seed and the cell coordinates."""
    key = (zlib.crc32(family.encode()), size, t_index)
    hi, lo = np.random.SeedSequence(master_seed, spawn_key=key).generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


@dataclass
class ScanResult:
    family: str
    sizes: list[int]
    temperatures: list[float]
    curves: dict[int, list[Observables]]
    methods: dict[int, list[str]]
    seeds: dict[int, list[int]]

    def column(self, size: int, name: str) -> np.ndarray:
        return np.array([getattr(o, name) for o in self.curves[size]], dtype=float)


def _validate_grid(sizes: Sequence[int], temperatures: Sequence[float]) -> None:
    if len(sizes) < 3:
        raise ValueError(f"a scan needs at least 3 sizes, got {len(sizes)}")
    if len(set(sizes)) != len(sizes) or any(s < 2 for s in sizes):
        raise ValueError(f"sizes must be distinct and >= 2, got {list(sizes)}")
    if len(temperatures) < 5:
        raise ValueError(f"a scan needs at least 5 temperatures, got {len(temperatures)}")
    t = np.asarray(temperatures, dtype=float)
    if not np.all(np.isfinite(t)) or t[0] <= 0 or np.any(np.diff(t) <= 0):
        raise ValueError("temperatures must be positive, finite and strictly increasing")


def scan(
    family: str,
    sizes: Sequence[int],
    temperatures: Sequence[float],
    mc_params: McParams | None = None,
    master_seed: int = 42,
    threads: int = 1,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> ScanResult:
    """Fill the (size, temperature) grid of per-spin observables.

    Ring families use the transfer matrix, models with at most ``exact_cap``
    spins are enumerated, everything else is sampled by Monte Carlo. Cells are
    independent and may run on ``threads`` workers; results do not depend on
    the worker count.
    """
    _validate_grid(sizes, temperatures)
    if threads < 1:
        raise ValueError("threads must be >= 1")
    mc_params = mc_params or McParams()
    sizes = [int(s) for s in sizes]
    temps = [float(t) for t in temperatures]
    curves: dict[int, list[Observables]] = {}
    methods: dict[int, list[str]] = {}
    seeds = {L: [cell_seed(master_seed, family, L, k) for k in range(len(temps))] for L in sizes}
    mc_cells = []
    for L in sizes:
        model = family_model(family, L)
        if family in RING_FAMILIES:
            methods[L] = ["transfer"] * len(temps)
            curves[L] = [ring_observables(model.n_spins, 1.0 / t) for t in temps]
        elif model.n_spins <= exact_cap:
            density_of_states(model, exact_cap)
            methods[L] = ["exact"] * len(temps)
            curves[L] = [observables_exact(model, 1.0 / t, exact_cap) for t in temps]
        else:
            # build the lookup tables here; cached_property is not safe to race on
            _ = model.edge_csr, model.vertex_csr
            if model.is_two_body:
                _ = model.neighbor_csr
            methods[L] = ["mc"] * len(temps)
            curves[L] = [None] * len(temps)  # type: ignore[list-item]
            mc_cells.extend((L, k, model) for k in range(len(temps)))

    def run(cell):
        L, k, model = cell
        return mc_sample(model, 1.0 / temps[k], mc_params, seeds[L][k])

    if mc_cells:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for (L, k, _), obs in zip(mc_cells, pool.map(run, mc_cells)):
                curves[L][k] = obs
    return ScanResult(family, sizes, temps, curves, methods, seeds)


@dataclass
class Peak:
    t_star: float
    c_star: float
    err: float
    t_err: float
    flagged: bool = False
    reason: str = ""


def _vertex(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    a, b, c = np.polyfit(t, y, 2)
    if a >= 0:
        k = int(np.argmax(y))
        return float(t[k]), float(y[k])
    t_star = -b / (2 * a)
    return float(t_star), float(c - b * b / (4 * a))


def detect_peak(
    temperatures: Sequence[float], values: Sequence[float], errors: Sequence[float] | None = None
) -> Peak:
    """Locate a curve maximum from the parabola through the largest sample and its two neighbours.

    A maximum on either end of the grid is flagged rather than extrapolated.
    Errors of the vertex come from linear propagation of the three sample errors.
    """
    t = np.asarray(temperatures, dtype=float)
    y = np.asarray(values, dtype=float)
    sig = np.zeros_like(y) if errors is None else np.asarray(errors, dtype=float)
    if len(t) < 5 or len(y) != len(t):
        raise ValueError("detect_peak needs at least 5 matching grid points")
    i = int(np.argmax(y))
    if i == 0 or i == len(y) - 1:
        return Peak(float(t[i]), float(y[i]), float(sig[i]), math.nan, True, "maximum on grid endpoint")
    window = slice(i - 1, i + 2)
    tw, yw, sw = t[window], y[window], sig[window]
    t_star, c_star = _vertex(tw, yw)
    var_t = var_c = 0.0
    for k in range(3):
        if sw[k] == 0:
            continue
        step = sw[k] * 1e-3
        bumped = yw.copy()
        bumped[k] += step
        tb, cb = _vertex(tw, bumped)
        var_t += ((tb - t_star) / step * sw[k]) ** 2
        var_c += ((cb - c_star) / step * sw[k]) ** 2
    return Peak(t_star, c_star, math.sqrt(var_c), math.sqrt(var_t))


@dataclass
class Crossing:
    tc: float
    err: float
    pairs: list[tuple[int, int, float]] = field(default_factory=list)
    flagged: bool = False
    reason: str = ""


def _pair_crossing(t, u_small, e_small, u_large, e_large, z: float, abs_tol: float):
    """Temperature where the larger system's Binder cumulant drops below the smaller one's."""
    d = u_large - u_small
    sig = np.hypot(e_small, e_large)
    thresh = np.maximum(z * sig, abs_tol)
    sign = np.where(d > thresh, 1, np.where(d < -thresh, -1, 0))
    pos = np.flatnonzero(sign > 0)
    if pos.size == 0:
        return None
    neg_after = np.flatnonzero((sign < 0) & (np.arange(len(d)) > pos[0]))
    if neg_after.size == 0:
        return None
    hi = int(neg_after[0])
    lo = int(pos[pos < hi][-1])
    found = []
    for k in range(lo, hi):
        if d[k] >= 0 > d[k + 1] or (d[k] > 0 and d[k + 1] == 0):
            frac = d[k] / (d[k] - d[k + 1])
            tc = t[k] + frac * (t[k + 1] - t[k])
            slope = (d[k + 1] - d[k]) / (t[k + 1] - t[k])
            s = math.hypot(sig[k], sig[k + 1]) / abs(slope) if slope != 0 else 0.0
            found.append((tc, s))
    if not found:
        return None
    tcs = np.array([f[0] for f in found])
    return float(tcs.mean()), max(float(np.ptp(tcs)) / 2, max(f[1] for f in found))


def binder_crossing(result: ScanResult, z: float = 1.0, abs_tol: float = 1e-12) -> Crossing:
    """Combined Binder-cumulant crossing over all size pairs.

    Each pair contributes the interpolated temperature where the larger size's
    cumulant falls below the smaller size's, counted only between points where
    the difference exceeds ``z`` combined standard errors. The error is the
    larger of half the spread between pairs and the interpolation error.
    """
    t = np.asarray(result.temperatures)
    sizes = sorted(result.sizes)
    if len(sizes) < 2:
        return Crossing(math.nan, math.nan, flagged=True, reason="need at least two sizes")
    pairs = []
    errs = []
    for a in range(len(sizes)):
        for b in range(a + 1, len(sizes)):
            s, l = sizes[a], sizes[b]
            hit = _pair_crossing(
                t,
                result.column(s, "binder"),
                result.column(s, "binder_err"),
                result.column(l, "binder"),
                result.column(l, "binder_err"),
                z,
                abs_tol,
            )
            if hit is not None:
                pairs.append((s, l, hit[0]))
                errs.append(hit[1])
    if not pairs:
        return Crossing(math.nan, math.nan, flagged=True, reason="no Binder crossing inside the grid")
    tcs = np.array([p[2] for p in pairs])
    err = max(float(np.ptp(tcs)) / 2, max(errs))
    return Crossing(float(tcs.mean()), err, pairs)


@dataclass(frozen=True)
class VerdictConfig:
    growth_per_doubling: float = 0.05
    z: float = 2.0
    edge_margin: int = 1  # grid spacings the converged peak must keep from either end
    binder_z: float = 1.0


@dataclass
class Verdict:
    decision: str  # topological | not-topological | inconclusive
    tc_estimate: float | None
    tc_err: float | None
    peak_growth: list[dict]
    alpha_note: dict | None
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _alpha_note(sizes: list[int], heights: list[float]) -> dict | None:
    if len(sizes) < 2:
        return None
    slope, intercept = np.polyfit(np.log(sizes), heights, 1)
    return {"fit": "C_peak = a + b ln L", "a": float(intercept), "b": float(slope)}


def finite_size_verdict(result: ScanResult, config: VerdictConfig = VerdictConfig()) -> Verdict:
    """Decide topological / not-topological / inconclusive from a multi-size scan.

    topological: every size doubling raises the per-spin heat-capacity peak by
    more than ``growth_per_doubling`` beyond ``z`` combined standard errors,
    and successive peak shifts do not grow while the largest size's peak sits
    at least ``edge_margin`` grid spacings inside the grid.

    not-topological: no peak at all (flat curves), the peak stops growing
    between the two largest sizes, or its location drifts monotonically
    toward a grid edge without converging.

    Anything else, including a peak on a grid endpoint, is inconclusive.
    """
    sizes = sorted(result.sizes)
    if len(sizes) < 3:
        raise ValueError("the verdict needs a scan over at least 3 sizes")
    t = np.asarray(result.temperatures)
    reasons: list[str] = []
    peaks = {}
    flat = True
    for L in sizes:
        c = result.column(L, "heat_capacity")
        ce = result.column(L, "heat_capacity_err")
        spread = float(c.max() - c.min())
        if spread > max(config.z * float(ce.max()), 1e-12 * max(1.0, abs(float(c.max())))):
            flat = False
        peaks[L] = detect_peak(t, c, ce)
    table = [
        {"L": L, "t_star": p.t_star, "t_err": p.t_err, "c_star": p.c_star, "c_err": p.err, "flagged": p.flagged}
        for L, p in peaks.items()
    ]
    heights = [peaks[L].c_star for L in sizes]
    note = _alpha_note(sizes, heights)
    if flat:
        return Verdict("not-topological", None, None, table, note, ["heat capacity shows no peak"])
    flagged = [L for L in sizes if peaks[L].flagged]
    if flagged:
        return Verdict("inconclusive", None, None, table, note, [f"peak on grid endpoint for sizes {flagged}"])

    growth_ok = True
    for a, b in zip(sizes, sizes[1:]):
        pa, pb = peaks[a], peaks[b]
        required = pa.c_star * (1 + config.growth_per_doubling) ** math.log2(b / a)
        margin = pb.c_star - required
        sigma = math.hypot(pa.err, pb.err)
        if not margin > config.z * sigma:
            growth_ok = False
            reasons.append(f"peak growth {a}->{b} below threshold ({pb.c_star:.6g} vs required {required:.6g})")
    last, prev = peaks[sizes[-1]], peaks[sizes[-2]]
    saturated = last.c_star - prev.c_star <= config.z * math.hypot(last.err, prev.err)

    shifts = [peaks[b].t_star - peaks[a].t_star for a, b in zip(sizes, sizes[1:])]
    shift_errs = [math.hypot(_finite(peaks[a].t_err), _finite(peaks[b].t_err)) for a, b in zip(sizes, sizes[1:])]
    converging = all(
        abs(shifts[k + 1]) <= abs(shifts[k]) + config.z * math.hypot(shift_errs[k], shift_errs[k + 1])
        for k in range(len(shifts) - 1)
    )
    spacing_lo = t[config.edge_margin] - t[0]
    spacing_hi = t[-1] - t[-1 - config.edge_margin]
    interior = t[0] + spacing_lo <= last.t_star <= t[-1] - spacing_hi
    if not converging:
        reasons.append("peak locations do not converge")
    if not interior:
        reasons.append("largest-size peak too close to the grid edge")
    monotone = all(s < 0 for s in shifts) or all(s > 0 for s in shifts)
    widening = all(abs(shifts[k + 1]) >= abs(shifts[k]) for k in range(len(shifts) - 1))
    drifting = monotone and widening

    if growth_ok and converging and interior:
        crossing = binder_crossing(result, z=config.binder_z)
        if not crossing.flagged:
            tc, tc_err = crossing.tc, crossing.err
            reasons.append(f"Tc from Binder crossings {crossing.pairs}")
        else:
            tc, tc_err = last.t_star, _finite(last.t_err)
            reasons.append("Tc from the largest-size heat-capacity peak")
        return Verdict("topological", tc, tc_err, table, note, reasons)
    if saturated:
        reasons.append("peak height does not grow between the two largest sizes")
        return Verdict("not-topological", None, None, table, note, reasons)
    if drifting:
        reasons.append("peak location drifts toward a grid edge")
        return Verdict("not-topological", None, None, table, note, reasons)
    return Verdict("inconclusive", None, None, table, note, reasons)


def _finite(x: float) -> float:
    return 0.0 if not math.isfinite(x) else x
