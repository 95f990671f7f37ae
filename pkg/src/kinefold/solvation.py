"""Solvent-accessible surface area and its gradient by sample enumeration.

Each atom carries an offset sphere (van der Waals radius plus probe
radius).  One shared quasi-uniform unit-sphere sampling is mapped onto
every atom; a sample point is exposed when no neighbor offset sphere
covers it, and the exposure ratio approximates the exposed area
fraction.  Per sample point we track a clamped overlap count:

  0         exposed; displacing any neighbor may cover it
  1         critically overlapped; only the recorded coverer matters
  2 or more multiply overlapped; no single displacement changes exposure

The force pass perturbs neighbors by a forward difference ``delta_r``
along each axis and converts exposure flips into paired, equal and
opposite force contributions of magnitude ``4 pi gamma_i R_off_i^2 /
(N delta_r)``.  Contributions accumulate in 64-bit fixed point with a
power-of-two quantum, so the pair writes cancel bitwise: total momentum
is exactly zero and results are independent of accumulation order
(and therefore of the thread schedule).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

MIN_SAMPLES = 12
_FIXED_POINT_BITS = 36


@dataclass(frozen=True)
class SolvationConfig:
    probe_radius: float = 1.4
    delta_r: float = 1e-2
    samples: int = 1024
    sampling: str = "geodesic"   # or "random" (testing aid; needs larger N)
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if min(self.probe_radius, self.delta_r) <= 0 or self.samples < MIN_SAMPLES:
            raise ConfigurationError(
                "probe radius and delta_r must be positive, samples >= 12"
            )


@dataclass(frozen=True)
class SampleSphere:
    """Unit-sphere sample set shared by all atoms."""

    points: np.ndarray
    mode: str = "geodesic"

    @property
    def n(self) -> int:
        return len(self.points)


def generate_samples(n: int, mode: str = "geodesic", seed: int = 0) -> SampleSphere:
    """Deterministic quasi-uniform sampling: latitude orbits with uniform
    angular spacing, points per orbit proportional to circumference."""
    if n < MIN_SAMPLES:
        raise ConfigurationError(f"need at least {MIN_SAMPLES} sample points, got {n}")
    if mode == "random":
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(n, 3))
        return SampleSphere(v / np.linalg.norm(v, axis=1, keepdims=True), mode)
    if mode != "geodesic":
        raise ConfigurationError(f"unknown sampling mode {mode!r}")
    n_orb = max(2 * int(round(math.sqrt(math.pi * n) / 4.0)), 2)
    polar = (np.arange(n_orb) + 0.5) * math.pi / n_orb
    weights = np.sin(polar)
    ideal = n * weights / weights.sum()
    counts = np.floor(ideal).astype(int)
    remainder = ideal - counts
    short = n - counts.sum()
    counts[np.argsort(-remainder, kind="stable")[:short]] += 1
    pts = np.empty((n, 3))
    at = 0
    golden = 0.618033988749895
    for t in range(n_orb):
        c = counts[t]
        if c == 0:
            continue
        az = 2.0 * math.pi * (np.arange(c) + (t * golden) % 1.0) / c
        s, z = math.sin(polar[t]), math.cos(polar[t])
        pts[at : at + c, 0] = s * np.cos(az)
        pts[at : at + c, 1] = s * np.sin(az)
        pts[at : at + c, 2] = z
        at += c
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return SampleSphere(pts, mode)


@dataclass
class ExposureStates:
    """Per (atom, sample) clamped overlap count and critical neighbor."""

    counts: np.ndarray    # uint8, values 0/1/2
    critical: np.ndarray  # int32 neighbor index, -1 unless count == 1


@dataclass(frozen=True)
class SasaResult:
    f_exp: np.ndarray   # exposure ratio per atom, multiples of 1/N
    a_exp: np.ndarray   # exposed area per atom, A^2
    g_cav: float        # nonpolar solvation free energy, kcal/mol


def offset_radii(params, config: SolvationConfig) -> np.ndarray:
    return params.R + config.probe_radius


def check_cav_cutoff(params, config: SolvationConfig, d_cut_cav: float) -> None:
    """Truncation at d_cut_cav is exact only if no two offset spheres that
    intersect are farther apart; violating the bound is a setup error."""
    needed = 2.0 * (float(np.max(params.R)) + config.probe_radius)
    if needed > d_cut_cav:
        raise ConfigurationError(
            f"cavity cutoff {d_cut_cav} A below 2(R_max + probe) = {needed:.2f} A"
        )


def _atom_chunks(n: int, threads: int):
    threads = max(1, min(threads, n)) if n else 1
    bounds = np.linspace(0, n, threads + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def sasa_pass(positions, params, neighbors, sphere: SampleSphere,
              config: SolvationConfig = SolvationConfig()):
    """Exposure counting: returns (SasaResult, ExposureStates).

    ``neighbors`` holds one sorted index array per atom (cavity-cutoff
    filtered); sorting makes the recorded critical neighbor the lowest
    overlapping index, deterministically.
    """
    positions = np.asarray(positions, float)
    n = len(positions)
    nq = sphere.n
    r_off = offset_radii(params, config)
    r_off2 = r_off * r_off
    counts = np.zeros((n, nq), np.uint8)
    critical = np.full((n, nq), -1, np.int32)
    covered = np.zeros(n, np.int64)

    def work(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            nb = neighbors[i]
            if len(nb) == 0:
                continue
            pts = positions[i] + r_off[i] * sphere.points
            diff = pts[:, None, :] - positions[nb][None, :, :]
            cov = (diff * diff).sum(-1) <= r_off2[nb][None, :]
            cnt = cov.sum(1)
            np.minimum(cnt, 2, out=cnt)
            counts[i] = cnt
            hit = cnt == 1
            if hit.any():
                first = np.argmax(cov[hit], axis=1)
                critical[i, hit] = nb[first]
            covered[i] = int((cnt > 0).sum())

    chunks = _atom_chunks(n, config.threads)
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(lambda ab: work(*ab), chunks))
    else:
        for lo, hi in chunks:
            work(lo, hi)

    f_exp = (nq - covered) / float(nq)
    a0 = 4.0 * math.pi * r_off2
    a_exp = f_exp * a0
    g_cav = float(np.sum(params.gamma * a_exp))
    return SasaResult(f_exp, a_exp, g_cav), ExposureStates(counts, critical)


def _force_quantum(params, r_off: np.ndarray, nq: int, delta_r: float):
    """Per-atom event magnitudes as integer multiples of a binary quantum."""
    delta = 4.0 * math.pi * params.gamma * r_off * r_off / (nq * delta_r)
    peak = float(np.max(np.abs(delta))) if len(delta) else 0.0
    if peak == 0.0:
        return np.zeros(len(delta), np.int64), 1.0
    quantum = 2.0 ** (math.floor(math.log2(peak)) - _FIXED_POINT_BITS)
    return np.round(delta / quantum).astype(np.int64), quantum


def solvation_forces(positions, params, neighbors, sphere: SampleSphere,
                     states: ExposureStates,
                     config: SolvationConfig = SolvationConfig()) -> np.ndarray:
    """Forward-difference solvation forces from precomputed exposure states.

    Exposed samples test every neighbor displaced by +delta_r along each
    axis; critically overlapped samples test only their recorded
    coverer.  Multiply overlapped samples cannot change exposure under a
    single displacement and are skipped.
    """
    positions = np.asarray(positions, float)
    n = len(positions)
    nq = sphere.n
    r_off = offset_radii(params, config)
    r_off2 = r_off * r_off
    w_int, quantum = _force_quantum(params, r_off, nq, config.delta_r)
    dr = config.delta_r

    def work(lo: int, hi: int) -> np.ndarray:
        acc = np.zeros((n, 3), np.int64)
        for i in range(lo, hi):
            if w_int[i] == 0:
                continue
            nb = neighbors[i]
            if len(nb) == 0:
                continue
            pts = positions[i] + r_off[i] * sphere.points
            ci = states.counts[i]
            k0 = np.flatnonzero(ci == 0)
            k1 = np.flatnonzero(ci == 1)
            for s in range(3):
                if k0.size:
                    shifted = positions[nb].copy()
                    shifted[:, s] += dr
                    diff = pts[k0][:, None, :] - shifted[None, :, :]
                    cov = (diff * diff).sum(-1) <= r_off2[nb][None, :]
                    per_nb = cov.sum(0)
                    total = int(per_nb.sum())
                    if total:
                        acc[i, s] -= total * w_int[i]
                        hits = per_nb > 0
                        np.add.at(acc[:, s], nb[hits], per_nb[hits] * w_int[i])
                if k1.size:
                    jo = states.critical[i, k1]
                    shifted = positions[jo]  # fancy index: already a copy
                    shifted[:, s] += dr
                    d = pts[k1] - shifted
                    freed = (d * d).sum(-1) > r_off2[jo]
                    if freed.any():
                        jf = jo[freed]
                        acc[i, s] += int(freed.sum()) * w_int[i]
                        np.subtract.at(acc[:, s], jf, w_int[i])
        return acc

    chunks = _atom_chunks(n, config.threads)
    if len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda ab: work(*ab), chunks))
        acc = sum(parts)
    else:
        acc = work(*chunks[0]) if chunks else np.zeros((n, 3), np.int64)
    return acc.astype(float) * quantum
