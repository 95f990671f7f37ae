"""Kinetostatic compliance: forces -> link wrenches -> joint torques -> step.

Per iteration, atom forces are summed into per-link wrenches (force plus
moment about the amino-terminus anchor, which sits at the global
origin).  Joint torques follow by aggregating generalized forces over
the subtree each joint drives: a running suffix along the backbone, with
each side branch's own suffix folded in at its branch link.  That turns
the quadratic contribution scan into a linear pass.  The compliance step
moves every unfrozen joint proportionally to its torque, normalized so
the largest step is exactly kappa degrees.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .chain import Chain, Conformation, KinematicState, apply_deltas, kinematic_state
from .errors import ConfigurationError, KinefoldError
from .forcefield import (
    AtomParams,
    DielectricModel,
    EnergyBreakdown,
    accumulate_pair_forces,
    elec_pair_quantities,
    extract_pairs,
    vdw_pair_quantities,
)
from .solvation import (
    SampleSphere,
    SolvationConfig,
    check_cav_cutoff,
    generate_samples,
    sasa_pass,
    solvation_forces,
)
from .spatial import (
    Cutoffs,
    GridConfig,
    NeighborTable,
    build_grid,
    build_neighbor_table,
    brute_force_pairs,
    filtered_lists,
)


# --------------------------------------------------------------------------
# field evaluation (one conformation -> forces, energies, phase timings)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldConfig:
    solvation: bool = False
    dielectric: DielectricModel = field(default_factory=DielectricModel)
    grid: GridConfig = field(default_factory=GridConfig)
    solvation_cfg: SolvationConfig = field(default_factory=SolvationConfig)
    use_hash: bool = True

    @property
    def cutoffs(self) -> Cutoffs:
        return self.grid.cutoffs

    def active_cutoff(self) -> float:
        c = self.cutoffs
        return max(c.elec, c.vdw, c.cav) if self.solvation else max(c.elec, c.vdw)


@dataclass
class FieldResult:
    forces: np.ndarray
    energy: EnergyBreakdown
    timings: dict[str, float]
    sasa: object = None


@dataclass
class Field:
    """Bundles parameters, pair weights, and options for one system."""

    params: AtomParams
    weights: object
    config: FieldConfig = field(default_factory=FieldConfig)
    _sphere: SampleSphere | None = None

    def sphere(self) -> SampleSphere:
        if self._sphere is None or self._sphere.n != self.config.solvation_cfg.samples:
            cfg = self.config.solvation_cfg
            self._sphere = generate_samples(cfg.samples, cfg.sampling, cfg.seed)
        return self._sphere

    def _neighbor_table(self, positions) -> tuple[NeighborTable, float]:
        """Superset table at the largest active cutoff; returns build time."""
        t0 = time.perf_counter()
        if self.config.use_hash:
            grid = build_grid(positions, self.config.grid)
            table = build_neighbor_table(grid, self.config.active_cutoff())
        else:
            table = _brute_table(positions, self.config.active_cutoff())
        return table, time.perf_counter() - t0

    def evaluate(self, positions, *, energy_only: bool = False) -> FieldResult:
        cfg = self.config
        cut = cfg.cutoffs
        table, t_hash = self._neighbor_table(positions)
        n = len(positions)

        # one pair extraction serves both terms: exact per-term filtering
        # is a cheap mask over the shared (i, j, d) arrays
        t0 = time.perf_counter()
        i, j, d = extract_pairs(positions, table, max(cut.elec, cut.vdw))
        forces = np.zeros((n, 3))
        ke = d <= cut.elec
        we = self.weights.weights_for(i[ke], j[ke], "elec")
        e_elec, mag_e = elec_pair_quantities(self.params, i[ke], j[ke], d[ke],
                                             we, cfg.dielectric)
        g_elec = float(e_elec.sum())
        kv = d <= cut.vdw
        wv = self.weights.weights_for(i[kv], j[kv], "vdw")
        e_vdw, mag_v = vdw_pair_quantities(self.params, i[kv], j[kv], d[kv], wv)
        g_vdw = float(e_vdw.sum())
        if not energy_only:
            forces += accumulate_pair_forces(n, positions, i[ke], j[ke], d[ke], mag_e)
            forces += accumulate_pair_forces(n, positions, i[kv], j[kv], d[kv], mag_v)
        t_force = time.perf_counter() - t0

        g_cav = 0.0
        sasa = None
        t_solv = 0.0
        if cfg.solvation:
            t0 = time.perf_counter()
            check_cav_cutoff(self.params, cfg.solvation_cfg, cut.cav)
            cav_lists = filtered_lists(table, positions, cut.cav)
            sasa, states = sasa_pass(positions, self.params, cav_lists,
                                     self.sphere(), cfg.solvation_cfg)
            g_cav = sasa.g_cav
            if not energy_only:
                forces += solvation_forces(positions, self.params, cav_lists,
                                           self.sphere(), states, cfg.solvation_cfg)
            t_solv = time.perf_counter() - t0

        energy = EnergyBreakdown(g_elec=g_elec, g_vdw=g_vdw, g_cav=g_cav)
        return FieldResult(
            forces=forces,
            energy=energy,
            timings={"hash": t_hash, "force": t_force, "solvation": t_solv},
            sasa=sasa,
        )


def _brute_table(positions, d_cut: float) -> NeighborTable:
    """All-pairs neighbor lists: the quadratic baseline (no hashing)."""
    n = len(positions)
    i, j, _ = brute_force_pairs(positions, d_cut)
    both_i = np.concatenate([i, j])
    both_j = np.concatenate([j, i])
    order = np.lexsort((both_j, both_i))
    both_i, both_j = both_i[order], both_j[order]
    offsets = np.searchsorted(both_i, np.arange(n + 1))
    return NeighborTable(d_cut=float(d_cut), offsets=offsets, neighbors=both_j)


# --------------------------------------------------------------------------
# wrenches and joint torques
# --------------------------------------------------------------------------

@dataclass
class LinkWrenches:
    """Net force and moment-about-origin per link (ground included)."""

    force: np.ndarray    # (n_links, 3)
    torque: np.ndarray   # (n_links, 3)


def link_wrenches(chain: Chain, positions, forces) -> LinkWrenches:
    positions = np.asarray(positions, float)
    forces = np.asarray(forces, float)
    n_links = len(chain.links)
    moments = np.cross(positions, forces)
    f_out = np.zeros((n_links, 3))
    t_out = np.zeros((n_links, 3))
    link_of = chain.atom_link
    for axis in range(3):
        f_out[:, axis] = np.bincount(link_of, weights=forces[:, axis], minlength=n_links)
        t_out[:, axis] = np.bincount(link_of, weights=moments[:, axis], minlength=n_links)
    return LinkWrenches(force=f_out, torque=t_out)


@dataclass
class JointTorques:
    tau: np.ndarray  # per dof, kcal/mol per radian of joint rotation


def joint_torques(chain: Chain, conf: Conformation, wrenches: LinkWrenches,
                  state: KinematicState | None = None) -> JointTorques:
    """Suffix-aggregated joint torques, O(l) total."""
    if state is None:
        state = kinematic_state(chain, conf)
    m = chain.n_residues
    tau = np.zeros(chain.n_dof)

    def project(link_index: int, f_agg, t_agg) -> float:
        u = state.axes[link_index]
        p = state.joint_points[link_index]
        return float(u @ t_agg - np.cross(u, p) @ f_agg)

    # side branches: plain suffix within the branch, total folded into phi
    side_total_f = np.zeros((m, 3))
    side_total_t = np.zeros((m, 3))
    by_residue: dict[int, list[int]] = {}
    for li, link in enumerate(chain.links):
        if link.kind == "chi":
            by_residue.setdefault(link.residue, []).append(li)
    for res, lis in by_residue.items():
        lis.sort(key=lambda li: chain.links[li].chi_index)
        f_agg = np.zeros(3)
        t_agg = np.zeros(3)
        for li in reversed(lis):
            f_agg += wrenches.force[li]
            t_agg += wrenches.torque[li]
            tau[chain.links[li].dof] = project(li, f_agg, t_agg)
        side_total_f[res] = f_agg
        side_total_t[res] = t_agg

    # backbone suffix from the carboxyl end back to the anchor
    backbone = [li for li, l in enumerate(chain.links) if l.kind in ("phi", "psi")]
    backbone.sort(key=lambda li: chain.links[li].dof)
    f_agg = np.zeros(3)
    t_agg = np.zeros(3)
    for li in reversed(backbone):
        link = chain.links[li]
        f_agg += wrenches.force[li]
        t_agg += wrenches.torque[li]
        if link.kind == "phi":
            f_agg += side_total_f[link.residue]
            t_agg += side_total_t[link.residue]
        tau[link.dof] = project(li, f_agg, t_agg)
    return JointTorques(tau=tau)


# --------------------------------------------------------------------------
# compliance stepping and the folding loop
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StepConfig:
    kappa: float = 0.5              # degrees; the largest per-step joint move
    max_iters: int = 2000
    torque_tol: float = 0.0         # absolute |tau_max| stop, 0 disables
    torque_tol_rel: float = 1e-4    # fraction of the initial |tau_max|
    energy_window: int = 20
    energy_tol: float = 0.02        # kcal/mol change across the window
    snapshot_every: int = 50

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigurationError("kappa must be positive")
        if min(self.torque_tol, self.torque_tol_rel, self.energy_tol) < 0:
            raise ConfigurationError("tolerances must be non-negative")


def kcm_step(torques: JointTorques, conf: Conformation,
             config: StepConfig) -> tuple[Conformation, np.ndarray]:
    """One normalized compliance step; frozen joints and zero fields stay."""
    free = ~conf.frozen
    if not free.any():
        raise ConfigurationError("cannot step with every joint frozen")
    tau_max = float(np.max(np.abs(torques.tau[free])))
    if tau_max == 0.0:
        return conf, np.zeros_like(torques.tau)
    deltas = np.where(free, config.kappa * torques.tau / tau_max, 0.0)
    return apply_deltas(conf, deltas), deltas


@dataclass
class IterationRecord:
    index: int
    energy: EnergyBreakdown
    tau_max: float
    timings: dict[str, float]
    theta: np.ndarray


@dataclass
class Trajectory:
    records: list[IterationRecord]
    snapshots: list[tuple[int, Conformation]]
    final: Conformation
    converged: bool
    reason: str

    @property
    def iterations(self) -> int:
        return len(self.records)

    def energies(self) -> np.ndarray:
        return np.array([r.energy.g_total for r in self.records])


def fold(chain: Chain, conf: Conformation, fld: Field,
         step: StepConfig = StepConfig()) -> Trajectory:
    """Iterate kinematics -> field -> torques -> compliance step until a
    stop criterion fires: torque tolerance, energy plateau, or the
    iteration cap."""
    records: list[IterationRecord] = []
    snapshots: list[tuple[int, Conformation]] = []
    tau0 = None
    converged = False
    reason = "max_iters"
    for it in range(step.max_iters):
        t0 = time.perf_counter()
        state = kinematic_state(chain, conf)
        t_fk = time.perf_counter() - t0
        try:
            result = fld.evaluate(state.positions)
        except KinefoldError as exc:
            raise type(exc)(f"aborted at iteration {it}: {exc}") from exc
        t0 = time.perf_counter()
        wr = link_wrenches(chain, state.positions, result.forces)
        torques = joint_torques(chain, conf, wr, state)
        t_torque = time.perf_counter() - t0

        free = ~conf.frozen
        tau_max = float(np.max(np.abs(torques.tau[free]))) if free.any() else 0.0
        timings = dict(result.timings, fk=t_fk, torque=t_torque)
        records.append(IterationRecord(it, result.energy, tau_max, timings,
                                       conf.theta.copy()))
        if step.snapshot_every and it % step.snapshot_every == 0:
            snapshots.append((it, conf))

        if tau0 is None:
            tau0 = tau_max
        if tau_max == 0.0:
            converged, reason = True, "torque-free"
            break
        if step.torque_tol > 0 and tau_max < step.torque_tol:
            converged, reason = True, "torque tolerance"
            break
        if step.torque_tol_rel > 0 and tau_max < step.torque_tol_rel * tau0:
            converged, reason = True, "torque tolerance (relative)"
            break
        w = step.energy_window
        if w and it >= w:
            drift = abs(records[it].energy.g_total - records[it - w].energy.g_total)
            if drift < step.energy_tol:
                converged, reason = True, "energy plateau"
                break
        conf, _ = kcm_step(torques, conf, step)
    return Trajectory(records, snapshots, conf, converged, reason)


# --------------------------------------------------------------------------
# scans
# --------------------------------------------------------------------------

def single_point(chain: Chain, conf: Conformation, fld: Field) -> EnergyBreakdown:
    positions = kinematic_state(chain, conf).positions
    return fld.evaluate(positions, energy_only=True).energy


@dataclass
class ScanGrid:
    axes: list[np.ndarray]          # angle values per scanned dof
    dofs: list[int]
    g_elec: np.ndarray
    g_vdw: np.ndarray
    g_cav: np.ndarray

    @property
    def g_total(self) -> np.ndarray:
        return self.g_elec + self.g_vdw + self.g_cav


def ramachandran_scan(chain: Chain, residue: int, resolution: int,
                      fld: Field, base: Conformation | None = None) -> ScanGrid:
    """Energy over a (phi, psi) grid for one residue, other DOFs fixed."""
    if resolution < 2:
        raise ConfigurationError("grid resolution must be at least 2")
    base = base or chain.conf_zp()
    phis = np.linspace(-180.0, 180.0, resolution, endpoint=False)
    psis = np.linspace(-180.0, 180.0, resolution, endpoint=False)
    return _sweep(chain, fld, base,
                  [chain.dof_phi(residue), chain.dof_psi(residue)],
                  [phis + 180.0, psis + 180.0], [phis, psis])


def hinge_scan(chain: Chain, hinge_dofs: list[int], half_range: float,
               steps: int, fld: Field, base: Conformation) -> ScanGrid:
    """Sweep hinge dihedrals about their base values, everything else frozen."""
    for dof in hinge_dofs:
        if not 0 <= dof < chain.n_dof:
            raise ConfigurationError(f"hinge joint {dof} out of range")
    if not 1 <= len(hinge_dofs) <= 2:
        raise ConfigurationError("hinge scans support one or two joints")
    if steps < 1:
        raise ConfigurationError("steps must be positive")
    offsets = (np.linspace(-half_range, half_range, steps)
               if steps > 1 else np.zeros(1))
    thetas = [base.theta[d] + offsets for d in hinge_dofs]
    labels = [offsets for _ in hinge_dofs]
    return _sweep(chain, fld, base, list(hinge_dofs), thetas, labels)


def _sweep(chain, fld, base, dofs, theta_axes, label_axes) -> ScanGrid:
    shape = tuple(len(a) for a in theta_axes)
    g_e = np.zeros(shape)
    g_v = np.zeros(shape)
    g_c = np.zeros(shape)
    for idx in np.ndindex(*shape):
        theta = base.theta.copy()
        for d, ax, k in zip(dofs, theta_axes, idx):
            theta[d] = ax[k]
        conf = replace(base, theta=theta)
        e = single_point(chain, conf, fld)
        g_e[idx], g_v[idx], g_c[idx] = e.g_elec, e.g_vdw, e.g_cav
    return ScanGrid(axes=list(label_axes), dofs=list(dofs),
                    g_elec=g_e, g_vdw=g_v, g_cav=g_c)
