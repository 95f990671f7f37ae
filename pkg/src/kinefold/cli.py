"""Command-line driver: fold, Ramachandran/hinge scans, SASA, benchmarks.

Every run writes a manifest.json recording the effective configuration
(including the seed), so any artifact can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chain import Chain, Conformation, build_chain, forward_kinematics
from .errors import KinefoldError
from .forcefield import DielectricModel
from .kcm import (
    Field,
    FieldConfig,
    StepConfig,
    fold,
    hinge_scan,
    ramachandran_scan,
)
from .pdbio import RunLog, load_params, read_pdb, read_sequence, write_manifest, write_pdb
from .solvation import SolvationConfig, generate_samples, sasa_pass
from .spatial import Cutoffs, GridConfig, build_grid, build_neighbor_table, filtered_lists
from .topology import TreeWeights, build_tree


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seq", help="residue codes (one- or three-letter)")
    p.add_argument("--pdb", help="import structure, retaining geometry as read")
    p.add_argument("--out", default="run_out", help="output directory")
    p.add_argument("--params", help="force-field parameter file (default: shipped)")
    p.add_argument("--gamma-set", default="sharp", choices=("sharp", "kyte"))
    field = p.add_mutually_exclusive_group()
    field.add_argument("--vacuum", action="store_true", help="no solvation term (default)")
    field.add_argument("--water", action="store_true", help="include solvation term")
    p.add_argument("--dielectric", default="distance",
                   help="'distance' or a constant kappa value")
    p.add_argument("--cutoffs", default="9.0,5.0,8.0",
                   help="elec,vdw,cav cut-off distances in Angstroms")
    p.add_argument("--alpha", type=float, default=1.0, help="grid buckets per atom")
    p.add_argument("--no-hash", action="store_true",
                   help="use the quadratic all-pairs scan instead of the grid")
    p.add_argument("--samples", type=int, default=1024, help="sphere sample count")
    p.add_argument("--sampling", default="geodesic", choices=("geodesic", "random"),
                   help="sphere sampling scheme (random needs far larger counts)")
    p.add_argument("--delta-r", type=float, default=1e-2,
                   help="forward-difference step for solvation forces")
    p.add_argument("--probe-radius", type=float, default=1.4)
    p.add_argument("--threads", type=int, default=1, help="cap for parallel phases")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--omega", default="trans", choices=("trans", "cis"))


def _build_system(args):
    params_set = load_params(args.params)
    if args.pdb:
        record = read_pdb(args.pdb)
        chain = build_chain([], geometry=record)
    elif args.seq:
        chain = build_chain(read_sequence(args.seq), omega=args.omega)
    else:
        raise KinefoldError("need --seq or --pdb")
    atom_params = params_set.resolve(chain, args.gamma_set)
    weights = TreeWeights(build_tree(chain), params_set.weights)
    cut = [float(x) for x in args.cutoffs.split(",")]
    if len(cut) != 3:
        raise KinefoldError("--cutoffs needs three comma-separated values")
    if args.dielectric == "distance":
        dielectric = DielectricModel()
    else:
        dielectric = DielectricModel(mode="constant", kappa=float(args.dielectric))
    config = FieldConfig(
        solvation=bool(args.water),
        dielectric=dielectric,
        grid=GridConfig(alpha=args.alpha,
                        cutoffs=Cutoffs(elec=cut[0], vdw=cut[1], cav=cut[2])),
        solvation_cfg=SolvationConfig(
            probe_radius=args.probe_radius, delta_r=args.delta_r,
            samples=args.samples, sampling=args.sampling,
            seed=args.seed, threads=args.threads),
        use_hash=not args.no_hash,
    )
    return chain, Field(atom_params, weights, config)


def _manifest_payload(args, chain: Chain, extra: dict) -> dict:
    payload = {
        "version": __version__,
        "command": args.command,
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "n_atoms": chain.n_atoms,
        "n_residues": chain.n_residues,
        "n_dof": chain.n_dof,
        "seed": args.seed,
    }
    payload.update(extra)
    return payload


def _initial_conformation(chain: Chain, args, rng) -> Conformation:
    mode = args.init
    if mode == "zp" or (mode == "native" and chain.source == "imported"):
        conf = chain.conf_zp()
    elif mode.startswith("uniform:"):
        parts = [float(x) for x in mode.split(":", 1)[1].split(",")]
        phi, psi = parts if len(parts) == 2 else (parts[0], parts[0])
        conf = chain.conf_from_backbone(phi, psi)
    elif mode == "random":
        lim = args.angle_range
        phi = rng.uniform(-lim, lim, chain.n_residues)
        psi = rng.uniform(-lim, lim, chain.n_residues)
        conf = chain.conf_from_backbone(phi, psi)
    elif mode == "native":
        raise KinefoldError("init mode 'native' needs --pdb input")
    else:
        raise KinefoldError(f"unknown init mode {mode!r}")
    if args.freeze:
        conf = conf.freeze([int(x) for x in args.freeze.split(",")])
    return conf


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_fold(args) -> int:
    chain, field = _build_system(args)
    rng = np.random.default_rng(args.seed)
    step = StepConfig(
        kappa=args.kappa, max_iters=args.max_iters,
        torque_tol=args.torque_tol, torque_tol_rel=args.torque_tol_rel,
        energy_window=args.energy_window, energy_tol=args.energy_tol,
        snapshot_every=args.snapshot_every,
    )
    out = Path(args.out)
    runs = max(args.batch, 1)
    summary_rows = []
    for run in range(runs):
        conf = _initial_conformation(chain, args, rng)
        traj = fold(chain, conf, field, step)
        run_dir = out if runs == 1 else out / f"run_{run:04d}"
        log = RunLog(run_dir)
        log.write_trajectory(chain, traj)
        for it, snap in traj.snapshots:
            log.snapshot(chain, forward_kinematics(chain, snap), f"{it:06d}")
        write_pdb(chain, forward_kinematics(chain, traj.final), run_dir / "final.pdb")
        phi, psi, _ = chain.dihedrals_from_theta(traj.final)
        summary_rows.append([
            run, traj.iterations, traj.converged, traj.reason,
            f"{traj.records[-1].energy.g_total:.6g}",
            f"{np.mean(phi[1:]):.2f}", f"{np.mean(psi[:-1]):.2f}",
        ])
        print(f"run {run}: {traj.iterations} iterations, "
              f"converged={traj.converged} ({traj.reason}), "
              f"G_total={traj.records[-1].energy.g_total:.3f} kcal/mol")
    if runs > 1:
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "iterations", "converged", "reason",
                        "g_total", "mean_phi", "mean_psi"])
            w.writerows(summary_rows)
    write_manifest(out, _manifest_payload(args, chain, {"runs": runs}))
    return 0


def cmd_scan_rama(args) -> int:
    chain, field = _build_system(args)
    grid = ramachandran_scan(chain, args.residue, args.grid, field)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "rama.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "psi", "g_elec", "g_vdw", "g_cav", "g_total"])
        for i, phi in enumerate(grid.axes[0]):
            for j, psi in enumerate(grid.axes[1]):
                w.writerow([phi, psi, f"{grid.g_elec[i, j]:.10g}",
                            f"{grid.g_vdw[i, j]:.10g}", f"{grid.g_cav[i, j]:.10g}",
                            f"{grid.g_total[i, j]:.10g}"])
    k = np.unravel_index(np.argmin(grid.g_total), grid.g_total.shape)
    print(f"grid {args.grid}x{args.grid}; minimum {grid.g_total[k]:.3f} kcal/mol "
          f"at phi={grid.axes[0][k[0]]:.1f}, psi={grid.axes[1][k[1]]:.1f}")
    write_manifest(out, _manifest_payload(args, chain, {"residue": args.residue}))
    return 0


def cmd_scan_hinge(args) -> int:
    chain, field = _build_system(args)
    dofs = []
    for part in args.hinges.split(","):
        res_s, kind = part.split(":")
        res = int(res_s) - 1
        dofs.append(chain.dof_phi(res) if kind == "phi" else chain.dof_psi(res))
    base = chain.conf_zp()
    base = base.freeze([d for d in range(chain.n_dof) if d not in dofs])
    grid = hinge_scan(chain, dofs, args.range, args.steps, field, base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "hinge.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"offset_{d}" for d in dofs]
                   + ["g_elec", "g_vdw", "g_cav", "g_total"])
        for idx in np.ndindex(*grid.g_total.shape):
            row = [grid.axes[k][idx[k]] for k in range(len(dofs))]
            w.writerow(row + [f"{grid.g_elec[idx]:.10g}", f"{grid.g_vdw[idx]:.10g}",
                              f"{grid.g_cav[idx]:.10g}", f"{grid.g_total[idx]:.10g}"])
    k = np.unravel_index(np.argmin(grid.g_total), grid.g_total.shape)
    offs = ", ".join(f"{float(grid.axes[d][k[d]]):+.2f}" for d in range(len(dofs)))
    print(f"hinge grid minimum {grid.g_total[k]:.3f} kcal/mol at offsets [{offs}] deg")
    write_manifest(out, _manifest_payload(args, chain, {"hinge_dofs": dofs}))
    return 0


def cmd_sasa(args) -> int:
    chain, field = _build_system(args)
    positions = forward_kinematics(chain, chain.conf_zp())
    cfg = field.config
    grid = build_grid(positions, cfg.grid)
    table = build_neighbor_table(grid, cfg.cutoffs.cav)
    lists = filtered_lists(table, positions, cfg.cutoffs.cav)
    sphere = generate_samples(cfg.solvation_cfg.samples, cfg.solvation_cfg.sampling,
                              cfg.solvation_cfg.seed)
    result, _ = sasa_pass(positions, field.params, lists, sphere, cfg.solvation_cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sasa.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["atom", "name", "residue", "f_exp", "a_exp"])
        for i in range(chain.n_atoms):
            w.writerow([i, chain.atom_names[i], int(chain.atom_residue[i]),
                        f"{result.f_exp[i]:.10g}", f"{result.a_exp[i]:.10g}"])
    print(f"total exposed area {result.a_exp.sum():.3f} A^2, "
          f"G_cav {result.g_cav:.4f} kcal/mol over {chain.n_atoms} atoms")
    write_manifest(out, _manifest_payload(args, chain, {"samples": sphere.n}))
    return 0


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    params_set = load_params(args.params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    print(f"{'m':>6} {'atoms':>7} {'t_hash':>10} {'t_force_h':>11} "
          f"{'t_force_b':>11} {'t_solv':>10}")
    for m in sizes:
        chain = build_chain(["ALA"] * m)
        atom_params = params_set.resolve(chain, args.gamma_set)
        weights = TreeWeights(build_tree(chain), params_set.weights)
        solvation = bool(args.water)
        base_cfg = FieldConfig(
            solvation=solvation,
            solvation_cfg=SolvationConfig(samples=args.samples, threads=args.threads),
        )
        fld_h = Field(atom_params, weights, base_cfg)
        fld_b = Field(atom_params, weights,
                      dataclasses.replace(base_cfg, use_hash=False))
        positions = forward_kinematics(chain, chain.conf_zp())
        t_hash = t_force_h = t_force_b = t_solv = np.inf
        for _ in range(args.repeat):
            r = fld_h.evaluate(positions)
            t_hash = min(t_hash, r.timings["hash"])
            t_force_h = min(t_force_h, r.timings["force"])
            t_solv = min(t_solv, r.timings["solvation"])
            rb = fld_b.evaluate(positions)
            # quadratic mode has no hashing phase: neighbor scan is force work
            t_force_b = min(t_force_b, rb.timings["force"] + rb.timings["hash"])
        rows.append([m, chain.n_atoms, t_hash, t_force_h, t_force_b, t_solv])
        print(f"{m:6d} {chain.n_atoms:7d} {t_hash:10.5f} {t_force_h:11.5f} "
              f"{t_force_b:11.5f} {t_solv:10.5f}")
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "atoms", "t_hash_build", "t_force_hashed",
                    "t_force_brute", "t_solvation"])
        w.writerows([[r[0], r[1]] + [f"{x:.6f}" for x in r[2:]] for r in rows])
    write_manifest(out, {"version": __version__, "command": "bench",
                         "arguments": {k: v for k, v in vars(args).items()
                                       if k != "func"}})
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="kinefold",
        description="Kinetostatic-compliance folding simulator",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fold", help="run the compliance folding loop")
    _common_flags(p)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--torque-tol", type=float, default=0.0)
    p.add_argument("--torque-tol-rel", type=float, default=1e-4)
    p.add_argument("--energy-window", type=int, default=20)
    p.add_argument("--energy-tol", type=float, default=0.02)
    p.add_argument("--snapshot-every", type=int, default=50)
    p.add_argument("--init", default="zp",
                   help="zp | uniform:PHI,PSI | random | native")
    p.add_argument("--angle-range", type=float, default=90.0,
                   help="half-range for random initial angles")
    p.add_argument("--freeze", help="comma-separated dof indices to freeze")
    p.add_argument("--batch", type=int, default=1,
                   help="number of independent runs (random inits)")
    p.set_defaults(func=cmd_fold)

    p = sub.add_parser("scan-rama", help="phi/psi energy grid for one residue")
    _common_flags(p)
    p.add_argument("--residue", type=int, default=1, help="0-based residue index")
    p.add_argument("--grid", type=int, default=36)
    p.set_defaults(func=cmd_scan_rama)

    p = sub.add_parser("scan-hinge", help="energy sweep about hinge dihedrals")
    _common_flags(p)
    p.add_argument("--hinges", required=True,
                   help="e.g. '21:phi,125:psi' (1-based residues)")
    p.add_argument("--range", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=5)
    p.set_defaults(func=cmd_scan_hinge)

    p = sub.add_parser("sasa", help="per-atom solvent-accessible surface areas")
    _common_flags(p)
    p.set_defaults(func=cmd_sasa)

    p = sub.add_parser("bench", help="per-phase timings, hashed vs quadratic")
    _common_flags(p)
    p.add_argument("--sizes", default="50,100,200", help="residue counts")
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except KinefoldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
