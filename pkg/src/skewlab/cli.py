"""Command line entry point: configuration, dispatch, and report files.

Every experiment writes one JSON report plus a CSV summary and a rendered
figure into the output directory; a manifest records the config hash,
library version, wall-clock times, and a checksum for every written file.
Identical config and seed give byte-identical JSON/CSV/PGM reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__, reporting
from .errors import ConfigInvalid, DominationViolated, SkewlabError
from .experiments import (
    GridSpec,
    ari_sequence_build,
    birkhoff_density_scan,
    chain_reachability_probe,
    horseshoe_counterexample_demo,
    intermingled_basins_scan,
    transitivity_probe,
)
from .interval_maps import ClosedInterval, builtin_map
from .skew_product import (
    Absent,
    KanFiberFamily,
    TrigPolynomial,
    birkhoff_sum,
    boundary_exponents,
    boundary_interconnection,
    make_skew_product,
    mostly_contracting_check,
    perturb_flow,
)
from .torus_anosov import validate_automorphism

log = logging.getLogger("skewlab")

EXPERIMENTS = (
    "exponents", "interconnect", "transitivity", "basins",
    "density", "ari", "perturb", "counterexample",
)


@dataclass
class RunConfig:
    matrix: list
    family: dict
    experiments: list
    grid: dict
    caps: dict
    density: dict
    perturbation_tau: float
    counterexample: dict
    seed: int
    out_dir: str

    @staticmethod
    def defaults() -> dict:
        return {
            "matrix": [[2, 1], [1, 1]],
            "family": {"name": "kan", "epsilon": 0.3,
                       "psi_coeffs": [[[1, 0], 1.0, 0.0]]},
            "experiments": ["exponents", "interconnect", "transitivity",
                            "basins", "density"],
            "grid": {"base_subdivisions": [16, 16], "fiber_subdivisions": 8,
                     "iterations": 1_000_000, "samples_per_cell": 100,
                     "theta0": 0.05, "window_fraction": 0.1},
            "caps": {"period_cap": 2, "density_period_cap": 8,
                     "enumeration_cap": 200_000, "ari_m_max": 2,
                     "ari_pool_cap": 6},
            "density": {"window": [-1.0, 1.0], "eps": 0.1, "boundary": 0},
            "perturbation_tau": 0.5,
            "counterexample": {"alpha": 0.5, "anchor": 0.9},
            "seed": 7,
            "out_dir": "runs/default",
        }

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        merged = RunConfig.defaults()
        for key, value in data.items():
            if key not in merged:
                raise ConfigInvalid(f"{key}: unknown field")
            if isinstance(merged[key], dict) and isinstance(value, dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        cfg = RunConfig(**merged)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix,
            "family": self.family,
            "experiments": self.experiments,
            "grid": self.grid,
            "caps": self.caps,
            "density": self.density,
            "perturbation_tau": self.perturbation_tau,
            "counterexample": self.counterexample,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }

    def validate(self):
        try:
            rows = list(self.matrix)
            if not rows or any(len(r) != len(rows) for r in rows):
                raise ConfigInvalid("matrix: must be a square array of integers")
            for r in rows:
                for v in r:
                    if int(v) != v:
                        raise ConfigInvalid(f"matrix: entry {v} is not an integer")
        except TypeError as exc:
            raise ConfigInvalid(f"matrix: {exc}") from exc
        if self.family.get("name") != "kan":
            raise ConfigInvalid(f"family.name: unknown family {self.family.get('name')!r}")
        eps = self.family.get("epsilon", 0.0)
        if not (0.0 <= eps < 1.0):
            raise ConfigInvalid(f"family.epsilon: {eps} outside [0, 1)")
        for name in self.experiments:
            if name not in EXPERIMENTS:
                raise ConfigInvalid(f"experiments: unknown experiment {name!r}")
        for field_name in ("period_cap", "density_period_cap",
                           "enumeration_cap", "ari_m_max", "ari_pool_cap"):
            if self.caps.get(field_name, 1) <= 0:
                raise ConfigInvalid(f"caps.{field_name}: must be positive")
        if self.seed < 0:
            raise ConfigInvalid("seed: must be nonnegative")

    def grid_spec(self) -> GridSpec:
        g = self.grid
        try:
            return GridSpec(
                base_subdivisions=tuple(g["base_subdivisions"]),
                fiber_subdivisions=g["fiber_subdivisions"],
                iterations=g["iterations"],
                samples_per_cell=g["samples_per_cell"],
                seed=self.seed,
                theta0=g.get("theta0", 0.05),
                window_fraction=g.get("window_fraction", 0.1),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigInvalid(f"grid: {exc}") from exc

    def build_system(self):
        try:
            auto = validate_automorphism(self.matrix)
        except SkewlabError as exc:
            raise ConfigInvalid(f"matrix: {exc}") from exc
        psi = TrigPolynomial.from_jsonable(self.family["psi_coeffs"])
        family = KanFiberFamily(self.family["epsilon"], psi=psi,
                                dimension=auto.dimension)
        try:
            return make_skew_product(auto, family)
        except DominationViolated as exc:
            raise ConfigInvalid(f"family.epsilon: {exc}") from exc


# ---------------------------------------------------------------------------
# experiment runners: each returns (jsonable report, extra writer)
# ---------------------------------------------------------------------------

def _contracting_expanding(F, period_cap, enumeration_cap):
    table = boundary_exponents(F, period_cap, enumeration_cap=enumeration_cap)
    p0 = next((oe.orbit for oe in table if oe.sum0.exponent < 0), None)
    q0 = next((oe.orbit for oe in table if oe.sum0.exponent > 0), None)
    return table, p0, q0


def run_exponents(cfg: RunConfig, F, out: Path):
    cap = max(cfg.caps["period_cap"], 2)
    table = boundary_exponents(F, cap, cfg.caps["enumeration_cap"])
    rows = [
        (oe.orbit.period,
         "|".join(reporting.rational_str(c) for c in oe.orbit.base.coords),
         oe.sum0.total, oe.sum0.exponent, oe.sum1.total, oe.sum1.exponent)
        for oe in table
    ]
    report = {
        "period_cap": cap,
        "orbits": [
            {"period": oe.orbit.period,
             "representative": [reporting.rational_str(c)
                                for c in oe.orbit.base.coords],
             "sum0": oe.sum0.total, "exponent0": oe.sum0.exponent,
             "sum1": oe.sum1.total, "exponent1": oe.sum1.exponent}
            for oe in table
        ],
    }
    reporting.write_csv(
        out / "exponents.csv",
        ("period", "representative", "sum0", "exponent0", "sum1", "exponent1"),
        rows,
    )
    ncols = len(cfg.matrix)
    reporting.write_csv(
        out / "orbits.csv",
        ("period", "index", *(f"x{i}" for i in range(ncols))),
        reporting.orbit_csv_rows(oe.orbit for oe in table),
    )
    reporting.figure_exponents(table, out / "exponents.png")
    return report


def run_interconnect(cfg: RunConfig, F, out: Path):
    result = boundary_interconnection(
        F, period_cap=cfg.caps["period_cap"],
        enumeration_cap=cfg.caps["enumeration_cap"],
    )
    if isinstance(result, Absent):
        report = {"witness": None, "reason": result.reason,
                  "census": {"negative0": result.negative0,
                             "positive0": result.positive0,
                             "negative1": result.negative1,
                             "positive1": result.positive1}}
        reporting.write_csv(out / "interconnect.csv",
                            ("witness", "reason"), [(0, result.reason)])
        return report

    def orbit_json(oe):
        return {
            "period": oe.orbit.period,
            "points": [[reporting.rational_str(c) for c in p.coords]
                       for p in oe.orbit.points],
            "exponent0": oe.sum0.exponent,
            "exponent1": oe.sum1.exponent,
        }

    report = {
        "witness": {
            "p0": orbit_json(result.p0), "p1": orbit_json(result.p1),
            "q0": orbit_json(result.q0), "q1": orbit_json(result.q1),
            "z_p": [float(v) for v in result.z_p.coords],
            "z_q": [float(v) for v in result.z_q.coords],
            "overlap_p": [result.overlap_p.interval.lo,
                          result.overlap_p.interval.hi],
            "overlap_q": [result.overlap_q.interval.lo,
                          result.overlap_q.interval.hi],
            "overlap_p_residual": result.overlap_p.residual,
            "overlap_q_residual": result.overlap_q.residual,
            "min_overlap": result.min_overlap,
        },
    }
    reporting.write_csv(
        out / "interconnect.csv",
        ("pair", "period_neg", "period_pos", "overlap_lo", "overlap_hi"),
        [
            ("p", result.p0.orbit.period, result.p1.orbit.period,
             result.overlap_p.interval.lo, result.overlap_p.interval.hi),
            ("q", result.q1.orbit.period, result.q0.orbit.period,
             result.overlap_q.interval.lo, result.overlap_q.interval.hi),
        ],
    )
    return report


def run_transitivity(cfg: RunConfig, F, out: Path):
    grid = cfg.grid_spec()
    cov = transitivity_probe(F, grid)
    chain = chain_reachability_probe(F, grid)
    report = {
        "visited_fraction": cov.visited_fraction,
        "visited_cells": cov.visited_cells,
        "total_cells": cov.total_cells,
        "strong_component_fraction": cov.strong_component_fraction,
        "first_hit_max": cov.first_hit_max,
        "first_hit_mean": cov.first_hit_mean,
        "chain_scc_fraction": chain.scc_fraction,
        "chain_reachable_fraction": chain.reachable_fraction,
        "iterations": cov.iterations,
        "seed": cov.seed,
        "start": list(cov.start),
    }
    reporting.write_csv(
        out / "transitivity.csv",
        ("visited_fraction", "chain_scc_fraction", "chain_reachable_fraction",
         "iterations"),
        [(cov.visited_fraction, chain.scc_fraction,
          chain.reachable_fraction, cov.iterations)],
    )
    # re-run cheaply for the figure data (first-hit layout)
    from . import experiments as _ex
    flat = _ex._flatten_family(F.fiber)
    if flat is not None:
        import numpy as _np
        rng = _np.random.default_rng(grid.seed)
        start = (float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95)),
                 float(rng.uniform(0.2, 0.8)))
        kvecs, cos_c, sin_c, eps, tau = flat
        first_hit, _ = _ex._kernels.run_orbit_coverage(
            F.base.matrix, kvecs, cos_c, sin_c, eps, tau, start,
            (*grid.base_subdivisions, grid.fiber_subdivisions), grid.iterations,
        )
        reporting.figure_coverage(
            first_hit, (*grid.base_subdivisions, grid.fiber_subdivisions),
            out / "transitivity.png",
        )
    return report


def run_basins(cfg: RunConfig, F, out: Path):
    grid = cfg.grid_spec()
    rep = intermingled_basins_scan(F, grid, strict=False)
    report = {
        "cells": list(rep.cells),
        "samples_per_cell": rep.samples_per_cell,
        "union_fraction": rep.union_fraction,
        "min_fraction0": rep.min_fraction0,
        "min_fraction1": rep.min_fraction1,
        "counts0": rep.counts0.tolist(),
        "counts1": rep.counts1.tolist(),
        "unresolved": rep.unresolved.tolist(),
        "iterations": rep.iterations,
        "seed": rep.seed,
    }
    reporting.write_csv(
        out / "basins.csv",
        ("union_fraction", "min_fraction0", "min_fraction1", "iterations"),
        [(rep.union_fraction, rep.min_fraction0, rep.min_fraction1,
          rep.iterations)],
    )
    reporting.figure_basins(rep, out / "basins.png")
    reporting.basin_pgm_layers(rep, out, "basins")
    return report


def run_density(cfg: RunConfig, F, out: Path):
    d = cfg.density
    rep = birkhoff_density_scan(
        F, d["boundary"], period_cap=cfg.caps["density_period_cap"],
        window=tuple(d["window"]), eps=d["eps"],
        enumeration_cap=cfg.caps["enumeration_cap"],
    )
    report = {
        "dense": rep.dense, "eps": rep.eps, "window": list(rep.window),
        "num_orbits": rep.num_orbits, "boundary": rep.boundary,
        "hist_edges": list(rep.hist_edges),
        "hist_counts": list(rep.hist_counts),
        "min_sum": min(rep.values), "max_sum": max(rep.values),
    }
    reporting.write_csv(
        out / "density.csv",
        ("dense", "eps", "num_orbits", "min_sum", "max_sum"),
        [(int(rep.dense), rep.eps, rep.num_orbits,
          min(rep.values), max(rep.values))],
    )
    reporting.figure_density(rep, out / "density.png")
    return report


def run_ari(cfg: RunConfig, F, out: Path):
    table, p0, q0 = _contracting_expanding(
        F, cfg.caps["period_cap"], cfg.caps["enumeration_cap"]
    )
    if p0 is None or q0 is None:
        raise SkewlabError("no exponent sign pair available for the builder")
    rep = ari_sequence_build(
        F, p0, q0,
        m_max=cfg.caps["ari_m_max"],
        pool_period_cap=cfg.caps["ari_pool_cap"],
    )
    report = {
        "s_p0": rep.s_p0, "s_q0": rep.s_q0,
        "bridge": {"nu": rep.bridge_nu, "k": rep.bridge_k, "l": rep.bridge_l,
                   "l_max": rep.witness_l_max},
        "stages": [
            {"m": st.m, "K": st.K, "L": st.L,
             "period": st.chosen_period, "chosen": st.chosen,
             "sandwich_value": st.sandwich_value,
             "sandwich_ok": st.sandwich_ok,
             "independence_vs_p0": st.independence_vs_p0,
             "independence_bound_q0": st.independence_bound_q0,
             "independence_measured_q0": st.independence_measured_q0,
             "exponent_drift": st.exponent_drift,
             "contracting_size": st.contracting_size,
             "delta": st.delta}
            for st in rep.stages
        ],
    }
    reporting.write_csv(
        out / "ari.csv",
        ("m", "K", "L", "period", "sandwich_value", "sandwich_ok",
         "independence_vs_p0", "independence_bound_q0", "exponent_drift"),
        [(st.m, st.K, st.L, st.chosen_period, st.sandwich_value,
          int(st.sandwich_ok), st.independence_vs_p0,
          st.independence_bound_q0, st.exponent_drift)
         for st in rep.stages],
    )
    reporting.figure_ari(rep, out / "ari.png")
    return report


def run_perturb(cfg: RunConfig, F, out: Path):
    tau = cfg.perturbation_tau
    rep = perturb_flow(F, tau, period_cap=cfg.caps["period_cap"])
    table = boundary_exponents(F, cfg.caps["period_cap"])
    after = [birkhoff_sum(rep.system, oe.orbit, 0).exponent for oe in table]
    report = {
        "tau": tau,
        "alpha_tau": rep.alpha_tau,
        "max_shift_error0": rep.max_shift_error0,
        "max_shift_error1": rep.max_shift_error1,
        "exponents_before0": [oe.sum0.exponent for oe in table],
        "exponents_after0": after,
    }
    reporting.write_csv(
        out / "perturb.csv",
        ("tau", "alpha_tau", "max_shift_error0", "max_shift_error1"),
        [(tau, rep.alpha_tau, rep.max_shift_error0, rep.max_shift_error1)],
    )
    reporting.figure_perturbation(table, after, tau, out / "perturb.png")
    return report


def run_counterexample(cfg: RunConfig, F, out: Path):
    ce = cfg.counterexample
    phi = builtin_map("mobius", alpha=ce["alpha"])
    hi = ce["anchor"]
    lo = phi(hi)
    width = hi - lo
    U = ClosedInterval(lo + 0.05 * width, lo + 0.40 * width)
    V = ClosedInterval(lo + 0.60 * width, hi - 0.05 * width)
    rep = horseshoe_counterexample_demo(phi, U, V, seed=cfg.seed)
    report = {
        "sign_pattern_ok": rep.sign_pattern_ok,
        "multiplier_at_0": rep.multiplier_at_0,
        "multiplier_at_1": rep.multiplier_at_1,
        "separation_range": rep.separation_range,
        "violations": rep.violations,
        "total_iterations": rep.total_iterations,
        "U": [U.lo, U.hi], "V": [V.lo, V.hi],
    }
    reporting.write_csv(
        out / "counterexample.csv",
        ("sign_pattern_ok", "violations", "total_iterations"),
        [(int(rep.sign_pattern_ok), rep.violations, rep.total_iterations)],
    )
    reporting.figure_counterexample(phi, U, V, rep, out / "counterexample.png")
    return report


RUNNERS = {
    "exponents": run_exponents,
    "interconnect": run_interconnect,
    "transitivity": run_transitivity,
    "basins": run_basins,
    "density": run_density,
    "ari": run_ari,
    "perturb": run_perturb,
    "counterexample": run_counterexample,
}


# ---------------------------------------------------------------------------
# top-level run and describe
# ---------------------------------------------------------------------------

def run(cfg: RunConfig, experiments=None, threads: int = 1) -> Path:
    """Execute the selected experiments and write the manifest.

    Experiments run in the declared order (concurrently when threads > 1)
    but reports are always written serially in that order, so identical
    configs give identical report bytes.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    selection = list(experiments or cfg.experiments)
    F = cfg.build_system()

    results: dict = {}
    timings: dict = {}

    def execute(name):
        t0 = time.perf_counter()
        report = RUNNERS[name](cfg, F, out)
        return name, report, time.perf_counter() - t0

    if threads > 1 and len(selection) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for name, report, dt in pool.map(execute, selection):
                results[name] = report
                timings[name] = dt
    else:
        for name in selection:
            _, report, dt = execute(name)
            results[name] = report
            timings[name] = dt

    written = []
    for name in selection:
        payload = {"experiment": name, "seed": cfg.seed, "report": results[name]}
        written.append(reporting.write_json(out / f"{name}.json", payload))

    files = sorted(p for p in out.iterdir()
                   if p.is_file() and p.name != "manifest.json")
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": reporting.config_hash(cfg.to_dict()),
        "version": __version__,
        "experiments": selection,
        "wall_clock_seconds": {k: round(v, 3) for k, v in timings.items()},
        "files": {p.name: reporting.sha256_file(p) for p in files},
    }
    reporting.write_json(out / "manifest.json", manifest)
    return out


def describe(cfg: RunConfig) -> str:
    """Text summary: rates, margins, low-period exponents on both sides."""
    F = cfg.build_system()
    sp = F.base.splitting
    lines = [
        f"matrix: {cfg.matrix}",
        f"unstable rate: {sp.rate_u:.12f}",
        f"stable rate:   {sp.rate_s:.12f}",
        f"domination margins: ({F.margins.lower:.6f}, {F.margins.upper:.6f})",
    ]
    for b in (0, 1):
        q = mostly_contracting_check(F, b)
        lines.append(
            f"boundary {b} quadrature: {q.value:.9f} +- {q.error_estimate:.1e}"
            f" [{q.verdict}]"
        )
    lines.append("orbit exponents (periods 1-2):")
    lines.append(f"{'period':>6} {'representative':>24} {'exp@0':>12} {'exp@1':>12}")
    for oe in boundary_exponents(F, 2):
        rep = ",".join(reporting.rational_str(c) for c in oe.orbit.base.coords)
        lines.append(
            f"{oe.orbit.period:>6} {rep:>24} "
            f"{oe.sum0.exponent:>12.6f} {oe.sum1.exponent:>12.6f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _load_config(args) -> RunConfig:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"config file: {exc}") from exc
    else:
        data = {}
    cfg = RunConfig.from_dict(data)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewlab",
        description="Boundary-preserving skew product laboratory",
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="seed (overrides config)")
    parser.add_argument("--threads", type=int, default=1,
                        help="concurrent experiments for `run`")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="validate the configuration and system")
    sub.add_parser("describe", help="print rates, margins, low-period exponents")
    runp = sub.add_parser("run", help="run the configured experiment list")
    runp.add_argument("--experiment", action="append",
                      choices=EXPERIMENTS,
                      help="override the configured list (repeatable)")
    for name in EXPERIMENTS:
        sub.add_parser(name, help=f"run only the {name} experiment")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SKEWLAB_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "validate":
            cfg.build_system()
            print("configuration valid")
            return 0
        if args.command == "describe":
            print(describe(cfg))
            return 0
        if args.command == "run":
            out = run(cfg, experiments=args.experiment, threads=args.threads)
            print(f"reports written to {out}")
            return 0
        out = run(cfg, experiments=[args.command], threads=1)
        print(f"reports written to {out}")
        return 0
    except ConfigInvalid as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except SkewlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
