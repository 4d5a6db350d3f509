"""Command-line front end.

    fermigf curve       --scenario fig1_free --out out/
    fermigf evolve      --scenario my.json --out out/ --dimensionless
    fermigf wigner      --scenario fig3_squeezed --out out/
    fermigf measure     --scenario fig1_free --out out/ --seed 7
    fermigf reconstruct --scenario fig1_free --out out/
    fermigf verify      [--scenario ...] [--tolerance-profile strict]

``--scenario`` takes a preset name or a path to a scenario JSON file.
Exit status: 0 success, 1 invalid scenario or arguments, 2 numerical
failure, 3 verification failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .analysis import (
    compton_summary,
    curve_summary,
    measure_moments,
    reconstruct_round_trip,
    wigner_comparison,
)
from .checks import TOLERANCES, run_all_presets, run_checks
from .errors import FermiGFError, ScenarioError
from .fermi import ellipse_area, fermi_branches
from .scenario import PRESETS, Scenario, measurement_seed, resolve_scenario
from .state import moments

EXIT_OK, EXIT_SCENARIO, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("curve", "evolve", "wigner", "measure", "verify", "reconstruct")
MOMENT_FIELDS = ("mean_q", "mean_p", "var_q", "var_p", "correlation_k")

log = logging.getLogger("fermigf")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage, which here means a numerical failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCENARIO, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fermigf", description="Fermi g_F phase-space tools for 1D wave packets.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", help=f"preset ({', '.join(PRESETS)}) or scenario JSON path")
    parser.add_argument("--out", help="output directory (default: scenario output_dir or ./fermigf_out/<name>)")
    parser.add_argument("--dimensionless", action="store_true",
                        help="lead tables with q/δ, δp/ħ style columns instead of raw values")
    parser.add_argument("--seed", type=_u64, help="override the scenario seed (unsigned 64-bit)")
    parser.add_argument("--tolerance-profile", choices=sorted(TOLERANCES), default="default")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _columns(raw: dict, scaled: dict, dimensionless: bool):
    """Merge raw and scaled column dicts in the requested order."""
    first, second = (scaled, raw) if dimensionless else (raw, scaled)
    merged = {**first, **second}
    return list(merged), list(zip(*(np.asarray(v).tolist() for v in merged.values())))


def _time_record(scn: Scenario, i: int) -> dict:
    return {"index": i, "t": scn.times[i], "time_value": scn.time_values[i], "time_units": scn.time_units}


def cmd_curve(scn: Scenario, out: Path, args) -> int:
    analytic = scn.analytic_ellipses() if scn.is_gaussian else [None] * len(scn.times)
    scale = (scn.length_unit(), scn.momentum_unit())
    records = []
    for i, psi in enumerate(scn.states()):
        curve = fermi_branches(psi)
        io.write_curve_csv(curve, out / f"curve_{i:02d}.csv", scale, args.dimensionless)
        records.append({**_time_record(scn, i), **curve_summary(curve, analytic[i])})
    io.write_json({"scenario": scn.name, "hbar": scn.constants.hbar, "samples": records},
                  out / "ellipse_fit.json")
    return EXIT_OK


def cmd_evolve(scn: Scenario, out: Path, args) -> int:
    oracle = scn.oracle_states()
    closed = scn.closed_form_states() if scn.is_gaussian else None
    exact = scn.analytic_moments() if scn.is_gaussian else None
    lu, pu, hbar = scn.length_unit(), scn.momentum_unit(), scn.constants.hbar
    units = {"mean_q": lu, "mean_p": pu, "var_q": lu**2, "var_p": pu**2, "correlation_k": hbar}
    numeric = [moments(psi) for psi in oracle]

    raw = {"index": list(range(len(scn.times))), "t": list(scn.times)}
    scaled = {f"time_{scn.time_units}": list(scn.time_values)}
    for f in MOMENT_FIELDS:
        a = [getattr(m, f) for m in exact] if exact else [float("nan")] * len(numeric)
        o = [getattr(m, f) for m in numeric]
        raw[f"analytic_{f}"], raw[f"oracle_{f}"] = a, o
        scaled[f"analytic_{f}_scaled"] = [x / units[f] for x in a]
        scaled[f"oracle_{f}_scaled"] = [x / units[f] for x in o]
    raw["oracle_uncertainty_excess"] = [m.uncertainty_excess(hbar) for m in numeric]
    raw["oracle_norm"] = [psi.norm() for psi in oracle]
    raw["oracle_l2_vs_closed_form"] = (
        [float(np.sqrt(np.sum(np.abs(a.amplitudes - b.amplitudes) ** 2) * scn.grid.dq))
         for a, b in zip(oracle, closed)] if closed else [float("nan")] * len(oracle))
    header, rows = _columns(raw, scaled, args.dimensionless)
    io.write_table_csv(out / "moments.csv", header, rows)
    return EXIT_OK


def cmd_wigner(scn: Scenario, out: Path, args) -> int:
    ws = scn.wigner
    lu, pu = scn.length_unit(), scn.momentum_unit()
    records = []
    for i, psi in enumerate(scn.states()):
        curve = fermi_branches(psi)
        cmp = wigner_comparison(psi, curve, ws.n_p, ws.n_q, ws.fraction)
        io.write_field_binary(cmp.field, out / f"wigner_{i:02d}.bin")
        if ws.field_csv:
            io.write_field_csv(cmp.field, out / f"wigner_{i:02d}.csv")
        comp = np.concatenate([np.full(len(c), k) for k, c in enumerate(cmp.contours)])
        pts = np.vstack(cmp.contours)
        raw = {"component": comp.astype(int), "q": pts[:, 0], "p": pts[:, 1]}
        scaled = {"q_scaled": pts[:, 0] / lu, "p_scaled": pts[:, 1] / pu}
        header, rows = _columns(raw, scaled, args.dimensionless)
        io.write_table_csv(out / f"contour_{i:02d}.csv", header, rows)
        records.append({
            **_time_record(scn, i),
            "hausdorff": cmp.hausdorff,
            "cell_diagonal": cmp.field.cell_diagonal,
            "hausdorff_cells": cmp.cells,
            "contour_fraction": ws.fraction,
            "n_components": len(cmp.contours),
            "field_min": float(cmp.field.values.min()),
            "field_max": float(cmp.field.values.max()),
            "field_total": cmp.field.total(),
        })
    io.write_json({"scenario": scn.name, "n_p": ws.n_p, "n_q": ws.n_q, "samples": records},
                  out / "hausdorff.json")
    return EXIT_OK


def cmd_measure(scn: Scenario, out: Path, args) -> int:
    if not scn.is_gaussian:
        raise ScenarioError("measure needs a Gaussian state: the sampling model assumes a "
                            "non-negative Wigner function")
    ms = scn.measurement
    seed = scn.seed if args.seed is None else args.seed
    records = []
    for i, (m, ref) in enumerate(zip(scn.analytic_moments(), scn.analytic_ellipses())):
        sub_seed = measurement_seed(seed, i)
        keep = ms.csv_max_samples > 0
        coeffs, rec = measure_moments(m, ms.prism, ms.n, sub_seed, scn.constants, keep_samples=keep)
        if keep:
            clipped = replace(rec, samples={k: v[: ms.csv_max_samples] for k, v in rec.samples.items()})
            io.write_measurement_csv(clipped, out / f"measurement_{i:02d}.csv")
        records.append({
            **_time_record(scn, i),
            "seed": sub_seed,
            "n": rec.n,
            "true_moments": m.as_dict(),
            "estimates": rec.estimates.as_dict(),
            "standard_errors": rec.standard_errors.as_dict(),
            "uncertainty_excess": rec.uncertainty_excess,
            "violates_uncertainty": rec.violates_uncertainty,
            "ellipse": coeffs.as_dict(),
            "area": ellipse_area(coeffs),
            "analytic_ellipse": ref.as_dict(),
            "analytic_area": ellipse_area(ref),
        })
    summary = {
        "scenario": scn.name,
        "seed": seed,
        "prism": {"c_lin": ms.prism.c_lin, "d_quad": ms.prism.d_quad},
        "compton": {"nu0": ms.compton.nu0, "phi": ms.compton.phi,
                    "beta0_halfwidth": ms.beta0_halfwidth,
                    **compton_summary(ms.compton, ms.beta0_halfwidth)},
        "samples": records,
    }
    io.write_json(summary, out / "summary.json")
    return EXIT_OK


def cmd_reconstruct(scn: Scenario, out: Path, args) -> int:
    lu = scn.length_unit()
    records = []
    for i, psi in enumerate(scn.states()):
        curve = fermi_branches(psi)
        rebuilt, err, anchor = reconstruct_round_trip(psi, curve)
        # align the global phase before writing so the columns compare directly
        overlap = np.vdot(rebuilt.amplitudes, psi.amplitudes)
        phase = overlap / abs(overlap)
        amps = rebuilt.amplitudes * phase
        raw = {"q": psi.q, "re_psi": amps.real, "im_psi": amps.imag,
               "re_reference": psi.amplitudes.real, "im_reference": psi.amplitudes.imag}
        scaled = {"q_scaled": psi.q / lu}
        header, rows = _columns(raw, scaled, args.dimensionless)
        io.write_table_csv(out / f"reconstruct_{i:02d}.csv", header, rows)
        records.append({**_time_record(scn, i), "anchor_q": anchor, "l2_error": err})
    io.write_json({"scenario": scn.name, "samples": records}, out / "round_trip.json")
    return EXIT_OK


def cmd_verify(scn: Scenario | None, out: Path | None, args) -> int:
    profile = args.tolerance_profile
    results = run_all_presets(profile) if scn is None else run_checks(scn, profile)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed ({profile} profile)")
    if out is not None:
        io.write_json({"profile": profile, "passed": not failed,
                       "checks": [{"scenario": r.scenario, "name": r.name, "value": r.value,
                                   "limit": r.limit, "kind": r.kind, "passed": r.passed,
                                   "detail": r.detail} for r in results]},
                      out / "verify.json")
    return EXIT_VERIFY if failed else EXIT_OK


HANDLERS = {"curve": cmd_curve, "evolve": cmd_evolve, "wigner": cmd_wigner,
            "measure": cmd_measure, "reconstruct": cmd_reconstruct}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scn = resolve_scenario(args.scenario) if args.scenario else None
        if args.command == "verify":
            return cmd_verify(scn, Path(args.out) if args.out else None, args)
        if scn is None:
            raise ScenarioError(f"{args.command} needs --scenario")
        out = Path(args.out or scn.output_dir or Path("fermigf_out") / scn.name)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](scn, out, args)
    except ScenarioError as exc:
        print(f"fermigf: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except FermiGFError as exc:
        print(f"fermigf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
