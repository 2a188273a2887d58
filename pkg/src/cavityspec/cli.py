"""Command-line front end: ``cavityspec run | compare | plot``.

Exit status is 0 on success, 1 when a comparison exceeds its tolerance
and 2 for invalid input or a failed run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import StepSizeError
from .experiment import RunResult, run_experiment
from .scenarios import (SCENARIOS, RandomState, parse_experiment, render_experiment,
                        validate)
from .spectra import Spectrum, compare_normalized

log = logging.getLogger("cavityspec")

OUT_ENV = "CAVITYSPEC_OUT"
FLOAT_FMT = "%.12e"


class CliError(Exception):
    """Failure reported to the user with exit status 2."""


# ---------------------------------------------------------------------------
# CSV helpers
# ---------------------------------------------------------------------------

def write_csv(path: Path, columns: dict, header: dict):
    """Write named columns with ``# key: value`` provenance lines on top."""
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append(",".join(columns))
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns.values()])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def read_csv(path: Path):
    """Return ``(header, names, data)`` of a file written by :func:`write_csv`."""
    header = {}
    names = None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                header[key.strip()] = value.strip()
            else:
                names = line.strip().split(",")
                break
        if names is None:
            raise CliError(f"{path}: no column header")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, names, data


def read_spectrum(path: Path) -> Spectrum:
    header, names, data = read_csv(path)
    if names[:2] != ["omega", "S"]:
        raise CliError(f"{path}: expected columns omega,S, found {','.join(names)}")
    return Spectrum(data[:, 0], data[:, 1], header.get("provenance", "unknown"), header.get("source", path.stem))


def _tstr(t: float) -> str:
    return f"{t:.4f}".rstrip("0").rstrip(".")


def write_run(res: RunResult, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    spec = res.spec
    written = []
    base = {"experiment": spec.name, "units": "natural (c = hbar = 1)"}
    for t, (r, u) in res.energy_density.items():
        p = out / f"energy_density_t{_tstr(t)}.csv"
        write_csv(p, {"r": r, "u": u}, {**base, "quantity": "normally ordered energy density", "t": repr(t)})
        written.append(p)
    for label, traces in res.traces.items():
        p = out / f"trace_{label}.csv"
        cols = {"t": res.trace_times[label]}
        cols.update({f"p_{a}": v for a, v in traces.items()})
        write_csv(p, cols, {**base, "quantity": "atom excitation probability"})
        written.append(p)
    for name, s in res.spectra.items():
        p = out / f"spectrum_{name}.csv"
        write_csv(p, {"omega": s.omega, "S": s.values},
                  {**base, "provenance": s.provenance, "source": s.source, "normalized": s.normalized})
        written.append(p)
    p = out / "metadata.json"
    p.write_text(json.dumps(res.metadata(), indent=2, default=float) + "\n")
    written.append(p)
    p = out / "experiment.json"
    p.write_text(render_experiment(spec) + "\n")
    written.append(p)
    return written


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def _load_spec(args):
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as e:
            raise CliError(f"cannot read config: {e}") from None
        spec = parse_experiment(text)
    else:
        spec = SCENARIOS[args.scenario]()
    if args.seed is not None:
        if not isinstance(spec.initial_state, RandomState):
            raise CliError("--seed only applies to a random_multi_gaussian initial state")
        spec = validate(replace(spec, initial_state=replace(spec.initial_state, seed=args.seed)))
    return spec


def cmd_run(args) -> int:
    spec = _load_spec(args)
    if args.print_config:
        print(render_experiment(spec))
        return 0
    out = Path(args.out or os.environ.get(OUT_ENV) or Path("runs") / spec.name)
    log.info("running %s -> %s", spec.name, out)
    try:
        res = run_experiment(spec, backend=args.backend, tol=args.tol, dt_max=args.dt_max)
    except StepSizeError as e:
        raise CliError(f"integration failed: {e}") from None
    write_run(res, out)
    d = res.diagnostics
    print(f"{spec.name}: {res.wall_time:.1f} s, norm drift rate {d.norm_drift_rate:.2e}, "
          f"max energy drift {d.max_energy_drift:.2e}")
    for name, frac in res.absorption.items():
        print(f"  absorbed by {name}: {100 * frac:.3f}% of the field energy")
    for c in res.comparisons.values():
        print(f"  {c.name}: L1={c.metrics.l1:.4f} Linf={c.metrics.linf:.4f} "
              f"peak shift={c.metrics.peak_shift:.3f} [{'ok' if c.passed else 'FAIL'} at tol {c.tol}]")
    print(f"wrote {out}")
    return 0


def _report(label, a, b, tol) -> bool:
    m = compare_normalized(a, b)
    ok = m.l1 <= tol
    print(f"{label}: L1={m.l1:.6f} Linf={m.linf:.6f} peak_shift={m.peak_shift:.4f} "
          f"{'PASS' if ok else 'FAIL'} (tol {tol})")
    return ok


def cmd_compare(args) -> int:
    paths = [Path(p) for p in args.inputs]
    if len(paths) == 2 and all(p.is_file() for p in paths):
        a, b = (read_spectrum(p) for p in paths)
        ok = _report(f"{paths[0].name} vs {paths[1].name}", a, b, args.tol)
        return 0 if ok else 1
    if len(paths) != 1 or not paths[0].is_dir():
        raise CliError("compare takes two spectrum CSV files or one run directory")
    run = paths[0]
    meta = run / "metadata.json"
    if not meta.is_file():
        raise CliError(f"{run}: no metadata.json (not a run directory)")
    pairs = json.loads(meta.read_text())["comparisons"]
    if args.pair:
        missing = set(args.pair) - set(pairs)
        if missing:
            raise CliError(f"unknown comparison(s): {', '.join(sorted(missing))}")
        pairs = {k: pairs[k] for k in args.pair}
    if not pairs:
        raise CliError(f"{run}: the run requested no comparisons")
    ok = True
    for name, pair in pairs.items():
        a = read_spectrum(run / f"spectrum_{pair['analyzer']}.csv")
        b = read_spectrum(run / f"spectrum_{pair['mode']}.csv")
        tol = args.tol if args.tol is not None else pair["tol"]
        ok &= _report(name, a, b, tol)
    return 0 if ok else 1


_SCRIPT_HEAD = '''"""{title}

Generated by cavityspec {version}; run with python from any directory.
"""
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def load(name):
    lines = (HERE / name).read_text().splitlines()
    skip = sum(1 for line in lines if line.startswith("#"))
    return np.genfromtxt(HERE / name, delimiter=",", skip_header=skip, names=True)

'''


def _script(title, body, png):
    return (_SCRIPT_HEAD.format(title=title, version=__version__) + body
            + f'\nfig.tight_layout()\nfig.savefig(HERE / "{png}", dpi=150)\n')


def plot_scripts(run: Path) -> dict:
    """Build plotting scripts (name -> source) for the artifacts in ``run``."""
    scripts = {}
    dens = sorted(run.glob("energy_density_t*.csv"))
    if dens:
        body = "fig, ax = plt.subplots(figsize=(7, 4))\n"
        for p in dens:
            t = p.stem.removeprefix("energy_density_t")
            body += f'd = load("{p.name}")\nax.plot(d["r"], d["u"], label="t = {t}")\n'
        body += 'ax.set_xlabel("r")\nax.set_ylabel("energy density")\nax.legend()\n'
        scripts["plot_energy_density.py"] = _script("Energy density snapshots.", body, "energy_density.png")
    for p in sorted(run.glob("trace_*.csv")):
        label = p.stem.removeprefix("trace_")
        body = (f'd = load("{p.name}")\nfig, ax = plt.subplots(figsize=(7, 4))\n'
                'for col in d.dtype.names[1:]:\n    ax.plot(d["t"], d[col], label=col[2:])\n'
                'ax.set_xlabel("t")\nax.set_ylabel("excitation probability")\nax.legend()\n')
        scripts[f"plot_trace_{label}.py"] = _script(f"Excitation of {label}.", body, f"trace_{label}.png")
    meta = run / "metadata.json"
    pairs = json.loads(meta.read_text()).get("comparisons", {}) if meta.is_file() else {}
    for name, pair in pairs.items():
        fa, fm = f"spectrum_{pair['analyzer']}.csv", f"spectrum_{pair['mode']}.csv"
        body = (f'a = load("{fa}")\nm = load("{fm}")\n'
                'sel = (m["omega"] >= a["omega"][0]) & (m["omega"] <= a["omega"][-1])\n'
                'fig, ax = plt.subplots(figsize=(7, 4))\n'
                'ax.plot(m["omega"][sel], m["S"][sel] / np.trapezoid(m["S"][sel], m["omega"][sel]), '
                'label="mode spectrum")\n'
                'ax.plot(a["omega"], a["S"] / np.trapezoid(a["S"], a["omega"]), "o", ms=3, label="analyzer atoms")\n'
                'ax.set_xlabel("omega")\nax.set_ylabel("normalized spectrum")\nax.legend()\n')
        scripts[f"plot_spectra_{name}.py"] = _script(f"Analyzer vs mode spectrum: {name}.", body,
                                                    f"spectra_{name}.png")
    paired = {f"spectrum_{p[k]}.csv" for p in pairs.values() for k in ("analyzer", "mode")}
    for p in sorted(run.glob("spectrum_*.csv")):
        if p.name in paired:
            continue
        name = p.stem.removeprefix("spectrum_")
        body = (f'd = load("{p.name}")\nfig, ax = plt.subplots(figsize=(7, 4))\n'
                'ax.plot(d["omega"], d["S"])\nax.set_xlabel("omega")\nax.set_ylabel("S")\n')
        scripts[f"plot_spectrum_{name}.py"] = _script(f"Spectrum {name}.", body, f"spectrum_{name}.png")
    return scripts


def cmd_plot(args) -> int:
    run = Path(args.run_dir)
    if not run.is_dir():
        raise CliError(f"{run}: no such directory")
    scripts = plot_scripts(run)
    if not scripts:
        raise CliError(f"{run}: no run artifacts to plot")
    for name, src in scripts.items():
        (run / name).write_text(src)
        print(run / name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavityspec", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="simulate an experiment and write CSV artifacts")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON experiment document")
    src.add_argument("--scenario", choices=sorted(SCENARIOS), help="built-in scenario")
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or runs/<name>)")
    run.add_argument("--seed", type=int, help="seed of a random initial state")
    run.add_argument("--tol", type=float, help="integrator step-halving tolerance")
    run.add_argument("--dt-max", type=float, help="initial RK4 step")
    run.add_argument("--backend", choices=["eigh", "rk4"], help="propagation backend")
    run.add_argument("--print-config", action="store_true",
                     help="print the resolved experiment document and exit")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="compare two spectra; exit 0 iff L1 <= tol")
    cmp_.add_argument("inputs", nargs="+", help="two spectrum CSVs, or one run directory")
    cmp_.add_argument("--tol", type=float, help="L1 tolerance (default 0.05, or the run's own)")
    cmp_.add_argument("--pair", action="append", help="restrict a run-directory compare to this comparison")
    cmp_.set_defaults(func=cmd_compare)

    plot = sub.add_parser("plot", help="emit matplotlib scripts for a run directory")
    plot.add_argument("run_dir")
    plot.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.verb == "compare" and args.tol is None and len(args.inputs) == 2:
        args.tol = 0.05
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as e:
        print(f"cavityspec {args.verb}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
