"""Command-line front end.

::

    vblast sweep   --nt 2 --nr 2 --mod qpsk --detector ml --channel rayleigh \\
                   --snr 0:2:20 --seed 7 --out ml.csv --plot-script ml_plot.py
    vblast compare --nt 2 --nr 2 --mod qpsk --detectors ml,zf,mmse --snr 0:5:20
    vblast analytic --mod bpsk,qpsk,qam16 --channel rayleigh --snr 0:2:30
    vblast density --family both --phi-sq 1 --mean 3 --r 0:0.05:8

Exit codes: 0 success, 1 runtime error, 2 usage error. Data goes to
``--out`` (or stdout); diagnostics go to stderr only.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import analytic, channel
from .detect import DetectorKind
from .linalg import SingularMatrixError
from .modem import Modulation
from .sim import ConfigError, SimConfig, run_sweep

CSV_HEADER = (
    "snr_db,detector,modulation,nt,nr,frames,bits,bit_errors,"
    "ber,ser,fer,ci95_low,ci95_high,analytic_ber"
)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class CliCommand:
    command: str
    params: dict = field(default_factory=dict)
    out: Optional[str] = None
    plot_script: Optional[str] = None


def fmt_float(x):
    """Ten significant digits, trailing zeros kept (``0.0 -> 0.000000000``)."""
    return "%#.10g" % x


def parse_grid(text, flag="--snr"):
    """``start:step:stop`` (stop included when reachable), ``a,b,c`` or a scalar."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if not step > 0:
                raise UsageError(f"{flag}: step must be positive in {text!r}")
            if stop < start:
                raise UsageError(f"{flag}: stop is below start in {text!r}")
            n = int(math.floor((stop - start) / step + 1e-9))
            return tuple(round(start + i * step, 12) for i in range(n + 1))
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"{flag}: cannot parse grid {text!r}") from None


def read_config_file(path):
    """``key=value`` lines (``#`` comments) turned into ``--key value`` tokens."""
    tokens = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"--config: {path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        tokens += ["--" + key.lstrip("-").replace("_", "-"), value]
    return tokens


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _sim_flags(p, multi_detector=False):
    p.add_argument("--nt", type=int, default=2)
    p.add_argument("--nr", type=int, default=2)
    p.add_argument("--mod", default="qpsk", choices=[m.value for m in Modulation])
    if multi_detector:
        p.add_argument("--detectors", default=",".join(k.value for k in DetectorKind))
    else:
        p.add_argument("--detector", default="zf", choices=[k.value for k in DetectorKind])
    p.add_argument("--channel", default="rayleigh", choices=["awgn", "rayleigh", "rician"])
    p.add_argument("--rician-k", type=float, default=0.0)
    p.add_argument("--snr", default="0:2:20")
    p.add_argument("--min-errors", type=int, default=200)
    p.add_argument("--max-frames", type=int, default=2_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--plot-script")
    p.add_argument("--config")


def build_parser():
    parser = _Parser(prog="vblast", description="V-BLAST MIMO detection simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _sim_flags(sub.add_parser("sweep", help="Monte Carlo sweep for one detector"))
    _sim_flags(
        sub.add_parser("compare", help="same sweep for several detectors"),
        multi_detector=True,
    )
    a = sub.add_parser("analytic", help="closed-form error-rate curves")
    a.add_argument("--mod", default="bpsk")
    a.add_argument("--channel", default="awgn", choices=["awgn", "rayleigh"])
    a.add_argument("--snr", default="0:1:20")
    a.add_argument("--out")
    a.add_argument("--config")
    d = sub.add_parser("density", help="Rayleigh / Gaussian envelope densities")
    d.add_argument("--family", default="both", choices=["rayleigh", "gaussian", "both"])
    d.add_argument("--phi-sq", type=float, default=1.0)
    d.add_argument("--mean", type=float, default=0.0)
    d.add_argument("--r", default="0:0.05:6")
    d.add_argument("--out")
    d.add_argument("--config")
    return parser


def _expand_config(argv):
    # Config-file values are inserted right after the subcommand so that
    # explicit flags, parsed later, override them.
    argv = list(argv)
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    if not known.config:
        return argv
    return argv[:1] + read_config_file(known.config) + argv[1:]


def _sim_configs(ns, detectors):
    if ns.nt < 1 or ns.nr < 1:
        raise UsageError("--nt/--nr: antenna counts must be >= 1")
    if ns.min_errors < 1:
        raise UsageError("--min-errors: must be >= 1")
    if ns.max_frames < 1:
        raise UsageError("--max-frames: must be >= 1")
    if ns.workers < 1:
        raise UsageError("--workers: must be >= 1")
    if not 0 <= ns.seed < 2**64:
        raise UsageError("--seed: must fit in an unsigned 64-bit integer")
    if not (math.isfinite(ns.rician_k) and ns.rician_k >= 0):
        raise UsageError("--rician-k: must be finite and >= 0")
    if ns.rician_k and ns.channel != "rician":
        raise UsageError("--rician-k: only valid with --channel rician")
    if ns.channel == "awgn" and ns.nt != ns.nr:
        raise UsageError("--channel awgn: identity channel requires --nr equal to --nt")
    if ns.plot_script and not ns.out:
        raise UsageError("--plot-script: requires --out so the script can find the CSV")
    grid = parse_grid(ns.snr)
    configs = []
    for det in detectors:
        kind = DetectorKind.parse(det)
        if kind.needs_full_column_rank and ns.nr < ns.nt:
            raise UsageError(
                f"--detector {kind.value}: requires nr >= nt (--nr {ns.nr} < --nt {ns.nt})"
            )
        try:
            configs.append(
                SimConfig(
                    nt=ns.nt, nr=ns.nr, modulation=ns.mod, detector=kind,
                    channel=ns.channel, rician_k=ns.rician_k, snr_db_grid=grid,
                    min_bit_errors=ns.min_errors, max_frames=ns.max_frames,
                    seed=ns.seed, workers=ns.workers,
                )
            )
        except ConfigError as exc:
            raise UsageError(f"--snr/--detector: {exc}") from None
    return configs


def parse_args(argv):
    """Validated :class:`CliCommand`; raises :class:`UsageError` on bad input."""
    ns = build_parser().parse_args(_expand_config(argv))
    cmd = CliCommand(ns.command, out=ns.out)
    if ns.command == "sweep":
        cmd.params["configs"] = _sim_configs(ns, [ns.detector])
        cmd.plot_script = ns.plot_script
    elif ns.command == "compare":
        names = [d for d in ns.detectors.split(",") if d.strip()]
        try:
            kinds = [DetectorKind.parse(d) for d in names]
        except ValueError as exc:
            raise UsageError(f"--detectors: {exc}") from None
        if not kinds:
            raise UsageError("--detectors: at least one detector is required")
        cmd.params["configs"] = _sim_configs(ns, kinds)
        cmd.plot_script = ns.plot_script
    elif ns.command == "analytic":
        try:
            mods = [Modulation.parse(m) for m in ns.mod.split(",")]
        except ValueError as exc:
            raise UsageError(f"--mod: {exc}") from None
        cmd.params.update(mods=mods, channel=ns.channel, grid=parse_grid(ns.snr))
    else:
        if not ns.phi_sq > 0:
            raise UsageError("--phi-sq: must be positive")
        grid = parse_grid(ns.r, flag="--r")
        if ns.family in ("rayleigh", "both") and grid[0] < 0:
            raise UsageError("--r: Rayleigh density needs r >= 0")
        families = ["rayleigh", "gaussian"] if ns.family == "both" else [ns.family]
        cmd.params.update(families=families, grid=grid, phi_sq=ns.phi_sq, mean=ns.mean)
    return cmd


def csv_rows(result):
    cfg = result.config
    for p in result.points:
        yield ",".join(
            [
                fmt_float(p.snr_db), cfg.detector.value, cfg.modulation.value,
                str(cfg.nt), str(cfg.nr), str(p.frames), str(p.bits), str(p.bit_errors),
                fmt_float(p.ber), fmt_float(p.ser), fmt_float(p.fer),
                fmt_float(p.ci95_low), fmt_float(p.ci95_high),
                "" if p.analytic_ref is None else fmt_float(p.analytic_ref),
            ]
        )


def emit_csv(results, sink):
    """Write one or more sweep results as CSV with the frozen header."""
    if not isinstance(results, (list, tuple)):
        results = [results]
    sink.write(CSV_HEADER + "\n")
    for result in results:
        for row in csv_rows(result):
            sink.write(row + "\n")


_PLOT_TEMPLATE = '''\
"""Plot BER curves from {csv_name}. Generated by vblast."""
import csv
import os

import matplotlib.pyplot as plt

CSV_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), {csv_rel!r})
SERIES = {series!r}
OVERLAYS = {overlays!r}

with open(CSV_PATH, newline="") as fh:
    rows = list(csv.DictReader(fh))

fig, ax = plt.subplots()
for detector, modulation in SERIES:
    sel = [r for r in rows if r["detector"] == detector and r["modulation"] == modulation]
    ax.plot([float(r["snr_db"]) for r in sel], [float(r["ber"]) for r in sel],
            marker="o", label=f"{{detector.upper()}} {{modulation.upper()}}")
for modulation in OVERLAYS:
    seen = {{}}
    for r in rows:
        if r["modulation"] == modulation and r["analytic_ber"]:
            seen[float(r["snr_db"])] = float(r["analytic_ber"])
    xs = sorted(seen)
    ax.plot(xs, [seen[x] for x in xs], linestyle="--", label=f"analytic {{modulation.upper()}}")
ax.set_yscale("log")
ax.set_xlabel("Eb/N0 (dB)")
ax.set_ylabel("BER")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.savefig(os.path.splitext(os.path.abspath(__file__))[0] + ".png", dpi=150)
'''


def emit_plot_script(results, sink, csv_path, script_path=None):
    """Write a matplotlib script that plots ``csv_path`` on a log-BER axis."""
    if not isinstance(results, (list, tuple)):
        results = [results]
    series, overlays = [], []
    for result in results:
        cfg = result.config
        pair = (cfg.detector.value, cfg.modulation.value)
        if pair not in series:
            series.append(pair)
        has_ref = any(p.analytic_ref is not None for p in result.points)
        if has_ref and cfg.modulation.value not in overlays:
            overlays.append(cfg.modulation.value)
    base = os.path.dirname(os.path.abspath(script_path)) if script_path else os.getcwd()
    csv_rel = os.path.relpath(os.path.abspath(csv_path), base)
    sink.write(
        _PLOT_TEMPLATE.format(
            csv_name=os.path.basename(csv_path), csv_rel=csv_rel,
            series=series, overlays=overlays,
        )
    )


def _write_analytic(cmd, sink):
    sink.write("snr_db,modulation,channel,probability\n")
    for mod in cmd.params["mods"]:
        for snr, p in analytic.analytic_curve(mod, cmd.params["channel"], cmd.params["grid"]):
            sink.write(f"{fmt_float(snr)},{mod.value},{cmd.params['channel']},{fmt_float(p)}\n")


def _write_density(cmd, sink):
    sink.write("family,r,pdf\n")
    for family in cmd.params["families"]:
        table = channel.density_table(
            family, cmd.params["grid"], phi_sq=cmd.params["phi_sq"], mean=cmd.params["mean"]
        )
        for r, f in table:
            sink.write(f"{family},{fmt_float(r)},{fmt_float(f)}\n")


def _open_sink(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline="\n"), True


def run(cmd):
    """Execute a parsed command; returns the process exit code."""
    try:
        if cmd.command in ("sweep", "compare"):
            results = [run_sweep(cfg) for cfg in cmd.params["configs"]]
            writer = lambda sink: emit_csv(results, sink)  # noqa: E731
        elif cmd.command == "analytic":
            writer = lambda sink: _write_analytic(cmd, sink)  # noqa: E731
        else:
            writer = lambda sink: _write_density(cmd, sink)  # noqa: E731
        sink, close = _open_sink(cmd.out)
        try:
            writer(sink)
        finally:
            if close:
                sink.close()
        if cmd.plot_script:
            with open(cmd.plot_script, "w", encoding="utf-8") as fh:
                emit_plot_script(results, fh, cmd.out, cmd.plot_script)
    except SingularMatrixError as exc:
        print(f"vblast: channel matrix is singular or rank deficient: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"vblast: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cmd = parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
