"""
Command-line front end.

Frequencies on the command line and in every file are ordinary frequencies
(Hz); times are seconds. Mode indices are 1-based. Each run writes its data
files plus ``<name>.manifest.json`` listing input digests, outputs, wall
time and version; the manifest is the only file with volatile content.

Exit codes: 0 ok, 1 input error, 2 no solution, 3 unreliable truncation.
"""
from __future__ import annotations

import argparse
import csv
import functools
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .design import DesignRequest, NoSolutionError, design_gate, detuning_sweep
from .model import (TWO_PI, ModeSpectrum, StaticOffset, dump_json, gate_from_dict, gate_to_dict,
                    load_noise, load_spectrum, noise_to_dict, require_valid, spectrum_from_dict,
                    spectrum_to_dict)
from .noise import _StaticJob, filter_function_first_order, phase_resolved_response
from .parallel import ordered_map
from .sequence import to_bichromatic_phases
from .sim import TruncationError, analytic_observables, fock_oracle, parity_scan
from .trajectory import sample_trajectory

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_SOLUTION = 2
EXIT_TRUNCATION = 3


class _Run:
    """Collects inputs and outputs of one invocation for the manifest."""

    def __init__(self, args, argv):
        self.argv = list(argv)
        self.command = args.command if args.command != "sweep" else f"sweep {args.kind}"
        self.out_dir = Path(args.output_dir)
        self.name = args.name or self.command.replace(" ", "_").replace("-", "_")
        self.inputs = {}
        self.outputs = []
        self.start = time.perf_counter()

    def read(self, path) -> Path:
        path = Path(path)
        self.inputs[str(path)] = hashlib.sha256(path.read_bytes()).hexdigest()
        return path

    def path(self, suffix: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        p = self.out_dir / f"{self.name}{suffix}"
        self.outputs.append(p)
        return p

    def finish(self, status: int) -> int:
        manifest = self.out_dir / f"{self.name}.manifest.json"
        self.out_dir.mkdir(parents=True, exist_ok=True)
        dump_json({
            "command": self.command,
            "argv": self.argv,
            "inputs": self.inputs,
            "outputs": [{"path": str(p), "sha256": hashlib.sha256(p.read_bytes()).hexdigest()}
                        for p in self.outputs if p.exists()],
            "exit_code": status,
            "wall_time_s": time.perf_counter() - self.start,
            "version": __version__,
        }, manifest)
        return status


# ---------------------------------------------------------------------------
# formatting helpers

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _hz(x):
    return None if x is None else float(x) / TWO_PI


def parse_targets(text: str | None) -> tuple:
    """``"1:1,2:3"`` -> ``((0, 1), (1, 3))``."""
    if not text:
        return ()
    out = []
    for item in text.split(","):
        try:
            k, q = item.split(":")
            out.append((int(k) - 1, int(q)))
        except ValueError:
            raise ValueError(f"--targets: cannot parse {item!r}, expected mode:order") from None
    return tuple(out)


def parse_ordering(text: str):
    if text == "minimize_rabi":
        return text
    try:
        return tuple(int(k) - 1 for k in text.split(","))
    except ValueError:
        raise ValueError(f"--ordering: expected 'minimize_rabi' or mode list, got {text!r}") from None


def _grid(lo: float, hi: float, points: int, log: bool = False) -> np.ndarray:
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise ValueError(f"range needs min < max, got {lo!r}, {hi!r}")
    if points < 2:
        raise ValueError("--points must be >= 2")
    if log:
        if lo <= 0:
            raise ValueError("log-spaced range needs min > 0")
        return np.geomspace(lo, hi, points)
    return np.linspace(lo, hi, points)


def _load_design(run: _Run, path, spectrum_path=None):
    """Gate and spectrum from a design file (spectrum may come separately)."""
    data = json.loads(run.read(path).read_text())
    try:
        gate = gate_from_dict(data.get("gate", data))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if spectrum_path is not None:
        spectrum = load_spectrum(run.read(spectrum_path))
    elif "spectrum" in data:
        try:
            spectrum = require_valid(spectrum_from_dict(data["spectrum"]))
        except ValueError as exc:
            raise ValueError(f"{path}: spectrum: {exc}") from None
    else:
        raise ValueError(f"{path} holds no spectrum; pass --spectrum")
    return gate, spectrum


def _mode_index(k: int, spectrum: ModeSpectrum) -> int:
    if not 1 <= k <= len(spectrum):
        raise ValueError(f"--mode {k} out of range 1..{len(spectrum)}")
    return k - 1


# ---------------------------------------------------------------------------
# guarded sweep points

class _Guarded:
    """Evaluate one sweep point, turning a failure into a gap message."""

    def __init__(self, func):
        self.func = func

    def __call__(self, x):
        try:
            return self.func(x), ""
        except NoSolutionError as exc:
            return None, f"no-solution: {exc}"
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            return None, f"{type(exc).__name__}: {exc}"


def _filter_point(seq, spectrum, rabi, qubit, symmetrize, x):
    omega = TWO_PI * x / seq.total_duration
    curve = filter_function_first_order(seq, spectrum, rabi, [omega], qubit, symmetrize)
    return [float(curve.values[0])] + [float(curve.columns[f"f_mode_{k + 1}"][0])
                                       for k in range(len(spectrum))]


def _response_point(config, spectrum, depth, phase_grid, qubit, x):
    omega = TWO_PI * x / config.gate_time
    p1 = phase_resolved_response(config, spectrum, omega, depth, phase_grid, qubit)
    return [float(np.mean(p1)), float(np.min(p1)), float(np.max(p1))]


def _gap_status(gaps) -> int:
    """Exit status of a sweep: nonzero only when every point failed."""
    if not gaps or any(g == "" for g in gaps):
        return EXIT_OK
    if all(g.startswith("no-solution") for g in gaps):
        return EXIT_NO_SOLUTION
    return EXIT_INPUT


# ---------------------------------------------------------------------------
# commands

def _design_request(args, spectrum) -> DesignRequest:
    return DesignRequest(spectrum, args.gate_time, parse_targets(args.targets), args.scheme,
                         parse_ordering(args.ordering), args.basis)


def cmd_design(args, run: _Run) -> int:
    spectrum = load_spectrum(run.read(args.spectrum))
    result = design_gate(_design_request(args, spectrum))
    config = result.config
    diagnostics = []
    for d in result.diagnostics():
        diagnostics.append({
            "mode": d["mode"] + 1,
            "detuning_hz": d["detuning"] / TWO_PI,
            "residual_re_s": d["residual_re"],
            "residual_im_s": d["residual_im"],
            "closure_ratio": d["closure_ratio"],
            "entangling_phase_rad": d["entangling_phase_rad"],
        })
    data = {
        "gate": gate_to_dict(config),
        "spectrum": spectrum_to_dict(spectrum),
        "scheme": args.scheme,
        "ordering": {"modes": [k + 1 for k in result.ordering],
                     "detunings_hz": [spectrum.detunings[k] / TWO_PI for k in result.ordering]},
        "entangling_phase_rad": math.fsum(result.entangling_phase_per_mode),
        "diagnostics": diagnostics,
        "rabi_solutions_considered": [
            {"ordering_hz": [d / TWO_PI for d in dets], "rabi_hz": rabi / TWO_PI}
            for dets, rabi in result.rabi_solutions_considered],
    }
    dump_json(data, run.path(".json"))
    write_csv(run.path("_sequence.csv"), ["duration_s", "phase_rad"],
              zip(config.sequence.durations, config.sequence.phases))
    return EXIT_OK


def _sweep_detuning(args, run: _Run) -> int:
    spectrum = load_spectrum(run.read(args.spectrum))
    offsets_hz = _grid(args.min, args.max, args.points)
    request = _design_request(args, spectrum)
    if request.ordering != "minimize_rabi":
        raise ValueError("detuning sweeps always minimise the drive over orderings")
    points = detuning_sweep(spectrum, TWO_PI * offsets_hz, args.gate_time, request.targets,
                            args.scheme, args.basis, args.parallel)
    rows = [(hz, p.fidelity, _hz(p.rabi), ";".join(repr(d / TWO_PI) for d in p.ordering), p.gap)
            for hz, p in zip(offsets_hz, points)]
    write_csv(run.path(".csv"), ["offset_hz", "fidelity", "rabi_hz", "ordering", "gap"], rows)
    if args.plot:
        from .plotting import plot_curve
        fid = [np.nan if p.fidelity is None else p.fidelity for p in points]
        plot_curve(run.path(".png"), offsets_hz / 1e3, {"Bell fidelity": fid},
                   "drive offset (kHz)", "fidelity")
    return _gap_status([p.gap for p in points])


def _sweep_static(args, run: _Run) -> int:
    config, spectrum = _load_design(run, args.design, args.spectrum)
    errors_hz = _grid(args.min, args.max, args.points)
    job = _Guarded(_StaticJob(config, spectrum, args.exact, args.rescale, args.qubit - 1))
    results = ordered_map(job, (TWO_PI * errors_hz).tolist(), args.parallel)
    rows = [(e, v, g) for e, (v, g) in zip(errors_hz, results)]
    write_csv(run.path(".csv"), ["error_hz", "p1", "gap"], rows)
    if args.plot:
        from .plotting import plot_curve
        p1 = [np.nan if v is None else v for v, _ in results]
        plot_curve(run.path(".png"), errors_hz / 1e3, {"P1": p1}, "static error (kHz)", "P1")
    return _gap_status([g for _, g in results])


def _sweep_filter(args, run: _Run) -> int:
    config, spectrum = _load_design(run, args.design, args.spectrum)
    xs = _grid(args.min, args.max, args.points, args.log)
    func = functools.partial(_filter_point, config.sequence, spectrum, config.rabi,
                             args.qubit - 1, args.symmetrize)
    results = ordered_map(_Guarded(func), xs.tolist(), args.parallel)
    m = len(spectrum)
    header = ["omega_taug_over_2pi", "f_total"] + [f"f_mode_{k + 1}" for k in range(m)] + ["gap"]
    rows = [[x] + (v if v is not None else [None] * (m + 1)) + [g]
            for x, (v, g) in zip(xs, results)]
    write_csv(run.path(".csv"), header, rows)
    if args.plot:
        from .plotting import plot_curve
        total = [np.nan if v is None else v[0] for v, _ in results]
        plot_curve(run.path(".png"), xs, {"F": total}, r"$\omega\tau_g/2\pi$",
                   r"F (rad$^2$ s$^2$)", logx=args.log, logy=True)
    return _gap_status([g for _, g in results])


def _sweep_response(args, run: _Run) -> int:
    config, spectrum = _load_design(run, args.design, args.spectrum)
    if args.depth_hz is None:
        raise ValueError("response sweeps need --depth-hz")
    xs = _grid(args.min, args.max, args.points, args.log)
    func = functools.partial(_response_point, config, spectrum, TWO_PI * args.depth_hz,
                             args.phase_grid, args.qubit - 1)
    results = ordered_map(_Guarded(func), xs.tolist(), args.parallel)
    rows = []
    for x, (v, g) in zip(xs, results):
        values = [None] * 3 if v is None else [y + args.p1_offset for y in v]
        rows.append([x] + values + [g])
    write_csv(run.path(".csv"), ["omega_taug_over_2pi", "p1_mean", "p1_min", "p1_max", "gap"], rows)
    if args.plot:
        from .plotting import plot_curve
        mean = [np.nan if r[1] is None else r[1] for r in rows]
        plot_curve(run.path(".png"), xs, {"phase-averaged P1": mean}, r"$\omega\tau_g/2\pi$",
                   "P1", logx=args.log, logy=True)
    return _gap_status([g for _, g in results])


_SWEEPS = {
    "detuning": _sweep_detuning,
    "static-error": _sweep_static,
    "filter-function": _sweep_filter,
    "response": _sweep_response,
}


def cmd_sweep(args, run: _Run) -> int:
    return _SWEEPS[args.kind](args, run)


def cmd_trajectory(args, run: _Run) -> int:
    config, spectrum = _load_design(run, args.design, args.spectrum)
    if args.points < 1:
        raise ValueError("--points must be >= 1")
    modes = range(len(spectrum)) if args.mode is None else [_mode_index(args.mode, spectrum)]
    for k in modes:
        traj = sample_trajectory(config.sequence, spectrum.detunings[k], args.points)
        rows = zip(traj.times, traj.displacements.real, traj.displacements.imag)
        write_csv(run.path(f"_mode{k + 1}.csv"), ["time_s", "re_alpha", "im_alpha"], rows)
        if args.plot:
            from .plotting import plot_trajectory
            plot_trajectory(run.path(f"_mode{k + 1}.png"), traj.displacements,
                            f"mode {k + 1}, {spectrum.detunings[k] / TWO_PI / 1e3:.4g} kHz")
    return EXIT_OK


def cmd_simulate(args, run: _Run) -> int:
    config, spectrum = _load_design(run, args.design, args.spectrum)
    noise = None
    if args.noise is not None:
        noise = load_noise(run.read(args.noise))
    elif args.static_error_hz is not None:
        noise = StaticOffset(TWO_PI * args.static_error_hz)
    status = EXIT_OK
    if args.engine == "fock":
        try:
            obs = fock_oracle(config, spectrum, noise, cutoff=args.cutoff)
        except TruncationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_TRUNCATION
        if not obs.diagnostics["reliable"]:
            print(f"warning: truncation diagnostic {obs.diagnostics['truncation']:.3e} "
                  f"exceeds limit; raise --cutoff", file=sys.stderr)
            status = EXIT_TRUNCATION
    else:
        obs = analytic_observables(config, spectrum, noise)
    data = obs.to_dict()
    data["noise"] = None if noise is None else noise_to_dict(noise)
    if spectrum.qubit_count == 2:
        phases = np.linspace(0, 2 * np.pi, args.parity_phases, endpoint=False)
        contrast, phi0, fidelity = parity_scan(config, spectrum, phases, noise)
        data["parity_scan"] = {"points": args.parity_phases, "contrast": contrast,
                               "phase_rad": phi0, "fidelity": fidelity}
    dump_json(data, run.path(".json"))
    return status


def cmd_export_bichromatic(args, run: _Run) -> int:
    config, _ = _load_design(run, args.design, args.spectrum)
    segments = to_bichromatic_phases(config.sequence, args.spin_phase)
    with open(run.path(".csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["duration_s", "phase_blue_rad", "phase_red_rad"])
        for seg in segments:
            writer.writerow([f"{seg.duration:.16e}", f"{seg.phase_blue:.16e}",
                             f"{seg.phase_red:.16e}"])
    return EXIT_OK


_COMMANDS = {
    "design": cmd_design,
    "sweep": cmd_sweep,
    "trajectory": cmd_trajectory,
    "simulate": cmd_simulate,
    "export-bichromatic": cmd_export_bichromatic,
}


# ---------------------------------------------------------------------------
# argument parsing

def _add_common(p):
    p.add_argument("-o", "--output-dir", default=".", help="directory for output files")
    p.add_argument("--name", help="file stem for outputs (default: command name)")
    p.add_argument("--plot", action="store_true", help="also render PNG figures")


def _add_design_flags(p, spectrum_positional: bool):
    if spectrum_positional:
        p.add_argument("spectrum", help="mode spectrum JSON")
    p.add_argument("--gate-time", type=float, required=True, help="gate duration (s)")
    p.add_argument("--targets", help="mode:order pairs, e.g. 1:1,2:3 (1-based modes)")
    p.add_argument("--scheme", choices=("phase_modulated", "standard"), default="phase_modulated")
    p.add_argument("--ordering", default="minimize_rabi",
                   help="'minimize_rabi' or explicit modes, innermost first, e.g. 2,1,1")
    p.add_argument("--basis", choices=("x", "y", "z"), default="x")


def _add_gate_input(p):
    p.add_argument("--design", required=True, help="design JSON (gate plus spectrum)")
    p.add_argument("--spectrum", help="spectrum JSON overriding the one in the design file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasegate",
                                     description="Phase-modulated two-qubit gate design and analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="build a gate for a mode spectrum")
    _add_design_flags(p, True)
    _add_common(p)

    p = sub.add_parser("sweep", help="evaluate a curve over a parameter range")
    p.add_argument("kind", choices=tuple(_SWEEPS))
    p.add_argument("--min", type=float, required=True,
                   help="range start (Hz for detuning/static-error, w*tau/2pi otherwise)")
    p.add_argument("--max", type=float, required=True, help="range end")
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--log", action="store_true", help="log-spaced abscissa")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--spectrum", help="spectrum JSON (template for detuning sweeps)")
    p.add_argument("--design", help="design JSON (all kinds except detuning)")
    p.add_argument("--gate-time", type=float, help="gate duration (s), detuning sweeps")
    p.add_argument("--targets", help="mode:order pairs, detuning sweeps")
    p.add_argument("--scheme", choices=("phase_modulated", "standard"), default="phase_modulated")
    p.add_argument("--ordering", default="minimize_rabi", help=argparse.SUPPRESS)
    p.add_argument("--basis", choices=("x", "y", "z"), default="x")
    p.add_argument("--exact", action="store_true", help="exact thermal P1 (static-error)")
    p.add_argument("--rescale", action="store_true",
                   help="re-solve the drive at each error (static-error)")
    p.add_argument("--symmetrize", action="store_true", help="report F(w) + F(-w)")
    p.add_argument("--depth-hz", type=float, help="modulation depth (response)")
    p.add_argument("--phase-grid", type=int, default=32, help="modulation phases (response)")
    p.add_argument("--p1-offset", type=float, default=0.0,
                   help="constant added to reported P1, e.g. a measurement floor (response)")
    p.add_argument("--qubit", type=int, default=1, help="qubit whose P1 / F is reported")
    _add_common(p)

    p = sub.add_parser("trajectory", help="sample mode trajectories of a design")
    p.add_argument("design", help="design JSON")
    p.add_argument("--spectrum")
    p.add_argument("--mode", type=int, help="1-based mode (default: every mode)")
    p.add_argument("--points", type=int, default=32, help="samples per segment")
    _add_common(p)

    p = sub.add_parser("simulate", help="gate observables with optional noise")
    p.add_argument("design", help="design JSON")
    p.add_argument("--spectrum")
    p.add_argument("--noise", help="noise model JSON")
    p.add_argument("--static-error-hz", type=float, help="shortcut for a static offset")
    p.add_argument("--engine", choices=("analytic", "fock"), default="analytic")
    p.add_argument("--cutoff", type=int, default=12, help="Fock cutoff (fock engine)")
    p.add_argument("--parity-phases", type=int, default=64)
    _add_common(p)

    p = sub.add_parser("export-bichromatic", help="per-tone phases for the bichromatic drive")
    p.add_argument("design", help="design JSON")
    p.add_argument("--spectrum")
    p.add_argument("--spin-phase", type=float, default=0.0, help="spin phase (rad)")
    _add_common(p)
    return parser


def _check_sweep_args(args):
    if args.kind == "detuning":
        missing = [f for f in ("spectrum", "gate_time") if getattr(args, f) is None]
    else:
        missing = [] if args.design else ["design"]
    if missing:
        flags = ", ".join("--" + m.replace("_", "-") for m in missing)
        raise ValueError(f"sweep {args.kind} needs {flags}")
    if args.qubit not in (1, 2):
        raise ValueError("--qubit must be 1 or 2")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    run = _Run(args, argv)
    try:
        if args.command == "sweep":
            _check_sweep_args(args)
        status = _COMMANDS[args.command](args, run)
    except NoSolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_NO_SOLUTION)
    except (ValueError, TypeError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return run.finish(EXIT_INPUT)
    return run.finish(status)


if __name__ == "__main__":
    sys.exit(main())
