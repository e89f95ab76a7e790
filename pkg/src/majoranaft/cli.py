"""Command-line front end: ``majoranaft <command> [flags]``.

Commands: ``verify``, ``distill``, ``rate``, ``threshold``, ``fit``, ``cost``
and ``rerun`` (replay a manifest).  Every artifact is written atomically next
to a ``<out>.manifest.json`` holding the full spec, the seed and the package
version.  Flags override fields of a ``--config`` JSON file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__

FORMAT_VERSION = 1
COMMANDS = ("verify", "distill", "rate", "threshold", "fit", "cost")


@dataclass
class ExperimentSpec:
    """Validated description of one CLI run."""

    command: str
    d: int = 5
    d_list: list = field(default_factory=lambda: [5, 7, 9])
    rounds: Optional[int] = None
    samples: int = 10000
    pb: float = 1e-3
    pf: Optional[float] = None
    ratio: Optional[float] = None
    p_grid: list = field(default_factory=list)
    r_list: list = field(default_factory=list)
    nd: int = 0
    mode: str = "with_charge_detection"
    seed: Optional[int] = None
    workers: int = 1
    exact: bool = False
    target: float = 1e-15
    count_model: str = "torus"
    layout: str = "sparse"
    policy: str = "none"
    fit: Optional[dict] = None
    input: Optional[str] = None
    out: Optional[str] = None
    format: str = "json"

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known - {"version"})
        if unknown:
            raise SpecError(f"unknown fields: {unknown}")
        spec = cls(**{k: v for k, v in data.items() if k in known})
        spec.validate()
        return spec

    def validate(self) -> None:
        from .decoder import MODES
        if self.command not in COMMANDS:
            raise SpecError(f"unknown command {self.command!r}")
        if self.mode not in MODES:
            raise SpecError(f"unknown mode {self.mode!r}")
        if self.format not in ("csv", "json"):
            raise SpecError("format must be csv or json")
        if self.samples < 1 or self.workers < 1:
            raise SpecError("samples and workers must be positive")
        if self.nd not in (0, 1):
            raise SpecError("nd must be 0 or 1")
        if self.d < 3 or self.d % 2 == 0 or any(d < 3 or d % 2 == 0 for d in self.d_list):
            raise SpecError("lattice sizes must be odd and at least 3")

    def p_f(self, p_b: float) -> float:
        if self.pf is not None:
            return self.pf
        return (self.ratio or 0.0) * p_b


class SpecError(ValueError):
    pass


# --- output ---------------------------------------------------------------------------

def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_csv(rows: list) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=["version"] + list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({"version": FORMAT_VERSION, **row})
    return buf.getvalue()


def manifest(spec: ExperimentSpec) -> dict:
    return {"version": FORMAT_VERSION, "package_version": __version__, "spec": asdict(spec)}


def emit(spec: ExperimentSpec, result: dict, rows: Optional[list] = None) -> str:
    """Serialise the result; write it and its manifest when ``spec.out`` is set."""
    if spec.format == "csv" and rows is not None:
        text = to_csv(rows)
    else:
        text = json.dumps({"version": FORMAT_VERSION, **result}, indent=2, default=_json_default) + "\n"
    if spec.out:
        atomic_write(spec.out, text)
        atomic_write(spec.out + ".manifest.json", json.dumps(manifest(spec), indent=2) + "\n")
    return text


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# --- commands ---------------------------------------------------------------------------

def cmd_verify(spec: ExperimentSpec) -> tuple[dict, None, bool]:
    from . import oracle
    from .circuits import closed_form_distillation_rate, enumerate_distillation

    checks = {}
    table = oracle.verify_feedback_table()
    checks["feedback_table"] = table.ok
    checks["phase_gate"] = oracle.phase_gate_check()
    checks["hadamard"] = oracle.hadamard_check()
    rng = np.random.default_rng(spec.seed if spec.seed is not None else 0)
    fids = [oracle.cnot_fidelity(oracle.random_state(4, rng), rng) for _ in range(20)]
    checks["cnot"] = bool(min(fids) > 1 - 1e-8)
    poly = enumerate_distillation()
    num, den, _ = closed_form_distillation_rate()
    checks["distillation_identity"] = bool(poly.equals(num, den))
    checks["frame_tracking"] = not oracle.frame_prediction_check(n_sequences=20)
    ok = all(checks.values())
    return {"checks": checks, "ok": ok}, None, ok


def cmd_distill(spec: ExperimentSpec):
    from .circuits import distillation_failure_rate, enumerate_distillation, sample_distilled_pp
    from .frame import NoiseParams

    noise = NoiseParams(spec.p_f(spec.pb), spec.pb)
    out = {"p_b": spec.pb, "p_f": noise.p_f}
    if spec.exact or noise.p_f == 0:
        poly = enumerate_distillation()
        out["rate"] = float(poly(spec.pb))
        out["polynomial"] = str(poly.ratio())
        out["detection_rate"] = float(distillation_failure_rate(noise))
    if not spec.exact:
        seed = spec.seed
        s = sample_distilled_pp(noise, spec.samples, seed, "full")
        out["sampled_vector"] = s.vector.as_array().tolist()
        out["sampled_stderr"] = s.stderr.tolist()
        out["acceptance"] = s.accepted / s.attempts
    return out, None, True


def _run_config(spec: ExperimentSpec, d: int, p_b: float, seed: int, r: float = 1.0):
    from .experiments import RunConfig
    return RunConfig(d, spec.rounds or d, spec.samples, spec.p_f(p_b), p_b, spec.nd, spec.mode, seed, r)


def cmd_rate(spec: ExperimentSpec):
    from .experiments import estimate_logical_rate
    res = estimate_logical_rate(_run_config(spec, spec.d, spec.pb, spec.seed), spec.workers)
    return res.row(), [res.row()], True


def cmd_threshold(spec: ExperimentSpec):
    from .experiments import NoCrossing, find_threshold

    if not spec.p_grid:
        raise SpecError("threshold needs --p-grid")
    ratio = spec.ratio if spec.ratio is not None else 0.0
    rows: list = []
    try:
        res = find_threshold(ratio, spec.d_list, spec.mode, spec.nd, spec.p_grid, spec.samples,
                             spec.seed, spec.rounds, workers=spec.workers, progress=_progress)
        out = {"threshold": res.estimate, "ci": list(res.ci), "pairs": res.pair_crossings, "rows": res.rows}
        rows = res.rows
        ok = True
    except NoCrossing as exc:
        rows = getattr(exc, "rows", [])
        out, ok = {"threshold": None, "error": str(exc), "rows": rows}, False
    return out, rows, ok


def _progress(r) -> None:
    c = r.config
    print(f"d={c.d} p_b={c.p_b:.5g} p_l={r.p_l:.4g} +- {r.stderr:.2g}", file=sys.stderr, flush=True)


def cmd_fit(spec: ExperimentSpec):
    from .experiments import estimate_logical_rate, fit_scaling

    rows = []
    if spec.input:
        with open(spec.input) as fh:
            for row in csv.DictReader(fh):
                rows.append({k: float(row[k]) for k in ("d", "r", "p_l", "stderr")})
    else:
        if not spec.r_list:
            raise SpecError("fit needs --input or --r-list")
        for i, d in enumerate(spec.d_list):
            for j, r in enumerate(spec.r_list):
                res = estimate_logical_rate(_run_config(spec, d, spec.pb, spec.seed + 100 * i + j, r), spec.workers)
                _progress(res)
                rows.append(res.row())
    fit = fit_scaling([(r["d"], r["r"], r["p_l"], r["stderr"]) for r in rows])
    return {"fit": asdict(fit), "rows": rows}, rows, True


def cmd_cost(spec: ExperimentSpec):
    from .experiments import FitResult, normal_qubit_baseline, resource_cost, time_cost

    out = {"target": spec.target}
    if spec.fit:
        f = spec.fit
        fit = FitResult(f["kappa"], f["nu"], f["eta"], f.get("sigma_kappa", 0), f.get("sigma_nu", 0),
                        f.get("sigma_eta", 0), -f["kappa"], -f["nu"], -f["eta"], f.get("beta0", 0))
        d, n = resource_cost(fit, spec.target, spec.count_model)
        out["majorana"] = {"d": d, "qubits": n}
        if any(f.get(k) for k in ("sigma_kappa", "sigma_nu", "sigma_eta")):
            d2, n2 = resource_cost(fit.shifted(), spec.target, spec.count_model)
            out["majorana_pessimistic"] = {"d": d2, "qubits": n2}
    d, n = normal_qubit_baseline(spec.target)
    out["normal"] = {"d": d, "qubits": n}
    tc = time_cost(spec.layout, spec.nd, spec.policy, spec.pb)
    out["time"] = {"steps_per_round": tc.steps_per_round, "failure_rate": tc.failure_rate}
    return out, None, True


HANDLERS = {"verify": cmd_verify, "distill": cmd_distill, "rate": cmd_rate,
            "threshold": cmd_threshold, "fit": cmd_fit, "cost": cmd_cost}


def run(spec: ExperimentSpec) -> tuple[int, str]:
    """Execute a validated spec; returns the exit status and the emitted text."""
    if spec.seed is None:
        spec.seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    result, rows, ok = HANDLERS[spec.command](spec)
    text = emit(spec, result, rows)
    return (0 if ok else 1), text


# --- argument parsing ----------------------------------------------------------------------

def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="majoranaft", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON file with spec fields; flags take precedence")
        s.add_argument("--d", type=int)
        s.add_argument("--d-list", type=_ints, dest="d_list")
        s.add_argument("--rounds", type=int)
        s.add_argument("--samples", type=int)
        s.add_argument("--pb", type=float)
        s.add_argument("--pf", type=float)
        s.add_argument("--ratio", type=float)
        s.add_argument("--p-grid", type=_floats, dest="p_grid")
        s.add_argument("--r-list", type=_floats, dest="r_list")
        s.add_argument("--nd", type=int)
        s.add_argument("--mode")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        s.add_argument("--exact", action="store_true", default=None)
        s.add_argument("--target", type=float)
        s.add_argument("--count-model", dest="count_model")
        s.add_argument("--layout")
        s.add_argument("--policy")
        s.add_argument("--fit-json", dest="fit_json", help="JSON file holding a fit result")
        s.add_argument("--input")
        s.add_argument("--out")
        s.add_argument("--format")
    r = sub.add_parser("rerun", help="re-run the spec stored in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out")
    r.add_argument("--workers", type=int)
    return p


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    data: dict = {}
    if args.command == "rerun":
        with open(args.manifest) as fh:
            data = dict(json.load(fh)["spec"])
        if args.out:
            data["out"] = args.out
        if args.workers:
            data["workers"] = args.workers
        return ExperimentSpec.from_dict(data)
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    data["command"] = args.command
    for key, value in vars(args).items():
        if key in ("config", "command", "fit_json") or value is None:
            continue
        data[key] = value
    if args.fit_json:
        with open(args.fit_json) as fh:
            loaded = json.load(fh)
        data["fit"] = loaded.get("fit", loaded)
    return ExperimentSpec.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = spec_from_args(args)
        status, text = run(spec)
    except (SpecError, ValueError, KeyError, FileNotFoundError) as exc:
        print(json.dumps({"version": FORMAT_VERSION, "error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2
    if not spec.out:
        sys.stdout.write(text)
    else:
        print(f"wrote {spec.out}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
