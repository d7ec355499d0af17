"""Deterministic command line front end.

Subcommands: build, energy, sweep, bootstrap, verify, fit.  Parameters come
from flags, optionally seeded by a JSON config file (flags win; unknown
config keys are rejected), and every summary echoes the canonical
normalized configuration.  All floating output is printed with 17
significant digits and files are written atomically, so identical runs
produce byte-identical CSV/JSON (and timestamp-free SVG).  The environment
variable TARTARLAB_THREADS caps worker threads for sweep validation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import cones, energy, laminate, plots, scaling
from .core import DiagMatrix, apply_g, apply_h
from .energy import mean_matrix, total_energy
from .fields import Grid, PhaseField, random_phase_field, read_phase_field, write_phase_field

PROG = "tartarlab"


# ----------------------------- formatting ---------------------------------

def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _json_value(obj) -> str:
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        inner = ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    return _json_value(obj) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append(fmt_float(v))
            elif isinstance(v, Fraction):
                cells.append(fmt_float(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


class CliError(ValueError):
    pass


# ----------------------------- config merging -----------------------------

def _merge_config(args: argparse.Namespace, schema: dict) -> dict:
    """Defaults, then config file, then explicit flags; unknown keys rejected."""
    cfg = {k: spec[1] for k, spec in schema.items()}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise CliError("config file must hold a JSON object")
        for k, v in raw.items():
            if k not in schema:
                raise CliError(f"unknown config key {k!r}")
            cfg[k] = schema[k][0](v)
    for k, (conv, _default) in schema.items():
        flag = getattr(args, k.replace("-", "_"), None)
        if flag is not None:
            cfg[k] = conv(flag)
    missing = [k for k, v in cfg.items() if v is _REQUIRED]
    if missing:
        raise CliError(f"missing required parameter(s): {', '.join(missing)}")
    return cfg


_REQUIRED = object()


def _parse_fraction(v) -> Fraction:
    if isinstance(v, str) and "/" in v:
        num, den = v.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(v if not isinstance(v, str) else float(v)).limit_denominator(2 ** 60)


def _parse_matrix(v) -> DiagMatrix:
    if isinstance(v, (list, tuple)):
        a, b = v
    else:
        a, b = str(v).split(",")
    return DiagMatrix(float(a), float(b))


def _matrix_json(m: DiagMatrix) -> list[float]:
    return [float(m.a), float(m.b)]


def _eps_grid(v) -> list[float]:
    """Grid spec "start_exp:stop_exp:count" in log2, or an explicit list."""
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    start, stop, count = str(v).split(":")
    exps = np.linspace(float(start), float(stop), int(count))
    return [float(2.0 ** e) for e in exps]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TARTARLAB_THREADS", "1")))
    except ValueError:
        return 1


# ----------------------------- subcommands --------------------------------

def cmd_build(args) -> int:
    schema = {
        "n": (int, _REQUIRED),
        "m": (int, _REQUIRED),
        "r": (_parse_fraction, _REQUIRED),
        "F": (_parse_matrix, DiagMatrix(0.0, 0.0)),
        "eps": (float, 0.01),
        "figure": (bool, False),
    }
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    spec = laminate.LaminateSpec(cfg["m"], cfg["r"], cfg["F"], Grid(cfg["n"]))
    chi, state = laminate.build(spec)
    breakdown = total_energy(chi, cfg["F"], cfg["eps"])
    estimate = laminate.analytic_energy_estimate(spec, cfg["eps"])
    m1, m2, lam = laminate.decompose_F(cfg["F"])

    out.mkdir(parents=True, exist_ok=True)
    write_phase_field(chi, out / "field.txt")
    atomic_write(out / "rectangles.csv",
                 csv_text(["x0", "y0", "x1", "y1", "label", "generation"], state.csv_rows()))
    summary = {
        "config": _canonical(cfg, {"r": str, "F": _matrix_json}),
        "energy": breakdown.to_dict(),
        "analytic_estimate": estimate.to_dict(),
        "first_order": {
            "layer1": laminate.matrix_name(m1),
            "layer2": laminate.matrix_name(m2),
            "fraction": float(lam),
        },
        "rectangles": len(state.rects),
        "generation": state.generation,
        "volume_fractions": [float(v) for v in chi.volume_fractions()],
    }
    atomic_write(out / "summary.json", dumps(summary))
    if cfg["figure"]:
        plots.phase_field_figure(chi, out / "field.svg")
    print(f"build: total={fmt_float(breakdown.total)} rects={len(state.rects)} -> {out}")
    return 0


def cmd_energy(args) -> int:
    schema = {
        "field": (str, _REQUIRED),
        "F": (_parse_matrix, DiagMatrix(0.0, 0.0)),
        "eps": (float, 0.01),
    }
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    chi = read_phase_field(cfg["field"])
    breakdown = total_energy(chi, cfg["F"], cfg["eps"])
    report = {
        "config": _canonical(cfg, {"F": _matrix_json}),
        "energy": breakdown.to_dict(),
    }
    atomic_write(out / "energy.json", dumps(report))
    print(f"energy: total={fmt_float(breakdown.total)} -> {out / 'energy.json'}")
    return 0


def cmd_sweep(args) -> int:
    schema = {
        "eps-grid": (_eps_grid, _eps_grid("-8:-60:27")),
        "n-cap": (int, 4096),
        "no-validate": (bool, False),
        "synthetic-rate": (lambda v: None if v is None else float(v), None),
        "envelope-orders": (lambda v: [int(x) for x in str(v).split(",")], [1, 2, 3, 4, 5, 6]),
    }
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    eps_list = cfg["eps-grid"]
    if len(eps_list) < 8:
        raise CliError(f"sweep needs at least 8 epsilon values, got {len(eps_list)}")
    n_cap = None if cfg["no-validate"] else cfg["n-cap"]

    threads = _threads()
    if threads > 1 and n_cap is not None:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(scaling.sweep, [e], n_cap) for e in eps_list]
            records = [f.result()[0] for f in futs]
    else:
        records = scaling.sweep(eps_list, n_cap)

    if cfg["synthetic-rate"] is not None:
        c = cfg["synthetic-rate"]
        records = [
            scaling.SweepRecord(r.eps, r.m_opt, r.r_opt,
                                math.exp(-c * math.sqrt(abs(math.log(r.eps)))))
            for r in records
        ]
    fit = scaling.fit_scaling(records)
    window = [r for r in records if r.eps <= 2.0 ** -40]
    if len(window) < 8:
        window = records[-8:]
    fit_window = scaling.fit_scaling(window)
    envelopes = scaling.fixed_order_envelope(cfg["envelope-orders"], eps_list)

    atomic_write(out / "sweep.csv",
                 csv_text(["eps", "m_opt", "r_opt", "E_surrogate", "E_grid", "n_grid"],
                          [r.to_row() for r in records]))
    fit_json = {
        "config": _canonical(cfg, {"eps-grid": lambda v: [float(x) for x in v]}),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "power_law_slope": fit.power_law_slope,
        "windowed_power_law_slope": fit_window.power_law_slope,
        "records": len(records),
        "validated": sum(1 for r in records if r.E_grid is not None),
    }
    atomic_write(out / "fit.json", dumps(fit_json))
    plots.sweep_figure(records, fit, envelopes, out / "sweep.svg")
    print(f"sweep: slope={fmt_float(fit.slope)} r2={fmt_float(fit.r2)} -> {out}")
    return 0


def cmd_bootstrap(args) -> int:
    schema = {
        "field": (str, None),
        "n": (lambda v: None if v is None else int(v), None),
        "m": (lambda v: None if v is None else int(v), None),
        "r": (lambda v: None if v is None else _parse_fraction(v), None),
        "alpha": (float, _REQUIRED),
        "d": (int, 3),
        "eps": (float, _REQUIRED),
        "nu": (float, 0.5),
        "gamma": (lambda v: None if v is None else float(v), None),
        "figure": (bool, False),
    }
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    if cfg["field"]:
        chi = read_phase_field(cfg["field"])
    elif cfg["n"] and cfg["m"] and cfg["r"]:
        spec = laminate.LaminateSpec(cfg["m"], cfg["r"], DiagMatrix(0.0, 0.0), Grid(cfg["n"]))
        chi, _ = laminate.build(spec)
    else:
        raise CliError("bootstrap needs --field PATH or an inline spec --n --m --r")
    params = cones.BootstrapParams(
        alpha=cfg["alpha"], d=cfg["d"], eps=cfg["eps"], nu=cfg["nu"], gamma=cfg["gamma"]
    )
    breakdown = total_energy(chi, mean_matrix(chi), cfg["eps"])
    report = cones.bootstrap(chi, params, breakdown)
    low = cones.low_mode_bound_check(chi, params, max(report.empirical_C0, 1.0), breakdown)

    lines = "".join(dumps(step.to_dict()) for step in report.steps)
    atomic_write(out / "report.jsonl", lines)
    atomic_write(out / "report.csv",
                 csv_text(["m", "m_e", "m_o", "mu_me", "mu_mo",
                           "residual_f1", "residual_f2", "bound"],
                          [(s.m, s.m_e, s.m_o, s.mu_me, s.mu_mo,
                            s.residual_f1, s.residual_f2, s.bound) for s in report.steps]))
    summary = {
        "config": _canonical(cfg, {"r": lambda v: None if v is None else str(v)}),
        "termination_m": report.termination_m,
        "mu": params.mu,
        "mu2_base": params.mu2_base,
        "gamma": params.gamma,
        "empirical_C0": report.empirical_C0,
        "c0": report.c0,
        "delta": report.delta,
        "beta": report.beta,
        "core": report.core,
        "low_mode_mass": report.low_mode_mass,
        "low_mode_bound": report.low_mode_bound,
        "low_mode_satisfied": report.satisfied(),
        "improved_bound": low.rhs_improved,
        "alpha_star": low.alpha_star,
    }
    atomic_write(out / "summary.json", dumps(summary))
    if cfg["figure"]:
        plots.bootstrap_figure(report, out / "report.svg")
    print(f"bootstrap: steps={report.termination_m} C0={fmt_float(report.empirical_C0)} -> {out}")
    return 0


def _verify_suites(seed: int, oracle_fields: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    suites = []

    def record(name, passed, slack, detail=""):
        suites.append({"name": name, "passed": bool(passed), "slack": float(slack),
                       "detail": detail})

    # exhaustive rigidity on the 2x2 grid
    zero_energy = 0
    nonconstant_zero = 0
    g2 = Grid(2)
    for code in range(256):
        labels = np.array([[code % 4, code // 4 % 4], [code // 16 % 4, code // 64 % 4]],
                          dtype=np.uint8) + 1
        chi = PhaseField(g2, labels)
        e = energy.elastic_energy(chi, mean_matrix(chi))
        if e <= 1e-12:
            zero_energy += 1
            if len(set(labels.ravel().tolist())) > 1:
                nonconstant_zero += 1
    record("rigidity_2x2_exhaustive", zero_energy == 4 and nonconstant_zero == 0,
           zero_energy, f"{zero_energy} zero-energy fields, {nonconstant_zero} nonconstant")

    # random rigidity on 4x4
    g4 = Grid(4)
    worst = math.inf
    bad = 0
    for _ in range(10_000):
        chi = random_phase_field(g4, rng)
        if len(set(chi.labels.ravel().tolist())) == 1:
            continue
        e = energy.elastic_energy(chi, mean_matrix(chi))
        worst = min(worst, e)
        if e <= 1e-12:
            bad += 1
    record("rigidity_4x4_random", bad == 0, worst, f"min nonconstant energy {worst:.3e}")

    # Parseval against direct double summation on a small grid
    worst = 0.0
    for _ in range(20):
        f = rng.standard_normal((8, 8))
        coeffs = np.fft.fftshift(np.fft.fft2(f)) / 64.0
        direct = 0.0
        ks = np.arange(-4, 4)
        x = np.arange(8) / 8.0
        for k1 in ks:
            for k2 in ks:
                phase = np.exp(-2j * np.pi * (k1 * x.reshape(8, 1) + k2 * x.reshape(1, 8)))
                c = (f * phase).sum() / 64.0
                direct += abs(c) ** 2
        lhs = float(np.sum(coeffs.real ** 2 + coeffs.imag ** 2))
        rhs = float(np.mean(f ** 2))
        worst = max(worst, abs(lhs - rhs) / rhs, abs(direct - rhs) / rhs)
    record("parseval_random", worst <= 1e-10, worst, f"max relative error {worst:.3e}")

    # oracle equivalence of the two elastic energy routes
    g16 = Grid(16)
    worst = 0.0
    for _ in range(oracle_fields):
        chi = random_phase_field(g16, rng)
        F = mean_matrix(chi)
        e_formula = energy.elastic_energy(chi, F)
        e_iter, _ = energy.direct_minimum(chi, F)
        worst = max(worst, abs(e_formula - e_iter) / max(e_formula, 1e-30))
    record("oracle_equivalence", worst <= 1e-8, worst, f"max relative gap {worst:.3e}")

    # coupling exactness on random fields
    exact = True
    for _ in range(20):
        chi = random_phase_field(g16, rng)
        v11, v22 = energy.diag_values(chi)
        exact &= bool(np.all(apply_g(v22) == v11)) and bool(np.all(apply_h(v11) == v22))
    record("coupling_exact", exact, 0.0, "g(chi22) == chi11 and h(chi11) == chi22 exactly")

    # concentration ratio stays under the recorded constant
    from .laminate import LaminateSpec, build as lam_build

    spec = LaminateSpec(2, Fraction(1, 4), DiagMatrix(0.0, 0.0), Grid(256))
    chi, _ = lam_build(spec)
    breakdown = total_energy(chi, DiagMatrix(0.0, 0.0), 1.0)
    worst = 0.0
    for mu in (0.0625, 0.125, 0.25, 0.5):
        for mu2 in (32.0, 64.0, 128.0):
            worst = max(worst, cones.verify_concentration(chi, mu, mu2, breakdown).ratio)
    record("concentration_bounded", worst <= 1.0, worst, f"max ratio {worst:.4f} <= 1.0")

    return suites


def cmd_verify(args) -> int:
    schema = {
        "seed": (int, 20240613),
        "oracle-fields": (int, 20),
    }
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    suites = _verify_suites(cfg["seed"], cfg["oracle-fields"])
    report = {"config": _canonical(cfg, {}), "properties": suites,
              "passed": all(s["passed"] for s in suites)}
    atomic_write(out / "verify.json", dumps(report))
    for s in suites:
        print(f"{'PASS' if s['passed'] else 'FAIL'} {s['name']}: {s['detail']}")
    return 0 if report["passed"] else 1


def cmd_fit(args) -> int:
    schema = {"input": (str, _REQUIRED)}
    cfg = _merge_config(args, schema)
    out = Path(args.out)
    records = []
    with open(cfg["input"]) as fh:
        header = fh.readline().strip().split(",")
        idx = {name: i for i, name in enumerate(header)}
        for line in fh:
            cells = line.strip().split(",")
            if not line.strip():
                continue
            records.append(scaling.SweepRecord(
                eps=float(cells[idx["eps"]]),
                m_opt=int(cells[idx["m_opt"]]),
                r_opt=Fraction(cells[idx["r_opt"]]).limit_denominator(2 ** 60),
                E_surrogate=float(cells[idx["E_surrogate"]]),
            ))
    fit = scaling.fit_scaling(records)
    atomic_write(out / "fit.json", dumps({
        "config": _canonical(cfg, {}),
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "power_law_slope": fit.power_law_slope,
        "records": len(records),
    }))
    print(f"fit: slope={fmt_float(fit.slope)} r2={fmt_float(fit.r2)} -> {out / 'fit.json'}")
    return 0


def _canonical(cfg: dict, converters: dict) -> dict:
    out = {}
    for k in sorted(cfg):
        v = cfg[k]
        if k in converters:
            v = converters[k](v)
        elif isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, DiagMatrix):
            v = _matrix_json(v)
        out[k] = v
    return out


# ----------------------------- entry point --------------------------------

def _add_common(sp):
    sp.add_argument("--config", help="JSON config file with per-command keys")
    sp.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=PROG, description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build", help="rasterize a laminate and report its energies")
    _add_common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--r", type=str)
    sp.add_argument("--F", type=str, help="mean gradient 'a,b'")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--figure", action="store_const", const=True)
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("energy", help="evaluate energies of a stored phase field")
    _add_common(sp)
    sp.add_argument("--field", type=str)
    sp.add_argument("--F", type=str)
    sp.add_argument("--eps", type=float)
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("sweep", help="optimize the surrogate over an epsilon grid")
    _add_common(sp)
    sp.add_argument("--eps-grid", type=str, help="log2 grid 'start:stop:count'")
    sp.add_argument("--n-cap", type=int)
    sp.add_argument("--no-validate", action="store_const", const=True)
    sp.add_argument("--synthetic-rate", type=float)
    sp.add_argument("--envelope-orders", type=str)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bootstrap", help="run the shrinking-cone residual iteration")
    _add_common(sp)
    sp.add_argument("--field", type=str)
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--r", type=str)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--d", type=int)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--figure", action="store_const", const=True)
    sp.set_defaults(func=cmd_bootstrap)

    sp = sub.add_parser("verify", help="run the property suites and report pass/fail")
    _add_common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--oracle-fields", type=int)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("fit", help="fit the scaling form to an existing sweep CSV")
    _add_common(sp)
    sp.add_argument("--input", type=str)
    sp.set_defaults(func=cmd_fit)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
