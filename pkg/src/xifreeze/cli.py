"""Command-line front end.

Exit codes: 0 success, 1 a verification check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import chains
from .combinatorics import (
    SetPartition,
    enumerate_collision_types,
    enumeration_cap,
    integer_partitions,
    shape_multiplicity,
)
from .eppf import (
    EppfTable,
    check_addition_rule,
    ewens_eppf,
    invert_p_to_q,
    shape_law,
    solve_moehle,
)
from .measures import (
    FREEZE,
    BetaLambda,
    QArray,
    QRow,
    SimplexPoint,
    XiModel,
    backward_q,
    check_rate_consistency,
    q_array,
    q_row,
    rate_table,
    rates_proportional,
    recover_rates,
)


class InputError(ValueError):
    """Malformed or out-of-range user input (exit code 2)."""


# --------------------------------------------------------------------------
# model files

_MODEL_KEYS = {"freeze_rate", "kingman_mass", "atoms", "lambda_atoms", "lambda_beta"}


def _rational(value, what: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise InputError(f"{what}: expected an integer or 'p/q' string, got {value!r}")
    try:
        return Fraction(value) if isinstance(value, int) else Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{what}: cannot read {value!r} as a rational") from None


def _render_rational(x: Fraction) -> str:
    return str(Fraction(x))


def model_from_dict(doc: dict) -> XiModel:
    if not isinstance(doc, dict):
        raise InputError("model must be a JSON object")
    unknown = set(doc) - _MODEL_KEYS
    if unknown:
        raise InputError(f"unknown model keys: {sorted(unknown)}")
    atoms = []
    for i, atom in enumerate(doc.get("atoms", [])):
        try:
            weight, point = atom["weight"], atom["point"]
        except (TypeError, KeyError):
            raise InputError(f"atoms[{i}]: expected {{'weight': ..., 'point': [...]}}") from None
        coords = tuple(_rational(c, f"atoms[{i}].point") for c in point)
        try:
            atoms.append((_rational(weight, f"atoms[{i}].weight"), SimplexPoint(coords)))
        except ValueError as exc:
            raise InputError(f"atoms[{i}].point: {exc}") from None
    for i, atom in enumerate(doc.get("lambda_atoms", [])):
        try:
            weight, x = atom["weight"], atom["x"]
        except (TypeError, KeyError):
            raise InputError(f"lambda_atoms[{i}]: expected {{'weight': ..., 'x': ...}}") from None
        x = _rational(x, f"lambda_atoms[{i}].x")
        if not 0 < x <= 1:
            raise InputError(f"lambda_atoms[{i}].x = {x} is outside (0, 1]")
        atoms.append((_rational(weight, f"lambda_atoms[{i}].weight"), SimplexPoint((x,))))
    beta = None
    if doc.get("lambda_beta") is not None:
        lb = doc["lambda_beta"]
        try:
            alpha, b, mass = lb["alpha"], lb["beta"], lb["mass"]
        except (TypeError, KeyError):
            raise InputError("lambda_beta: expected {'alpha', 'beta', 'mass'}") from None
        if not (isinstance(alpha, int) and isinstance(b, int)) or isinstance(alpha, bool) or isinstance(b, bool):
            raise InputError("lambda_beta: alpha and beta must be integers")
        try:
            beta = BetaLambda(alpha, b, _rational(mass, "lambda_beta.mass"))
        except ValueError as exc:
            raise InputError(f"lambda_beta: {exc}") from None
    try:
        return XiModel(
            kingman_mass=_rational(doc.get("kingman_mass", 0), "kingman_mass"),
            atoms=tuple(atoms),
            freeze_rate=_rational(doc.get("freeze_rate", 0), "freeze_rate"),
            lambda_beta=beta,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def parse_model(path) -> XiModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


def render_model(xi: XiModel) -> dict:
    out: dict = {
        "freeze_rate": _render_rational(xi.freeze_rate),
        "kingman_mass": _render_rational(xi.kingman_mass),
        "atoms": [
            {"weight": _render_rational(w), "point": [_render_rational(c) for c in x.coords]}
            for w, x in xi.atoms
        ],
    }
    if xi.lambda_beta is not None:
        lb = xi.lambda_beta
        out["lambda_beta"] = {"alpha": lb.alpha, "beta": lb.beta, "mass": _render_rational(lb.mass)}
    return out


# --------------------------------------------------------------------------
# tables


def format_shape(lam) -> str:
    return "(" + ",".join(map(str, lam)) + ")"


def parse_shape(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise InputError(f"malformed shape {text!r}")
    try:
        return tuple(int(x) for x in text[1:-1].split(","))
    except ValueError:
        raise InputError(f"malformed shape {text!r}") from None


def write_table(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def rates_rows(xi: XiModel, n: int) -> list[list]:
    rows = [[b, FREEZE, _render_rational(xi.freeze_rate)] for b in range(1, n + 1)]
    for (b, ct), v in rate_table(xi, n).items():
        rows.append([b, str(ct), _render_rational(v)])
    rows.sort(key=lambda r: r[0])
    return rows


def qrow_rows(rows: list[QRow]) -> list[list]:
    out = []
    for row in rows:
        for key, v in row.items():
            out.append([row.b, str(key), _render_rational(v)])
    return out


def eppf_rows(table: EppfTable) -> list[list]:
    out = []
    for m in range(1, table.n + 1):
        for lam in integer_partitions(m):
            v = table(lam)
            out.append([format_shape(lam), _render_rational(v), repr(float(v))])
    return out


def read_eppf_table(path) -> EppfTable:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read EPPF table: {exc}") from None
    values = {}
    if text.lstrip().startswith("["):
        records = [(r["shape"], r["p"]) for r in json.loads(text)]
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames is None or "shape" not in reader.fieldnames or "p" not in reader.fieldnames:
            raise InputError("EPPF table needs 'shape' and 'p' columns")
        records = [(r["shape"], r["p"]) for r in reader]
    for shape_text, p in records:
        values[parse_shape(shape_text)] = _rational(p, f"p{shape_text}")
    n = max((sum(k) for k in values), default=0)
    missing = [lam for m in range(1, n + 1) for lam in integer_partitions(m) if lam not in values]
    if missing:
        raise InputError(f"EPPF table is missing shapes, e.g. {format_shape(missing[0])}")
    return EppfTable(n, values)


# --------------------------------------------------------------------------
# reports


@dataclass
class Check:
    name: str
    passed: bool
    value: str
    tolerance: str
    runtime: float

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


@dataclass
class Report:
    title: str
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def run(self, name: str, fn: Callable[[], tuple[bool, object]], tolerance="0") -> Check:
        t0 = time.perf_counter()
        try:
            passed, value = fn()
        except (ValueError, AssertionError) as exc:
            passed, value = False, f"error: {exc}"
        check = Check(name, bool(passed), str(value), str(tolerance), time.perf_counter() - t0)
        self.checks.append(check)
        return check

    def as_dict(self) -> dict:
        return {
            "title": self.title,
            "ok": self.ok,
            "info": self.info,
            "checks": [
                {"name": c.name, "status": c.status, "value": c.value, "tolerance": c.tolerance, "runtime": round(c.runtime, 6)}
                for c in self.checks
            ],
        }

    def render(self, fmt: str = "text") -> str:
        data = self.as_dict()
        if fmt == "json":
            return json.dumps(data, indent=2) + "\n"
        lines = [data["title"]]
        lines += [f"  {k}: {v}" for k, v in data["info"].items()]
        for c in data["checks"]:
            lines.append(f"  [{c['status']}] {c['name']}: value={c['value']} tol={c['tolerance']} ({c['runtime']:.3f}s)")
        lines.append("OK" if data["ok"] else "FAILED")
        return "\n".join(lines) + "\n"


def _max_diff(pairs) -> Fraction:
    return max((abs(Fraction(a) - Fraction(b)) for a, b in pairs), default=Fraction(0))


def _row_diff(a: QRow, b: QRow) -> Fraction:
    return _max_diff((va, b[k]) for k, va in a.items())


def corrupt_row(row: QRow) -> QRow:
    """Move half the freeze mass onto the first collision type (still a valid row)."""
    ct = enumerate_collision_types(row.b)[0]
    half = row.q1 / 2
    coll = dict(row.qcoll)
    coll[ct] += half
    return QRow(row.b, row.q1 - half, coll)


def verify_report(xi: XiModel, n_max: int, corrupt: int | None = None) -> Report:
    rep = Report(f"verify n_max={n_max}")
    rep.info["model"] = json.dumps(render_model(xi), sort_keys=True)
    if n_max < 2:
        raise InputError("--n-max must be >= 2")
    q = q_array(xi, n_max)
    if corrupt is not None:
        if not 2 <= corrupt < n_max:
            raise InputError("--corrupt-q must lie in [2, n_max)")
        rows = list(q.rows)
        rows[corrupt - 1] = corrupt_row(rows[corrupt - 1])
        q = QArray(tuple(rows))
        rep.info["corrupted_row"] = corrupt

    def consistency():
        r = check_rate_consistency(xi, n_max)
        return r.ok, r.max_residual

    def normalization():
        res = _max_diff((sum((v for _, v in row.items()), Fraction(0)), 1) for row in q.rows)
        return res == 0, res

    def backward():
        derived = backward_q(q.row(n_max))
        res = max(_row_diff(a, b) for a, b in zip(derived.rows, q.rows))
        return res == 0, res

    table_box: dict = {}

    def table():
        if "t" not in table_box:
            table_box["t"] = solve_moehle(q, require_consistent=False)
        return table_box["t"]

    def addition():
        t = table()
        res = max(check_addition_rule(t), _max_diff((t.normalization(m), 1) for m in range(1, n_max + 1)))
        return res == 0, res

    def ewens():
        theta = 2 * xi.freeze_rate / xi.kingman_mass
        t = table()
        res = _max_diff((v, ewens_eppf(theta, lam)) for lam, v in t.values.items())
        return res == 0, f"{res} (theta={theta})"

    def sa_fixed_point():
        # push the exchangeable law through the exact SA matrix at the largest cheap n
        m = min(n_max, 5)
        t = table()
        mat = chains.sa_transition_matrix(m, q.row(m))
        law = chains.exchangeable_law(mat.states, t)
        res = _max_diff(zip(mat.push_forward(law), law))
        return res == 0, f"{res} (n={m})"

    def inversion():
        t = table()
        res = max(_row_diff(invert_p_to_q(t, b), q.row(b)) for b in range(1, n_max + 1))
        return res == 0, res

    def recovery():
        rates, rho = recover_rates(q, 1)
        original = dict(rate_table(xi, n_max))
        original["rho"] = xi.freeze_rate
        rates = dict(rates)
        rates["rho"] = rho
        factor = rates_proportional(original, rates)
        return factor is not None and factor > 0, f"factor={factor}"

    rep.run("rate_consistency", consistency)
    rep.run("qrow_normalization", normalization)
    rep.run("backward_roundtrip", backward)
    rep.run("addition_rule", addition)
    if xi.is_kingman and xi.kingman_mass > 0 and xi.freeze_rate > 0:
        rep.run("ewens_equivalence", ewens)
    rep.run("sa_fixed_point", sa_fixed_point)
    rep.run("inversion_roundtrip", inversion)
    rep.run("rate_recovery", recovery)
    return rep


# --------------------------------------------------------------------------
# simulation


def simulate(xi: XiModel, n: int, mode: str, samples: int, seed: int, threads: int = 1,
             alpha: float = 1e-3) -> tuple[list[str], list[list], Report]:
    rep = Report(f"simulate mode={mode} n={n} samples={samples} seed={seed}")
    if samples < 1:
        raise InputError("--samples must be >= 1")
    if mode in ("fm", "continuous") and xi.freeze_rate == 0:
        raise InputError(f"freeze_rate = 0: mode {mode} never terminates")
    q = q_array(xi, n)
    exact_law = None
    if n <= enumeration_cap() and (n == 1 or q.row(2).q1 > 0):
        exact_law = shape_law(solve_moehle(q))

    if mode == "fm":
        draws = chains.replicate(lambda k, rng: chains.run_fm_many(n, q, k, rng), samples, seed, threads)
        counts = chains.empirical_eppf(draws).counts
    elif mode == "continuous":
        draws = chains.replicate(lambda k, rng: chains.simulate_continuous_many(xi, n, k, rng), samples, seed, threads)
        counts = chains.empirical_eppf(draws).counts
        fm_draws = chains.replicate(lambda k, rng: chains.run_fm_many(n, q, k, rng), samples, seed, threads, stream=1)
        fm_counts = chains.empirical_eppf(fm_draws).counts
        two = chains.two_sample_chi_square(counts, fm_counts)
        rep.checks.append(Check("continuous_vs_fm_two_sample", two.passed(alpha),
                                f"chi2={two.statistic:.4f} dof={two.dof} p={two.pvalue:.4g}", f"p>{alpha}", 0.0))
    elif mode == "sa":
        row = q.row(n)
        start = SetPartition.from_labels(range(n))

        def task(k, rng):
            visits = chains.run_sa_chain(start, row, k, rng, burn_in=100)
            return [p for p, c in visits.items() for _ in range(c)]

        draws = chains.replicate(task, samples, seed, threads)
        counts = chains.empirical_eppf(draws).counts
        if n <= min(enumeration_cap(chains.SA_EXACT_CAP), chains.SA_EXACT_CAP):
            m = chains.sa_transition_matrix(n, row)
            exact_law = chains.law_by_shape(m.states, chains.stationary_distribution(m))
        if exact_law is not None:
            freqs = {k: c / samples for k, c in counts.items()}
            rep.info["tv_distance"] = f"{chains.total_variation(freqs, exact_law):.6g}"
    else:
        raise InputError(f"unknown mode {mode!r}")

    if exact_law is not None and mode != "sa":
        gof = chains.chi_square_gof(counts, exact_law)
        rep.checks.append(Check("chi_square_vs_exact", gof.passed(alpha),
                                f"chi2={gof.statistic:.4f} dof={gof.dof} p={gof.pvalue:.4g}", f"p>{alpha}", 0.0))

    emp = chains.EmpiricalEppf(n, dict(counts), samples)
    header = ["shape", "count", "frequency", "p_hat", "stderr", "p_exact"]
    rows = []
    for lam in integer_partitions(n):
        exact_p = ""
        if exact_law is not None:
            exact_p = _render_rational(exact_law[lam] / shape_multiplicity(lam))
        rows.append([format_shape(lam), counts.get(lam, 0), repr(emp.frequency(lam)),
                     repr(emp.estimate(lam)), repr(emp.stderr(lam)), exact_p])
    return header, rows, rep


# --------------------------------------------------------------------------
# entry point


def _positive_n(n: int) -> int:
    if n < 1:
        raise InputError("--n must be >= 1")
    if n > enumeration_cap():
        raise InputError(f"--n {n} exceeds the cap {enumeration_cap()} (set XIFREEZE_MAX_N to raise it)")
    return n


def cmd_rates(args) -> int:
    xi = parse_model(args.model)
    n = _positive_n(args.n)
    _emit(write_table(["b", "collision_type", "value"], rates_rows(xi, n), args.format), args.out)
    return 0


def cmd_qrows(args) -> int:
    xi = parse_model(args.model)
    n = _positive_n(args.n)
    try:
        rows = [q_row(xi, b) for b in range(1, n + 1)]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(write_table(["b", "collision_type", "value"], qrow_rows(rows), args.format), args.out)
    return 0


def _model_table(xi: XiModel, n: int) -> EppfTable:
    try:
        return solve_moehle(q_array(xi, n))
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_eppf(args) -> int:
    xi = parse_model(args.model)
    table = _model_table(xi, _positive_n(args.n))
    _emit(write_table(["shape", "p", "p_decimal"], eppf_rows(table), args.format), args.out)
    return 0


def cmd_invert(args) -> int:
    if (args.eppf is None) == (args.model is None):
        raise InputError("pass exactly one of --eppf or --model")
    if args.eppf is not None:
        table = read_eppf_table(args.eppf)
    else:
        table = _model_table(parse_model(args.model), _positive_n(args.n))
    n = table.n if args.n is None else args.n
    if not 1 <= n <= table.n:
        raise InputError(f"--n {n} outside the table (n={table.n})")
    try:
        rows = [invert_p_to_q(table, b) for b in range(1, n + 1)]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(write_table(["b", "collision_type", "value"], qrow_rows(rows), args.format), args.out)
    return 0


def cmd_simulate(args) -> int:
    xi = parse_model(args.model)
    n = _positive_n(args.n)
    header, rows, rep = simulate(xi, n, args.mode, args.samples, args.seed, args.threads, args.alpha)
    _emit(write_table(header, rows, args.format), args.out)
    sys.stderr.write(rep.render("json" if args.format == "json" else "text"))
    return 0


def cmd_verify(args) -> int:
    xi = parse_model(args.model)
    n_max = _positive_n(args.n_max)
    rep = verify_report(xi, n_max, args.corrupt_q)
    _emit(rep.render("json" if args.format == "json" else "text"), args.out)
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xifreeze", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_required=True, n_required=True):
        p.add_argument("--model", required=model_required, help="model JSON file")
        p.add_argument("--n", type=int, required=n_required)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    common(sub.add_parser("rates", help="collision rates lambda and freeze rate"))
    common(sub.add_parser("qrows", help="decrement rows q(b:.) for b = 1..n"))
    common(sub.add_parser("eppf", help="exact EPPF from Moehle's recursion"))
    p = sub.add_parser("invert", help="recover q rows from an EPPF table")
    common(p, model_required=False, n_required=False)
    p.add_argument("--eppf", default=None, help="EPPF table written by the eppf command")
    p = sub.add_parser("simulate", help="Monte Carlo shape table")
    common(p)
    p.add_argument("--mode", choices=["fm", "sa", "continuous"], default="fm")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--alpha", type=float, default=1e-3, help="chi-square significance threshold")
    p = sub.add_parser("verify", help="run every exact invariant check")
    p.add_argument("--model", required=True)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv", help="json for a machine-readable report")
    p.add_argument("--corrupt-q", type=int, default=None, metavar="B",
                   help="debug: perturb row q(B:.) before solving (negative control)")
    return parser


COMMANDS = {
    "rates": cmd_rates,
    "qrows": cmd_qrows,
    "eppf": cmd_eppf,
    "invert": cmd_invert,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        sys.stderr.write(f"xifreeze: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
