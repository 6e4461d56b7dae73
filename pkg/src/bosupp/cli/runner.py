"""Sweep execution: one :class:`ResultRow` per grid point, emitted in grid order."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..analytics.closed_form import (
    avg_fidelity_suppressed,
    comm_psucc_closed,
    psucc_closed,
    qutrit_psucc_closed,
    teleportation_fidelity,
)
from ..analytics.haar import LogicalResponse
from ..analytics.teleport import simulate_teleportation_fidelity
from ..channels import apply, loss_channel, parse_args, parse_channel, qubit_damping
from ..codes import haar_coefficients, parse_code
from ..errors import BosuppError, ConfigError, HeraldStarvationError, TruncationError
from ..fock import FockSpace, State
from ..protocols import (
    ProtocolSpec,
    comm_protocol,
    noisy_bell_state,
    optimize_pqp,
    parity_shortcut,
    pqp_condrot,
    qutrit_protocol,
    suppress_analytic,
    suppress_cf,
)
from .config import ExperimentConfig, substitute

__all__ = ["ResultRow", "SeriesResult", "run_series", "evaluate_row", "write_series", "CSV_COLUMNS"]

CSV_COLUMNS = ("sweep_param", "sweep_value", "f_supp", "f_unsupp", "p_succ", "f_closed", "p_closed", "leakage")
P_TOL = 1e-9
F_CLOSED_MAX_ETA = 0.05


@dataclass(frozen=True)
class ResultRow:
    sweep_param: str
    sweep_value: float
    f_supp: float | None = None
    f_unsupp: float | None = None
    p_succ: float | None = None
    f_closed: float | None = None
    p_closed: float | None = None
    leakage: float | None = None
    error: str | None = None
    tolerance_failures: tuple = ()
    stderr: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SeriesResult:
    config: ExperimentConfig
    rows: tuple
    pqp_params: list | None = None

    @property
    def aborted(self):
        return [r for r in self.rows if r.error]

    @property
    def tolerance_failures(self):
        return [f for r in self.rows for f in r.tolerance_failures]


def _descriptors(cfg: ExperimentConfig, value):
    out, hit = {}, False
    for key in ("code", "cv", "dv", "protocol"):
        text, matched = substitute(getattr(cfg, key), cfg.sweep_param, value)
        out[key] = text
        hit = hit or matched
    if not hit:
        raise ConfigError(f"[{cfg.name}] sweep parameter {cfg.sweep_param!r} does not appear in any descriptor")
    return out


def _averaging_states(cfg: ExperimentConfig):
    """Logical coefficients and weights for the non-exact averaging modes."""
    mode, args = parse_args(cfg.averaging.replace("-", "_"))
    if mode == "pauli6":
        s = 1 / np.sqrt(2)
        c0 = np.array([1, 0, s, s, s, s], dtype=complex)
        c1 = np.array([0, 1, s, -s, 1j * s, -1j * s], dtype=complex)
        return c0, c1, np.full(6, 1 / 6)
    if mode == "monte_carlo":
        n = int(float(args.get("N", 2000)))
        c0, c1 = haar_coefficients(int(float(args.get("seed", cfg.seed))), n)
        return c0.astype(complex), c1, np.full(n, 1 / n)
    if mode == "fixed_state":
        c0 = complex(args.get("c0", "1"))
        c1 = complex(args.get("c1", "0").replace(" ", ""))
        norm = math.sqrt(abs(c0) ** 2 + abs(c1) ** 2)
        return np.array([c0 / norm]), np.array([c1 / norm]), np.array([1.0])
    return None


def _average(resp: LogicalResponse, states, normalized=True):
    if states is None:
        f = resp.mean_fidelity() if normalized else resp.mean_unnormalized_fidelity()
        return f, resp.mean_success(), None
    c0, c1, w = states
    f = resp.fidelity(c0, c1) if normalized else resp.numerator(c0, c1)
    p = resp.probability(c0, c1)
    se = None
    if len(w) > 1:
        se = {"f_stderr": float(np.std(f) / np.sqrt(len(w))), "p_stderr": float(np.std(p) / np.sqrt(len(w)))}
    return float(np.sum(w * f)), float(np.sum(w * p)), se


def _mean_input(code, states):
    if states is None:
        return code.identity
    c0, c1, w = states
    v = code.basis
    kets = np.outer(c0, v[:, 0]) + np.outer(c1, v[:, 1])
    return np.einsum("s,si,sj->ij", w, kets, kets.conj())


def _is_noiseless(dv):
    return dv is None or float(dv.params.get("p", dv.params.get("eta", 0.0))) == 0.0


class _Tracker:
    def __init__(self):
        self.leakage = 0.0

    def wrap(self, fn):
        def inner(op):
            res = fn(op)
            self.leakage = max(self.leakage, res.leakage)
            return res.unnormalized.op

        return inner


def _build_runner(proto, args, cv, dv, code, space, pqp_params):
    """Return ``(runner, closed_p)`` where ``closed_p(rho)`` may be ``None``."""
    params = cv.params if cv is not None else {"mu": 0.0, "G": 1.0}
    mu, G = params.get("mu", 0.0), params.get("G", 1.0)
    if proto == "cf":
        K = int(args.get("K", 1))
        gate_loss = float(args.get("gate_loss", 0.0))
        gate_damp = float(args.get("gate_damp", 0.0))
        gate_noise = None
        if gate_loss or gate_damp:
            gate_noise = (loss_channel(gate_loss, space), qubit_damping(gate_damp))
        spec = ProtocolSpec("cf_multi" if K > 1 else "cf_single", K=K, gate_noise=gate_noise)
        if args.get("shortcut", "0") in ("1", "true", "yes"):
            spec = parity_shortcut(code, spec)
        if args.get("engine", "joint") == "analytic":
            if not _is_noiseless(dv) or gate_noise:
                raise ConfigError("the analytic engine requires noiseless ancillas and gates")
            runner = lambda op: suppress_analytic(op, mu, G, K, space)
        else:
            runner = lambda op: suppress_cf(op, cv, dv, spec, space)
        closed = None
        if _is_noiseless(dv) and gate_noise is None:
            closed = lambda rho: psucc_closed(rho, mu, G, K)
        return runner, closed
    if proto == "pqp":
        L = int(args.get("L", 1))
        return (lambda op: pqp_condrot(op, cv, dv, L, pqp_params, space)), None
    if proto == "qutrit":
        j = int(args.get("herald", 0))
        p = float(dv.params["p"]) if dv is not None else 0.0
        return (lambda op: qutrit_protocol(op, cv, p, j, space)), (lambda rho: qutrit_psucc_closed(rho, mu, G, p, j, space))
    if proto == "comm":
        herald = args.get("herald", "00")
        p = float(dv.params["p"]) if dv is not None else 0.0
        return (lambda op: comm_protocol(op, cv, p, herald, space)), (lambda rho: comm_psucc_closed(rho, mu, G, p, herald))
    raise ConfigError(f"unknown protocol {proto!r}")


def _bare_runner(cv, space):
    from ..protocols.engine import HeraldedResult

    def run(op):
        out = op if cv is None else apply(cv, State(op), check_leakage=False).op
        s = State(out)
        return HeraldedResult(s, float(np.real(np.trace(out))), s)

    return run


def evaluate_row(cfg: ExperimentConfig, value: float, pqp_params=None) -> ResultRow:
    """Evaluate one sweep point; truncation and herald failures abort only this row."""
    desc = _descriptors(cfg, value)
    space = FockSpace(cfg.dim, cfg.guard)
    proto, args = parse_args(desc["protocol"])
    dv = parse_channel(desc["dv"])
    base = dict(sweep_param=cfg.sweep_param, sweep_value=float(value))
    states = _averaging_states(cfg)
    try:
        if proto == "teleport":
            p = float(dv.params["p"]) if dv is not None else 0.0
            f = simulate_teleportation_fidelity(noisy_bell_state(p))
            closed = teleportation_fidelity(p)
            fails = () if abs(f - closed) <= 1e-12 else (f"teleport f={f!r} closed={closed!r}",)
            return ResultRow(**base, f_supp=f, p_succ=1.0, f_closed=closed, p_closed=1.0, leakage=0.0, tolerance_failures=fails)
        code = parse_code(desc["code"], space)
        cv = parse_channel(desc["cv"], space)
        tracker = _Tracker()
        bare = LogicalResponse.from_runner(code, tracker.wrap(_bare_runner(cv, space)))
        f_unsupp, _, _ = _average(bare, states, normalized=False)
        if cv is not None:
            # bare-channel leakage: trace lost past the cutoff plus guard-band weight
            out = apply(cv, State(code.identity), check_leakage=False).op
            lost = 1 - float(np.real(np.trace(out))) + float(np.real(np.trace(out[space.n_valid + 1 :, space.n_valid + 1 :])))
            tracker.leakage = max(tracker.leakage, lost)
            if lost > 1e-6:
                raise TruncationError(f"bare channel leakage {lost:.2e}", leakage=lost)
        if proto == "none":
            return ResultRow(
                **base, f_supp=f_unsupp, f_unsupp=f_unsupp, p_succ=1.0, p_closed=1.0, leakage=tracker.leakage
            )
        if proto == "bypass":
            gates = int(args.get("gates", 8))
            loss = float(args.get("loss", 0.01))
            # ideal bypass removes the channel; only its noisy gates act, as accumulated loss
            total = loss_channel(1 - (1 - loss) ** gates, space)
            resp = LogicalResponse.from_runner(code, tracker.wrap(_bare_runner(total, space)))
            f, _, se = _average(resp, states, normalized=False)
            return ResultRow(
                **base, f_supp=f, f_unsupp=f_unsupp, p_succ=1.0, p_closed=1.0, leakage=tracker.leakage, stderr=se or {}
            )
        runner, closed_p = _build_runner(proto, args, cv, dv, code, space, pqp_params)
        resp = LogicalResponse.from_runner(code, tracker.wrap(runner))
        f, p, se = _average(resp, states)
        fails = []
        p_closed = None
        if closed_p is not None:
            p_closed = float(closed_p(_mean_input(code, states)))
            if abs(p - p_closed) > P_TOL:
                fails.append(f"{cfg.name} {cfg.sweep_param}={value!r}: p_succ {p!r} vs closed {p_closed!r}")
        f_closed = None
        eta = cv.params.get("eta", cv.params.get("mu")) if cv is not None else 0.0
        nbar = cv.params.get("nbar", 0.0) if cv is not None else 0.0
        fsupp_ok = (
            proto == "cf"
            and int(args.get("K", 1)) == 1
            and _is_noiseless(dv)
            and not float(args.get("gate_loss", 0.0))
            and not float(args.get("gate_damp", 0.0))
            and states is None
            and (cv is None or cv.name in ("thermal", "loss"))
            and eta <= F_CLOSED_MAX_ETA
        )
        if fsupp_ok:
            f_closed = avg_fidelity_suppressed(code.moments, eta, nbar)
            if abs(f - f_closed) > 0.5 * (1 - f_closed) + 1e-12:
                fails.append(f"{cfg.name} {cfg.sweep_param}={value!r}: f_supp {f!r} vs closed {f_closed!r}")
        return ResultRow(
            **base,
            f_supp=f,
            f_unsupp=f_unsupp,
            p_succ=p,
            f_closed=f_closed,
            p_closed=p_closed,
            leakage=tracker.leakage,
            tolerance_failures=tuple(fails),
            stderr=se or {},
        )
    except (TruncationError, HeraldStarvationError) as exc:
        return ResultRow(**base, error=f"{type(exc).__name__}: {exc}")


def _pqp_params(cfg: ExperimentConfig):
    proto, args = parse_args(cfg.protocol)
    if proto != "pqp":
        return None
    L = int(args.get("L", 1))
    if L == 0:
        return []
    value = float(args.get("optimize_at", cfg.sweep_grid[0]))
    space = FockSpace(cfg.dim, cfg.guard)
    dv_text, _ = substitute(cfg.dv, cfg.sweep_param, value)
    cv_text, _ = substitute(cfg.cv, cfg.sweep_param, value)
    code = parse_code(cfg.code, space)
    fit = optimize_pqp(
        code,
        parse_channel(cv_text, space),
        L,
        seed=cfg.seed,
        dv_channel=parse_channel(dv_text),
        restarts=int(args.get("restarts", 5)),
        maxiter=int(args.get("maxiter", 300)),
    )
    return fit.params.tolist()


def run_series(cfg: ExperimentConfig, jobs: int = 1) -> SeriesResult:
    """Evaluate every grid point of ``cfg``; rows come back in grid order."""
    for value in cfg.sweep_grid[:1]:
        _descriptors(cfg, value)  # surface config errors before any work
    pqp = _pqp_params(cfg)
    if jobs > 1 and len(cfg.sweep_grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(evaluate_row, [cfg] * len(cfg.sweep_grid), cfg.sweep_grid, [pqp] * len(cfg.sweep_grid)))
    else:
        rows = [evaluate_row(cfg, v, pqp) for v in cfg.sweep_grid]
    return SeriesResult(cfg, tuple(rows), pqp)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_series(result: SeriesResult, out_dir, extra_meta=None):
    """Write the CSV and a JSON sidecar with descriptors and diagnostics."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    csv_path = out_dir / (cfg.output or f"{cfg.name}.csv")
    csv_path.write_text(rows_to_csv(result.rows))
    meta = {
        "library": "bosupp",
        "version": __version__,
        "series": cfg.name,
        "code": cfg.code,
        "cv": cfg.cv,
        "dv": cfg.dv,
        "protocol": cfg.protocol,
        "averaging": cfg.averaging,
        "sweep_param": cfg.sweep_param,
        "sweep_grid": list(cfg.sweep_grid),
        "dim": cfg.dim,
        "guard": cfg.guard,
        "seed": cfg.seed,
        "notes": cfg.notes,
        "pqp_params": result.pqp_params,
        "row_errors": {repr(r.sweep_value): r.error for r in result.rows if r.error},
        "tolerance_failures": result.tolerance_failures,
        "mc_stderr": {repr(r.sweep_value): r.stderr for r in result.rows if r.stderr},
    }
    if extra_meta:
        meta.update(extra_meta)
    meta_path = csv_path.with_suffix(".meta.json")
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return csv_path, meta_path
