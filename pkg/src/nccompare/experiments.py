"""Experiment drivers for the throughput/delay figures and the worked fixtures."""

from __future__ import annotations

import csv
import functools
import json
import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .distribution import Distribution, average, empirical_pdf, pdf_mse
from .feedback import ConflictMatrix, conflict_matrix, derive_demands, generate_sfm
from .fixtures import (FIVE_RECEIVER_CONFLICTS, FIVE_RECEIVER_SFM, SIX_PACKET_CONFLICTS, THREE_RECEIVER_SCHEDULE,
                       THREE_RECEIVER_SFM)
from .formats import load_schedule, load_sfm
from .idnc import idnc_delay_report, rlnc_delay_report, v_idnc_pdf
from .rlnc import expected_u_rlnc, shifted_h_pdf, v_rlnc_pdf
from .sim import (run_fully_online_idnc, run_rlnc, run_semi_online_idnc, run_trials, sample_v_idnc,
                  sample_v_rlnc, trial_rng)
from .solver import (chromatic_oracle, geller_bound, greedy_collection, marginal_benefits,
                     maximal_encoding_sets, minimal_collections, select_and_order, solve,
                     u_idnc, u_lower_bound, u_upper_bound)

log = logging.getLogger(__name__)

EXPERIMENTS = ("fig1", "fig2", "fig3", "fig4", "fig5",
               "example1", "example3", "example4", "appendixC", "custom")

DEFAULT_TRIALS = 10_000
FIG1_TRIALS = 1_000
DEFAULT_N_RANGES = {"fig2": (1, 45, 1), "fig5": (1, 45, 2)}
FIG4_NS = (5, 15, 20, 30)


@dataclass
class ExperimentConfig:
    experiment: str
    kt: int = 15
    n: int = 10
    n_range: tuple[int, int, int] | None = None
    pe: float = 0.2
    trials: int | None = None
    seed: int = 0
    solver: str = "exact"
    out: str = "results"
    format: str = "csv"
    workers: int = 1
    k: int = 20                 # fig1 packet count
    m0_step: int = 1            # fig1 grid spacing
    sfm: str | None = None      # custom: demand matrix file
    schedule: str | None = None  # custom: erasure pattern file

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n_range is not None:
            a, b, step = self.n_range
            if step < 1 or a < 1 or b < a:
                raise ValueError(f"bad N range {self.n_range}")
        if self.solver not in ("exact", "greedy"):
            raise ValueError("solver must be exact or greedy")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")

    @property
    def n_trials(self) -> int:
        if self.trials is not None:
            return self.trials
        return FIG1_TRIALS if self.experiment == "fig1" else DEFAULT_TRIALS

    def n_values(self) -> list[int]:
        a, b, step = self.n_range or DEFAULT_N_RANGES.get(self.experiment, (self.n, self.n, 1))
        return list(range(a, b + 1, step))


@dataclass
class Report:
    experiment: str
    columns: list[str]
    rows: list[list]
    extra: dict = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks)

    def failures(self) -> list[dict]:
        return [c for c in self.checks if not c["ok"]]


def parse_n_range(text: str) -> tuple[int, int, int]:
    """'a:b:step' (b inclusive); 'a:b' means step 1."""
    parts = [int(x) for x in text.split(":")]
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3:
        raise ValueError(f"N range must look like a:b:step, got {text!r}")
    return parts[0], parts[1], parts[2]


# -- per-trial workers (module level so they pickle) ----------------------------------------


def _random_conflicts(k: int, m0: int, rng: np.random.Generator) -> ConflictMatrix:
    total = k * (k - 1) // 2
    flags = np.ones(total, dtype=np.uint8)
    flags[rng.permutation(total)[:m0]] = 0
    c = np.zeros((k, k), dtype=np.uint8)
    c[np.triu_indices(k, 1)] = flags
    return ConflictMatrix(c)


def _fig1_trial(i: int, rng: np.random.Generator, k: int, m0: int) -> int:
    return u_idnc(_random_conflicts(k, m0, rng))


def sfm_metrics(i: int, rng: np.random.Generator, kt: int, n: int, pe: float, solver: str):
    """(U_IDNC, U_RLNC, E[L_IDNC], E[L_RLNC]) for one random demand matrix; None if nothing was lost."""
    a = generate_sfm(kt, n, pe, rng)
    if a.is_empty:
        return None
    d = derive_demands(a)
    sol = solve(conflict_matrix(a), d, solver)
    li = idnc_delay_report(d, sol.collection, pe).expected_delay
    lr = rlnc_delay_report(d, pe).expected_delay
    return sol.u_idnc, d.w_max, li, lr


def _fig4_trial(i: int, rng: np.random.Generator, kt: int, n: int, pe: float, solver: str):
    a = generate_sfm(kt, n, pe, rng)
    if a.is_empty:
        return None
    d = derive_demands(a)
    sol = solve(conflict_matrix(a), d, solver)
    h_i = shifted_h_pdf(sol.u_idnc, v_idnc_pdf(a, sol.collection, pe))
    h_r = shifted_h_pdf(d.w_max, v_rlnc_pdf(d, pe))
    return h_i.to_dict(), h_r.to_dict()


def sweep(cfg: ExperimentConfig, fn, n: int) -> list:
    """Run ``cfg.n_trials`` random demand matrices at receiver count ``n``; stream keyed by n."""
    job = functools.partial(fn, kt=cfg.kt, n=n, pe=cfg.pe, solver=cfg.solver)
    return run_trials(job, cfg.n_trials, cfg.seed, workers=cfg.workers, stream=(n,))


# -- experiments -----------------------------------------------------------------------------


def _fig1(cfg: ExperimentConfig) -> Report:
    k = cfg.k
    top = k * (k - 1) // 2
    grid = list(range(0, top + 1, cfg.m0_step))
    if grid[-1] != top:
        grid.append(top)
    rows = []
    for m0 in grid:
        job = functools.partial(_fig1_trial, k=k, m0=m0)
        us = run_trials(job, cfg.n_trials, cfg.seed, workers=cfg.workers, stream=(m0,))
        rows.append([m0, u_upper_bound(k, m0), u_lower_bound(k, m0), geller_bound(k, m0), float(np.mean(us))])
        log.info("fig1 m0=%d mean U=%.3f", m0, rows[-1][-1])
    return Report("fig1", ["M0", "upper", "lower", "geller", "mean_U_IDNC"], rows, {"K": k})


def _fig2(cfg: ExperimentConfig) -> Report:
    rows = []
    for n in cfg.n_values():
        res = [r for r in sweep(cfg, sfm_metrics, n) if r is not None]
        # an all-received block needs zero coded slots in either scheme
        empty = cfg.n_trials - len(res)
        ui = (sum(r[0] for r in res)) / cfg.n_trials
        ur = (sum(r[1] for r in res)) / cfg.n_trials
        rows.append([n, ui, ur, expected_u_rlnc(cfg.kt, cfg.pe, n), empty])
        log.info("fig2 N=%d U_IDNC=%.3f U_RLNC=%.3f", n, ui, ur)
    return Report("fig2", ["N", "mean_U_IDNC", "mean_U_RLNC", "analytic_U_RLNC", "empty_blocks"], rows)


def _fig3(cfg: ExperimentConfig) -> Report:
    rng = trial_rng(cfg.seed, 0)
    a = generate_sfm(cfg.kt, cfg.n, cfg.pe, rng)
    while a.is_empty:
        a = generate_sfm(cfg.kt, cfg.n, cfg.pe, rng)
    d = derive_demands(a)
    sol = solve(conflict_matrix(a), d, cfg.solver)
    sim_rng = trial_rng(cfg.seed, 1)
    ai, ar = v_idnc_pdf(a, sol.collection, cfg.pe), v_rlnc_pdf(d, cfg.pe)
    ei = empirical_pdf(sample_v_idnc(a, sol.collection, cfg.pe, sim_rng, cfg.n_trials))
    er = empirical_pdf(sample_v_rlnc(a, cfg.pe, sim_rng, cfg.n_trials))
    hi = max(x.support_max for x in (ai, ar, ei, er))
    rows = [[v, ai.prob(v), ei.prob(v), ar.prob(v), er.prob(v)] for v in range(hi + 1)]
    extra = {"sfm": a.entries.tolist(), "packet_ids": list(a.packet_ids),
             "U_IDNC": sol.u_idnc, "U_RLNC": d.w_max,
             "collection": sol.collection.to_lists(a.packet_ids),
             "mse_idnc": pdf_mse(ai, ei), "mse_rlnc": pdf_mse(ar, er)}
    return Report("fig3", ["V", "idnc_analytic", "idnc_empirical", "rlnc_analytic", "rlnc_empirical"], rows, extra)


def _fig4(cfg: ExperimentConfig) -> Report:
    ns = cfg.n_values() if cfg.n_range else list(FIG4_NS)
    rows, extra = [], {}
    for n in ns:
        res = [r for r in sweep(cfg, _fig4_trial, n) if r is not None]
        hi = average([Distribution.from_dict(r[0]) for r in res])
        hr = average([Distribution.from_dict(r[1]) for r in res])
        top = max(hi.support_max, hr.support_max)
        for h in range(top + 1):
            rows.append([n, h, hi.prob(h), hr.prob(h)])
        extra[str(n)] = {"mean_H_IDNC": hi.mean(), "mean_H_RLNC": hr.mean(),
                         "mode_H_IDNC": int(np.argmax(hi.dense(top))), "mode_H_RLNC": int(np.argmax(hr.dense(top)))}
        log.info("fig4 N=%d done", n)
    return Report("fig4", ["N", "H", "p_idnc", "p_rlnc"], rows, extra)


def _fig5(cfg: ExperimentConfig) -> Report:
    rows = []
    for n in cfg.n_values():
        res = [r for r in sweep(cfg, sfm_metrics, n) if r is not None]
        li = float(np.mean([r[2] for r in res]))
        lr = float(np.mean([r[3] for r in res]))
        rows.append([n, li, lr])
        log.info("fig5 N=%d E[L] IDNC=%.3f RLNC=%.3f", n, li, lr)
    crossing = next((r[0] for r in rows if r[2] <= r[1]), None)
    return Report("fig5", ["N", "E_L_idnc", "E_L_rlnc"], rows, {"first_N_rlnc_not_worse": crossing})


def _check(name: str, expected, observed) -> dict:
    return {"check": name, "expected": expected, "observed": observed, "ok": expected == observed}


def _fixture_report(name: str, checks: list[dict]) -> Report:
    rows = [[c["check"], json.dumps(c["expected"]), json.dumps(c["observed"]), c["ok"]] for c in checks]
    return Report(name, ["check", "expected", "observed", "ok"], rows, checks=checks)


def _ids(sets) -> list[list[int]]:
    return [[p + 1 for p in s.packets] for s in sets]


def _example1(cfg: ExperimentConfig) -> Report:
    c = SIX_PACKET_CONFLICTS
    sets = maximal_encoding_sets(c)
    cols = minimal_collections(sets, c.n_packets)
    greedy = greedy_collection(sets, c.n_packets)
    return _fixture_report("example1", [
        _check("maximal_sets", [[1, 2, 3], [1, 4], [2, 5], [3, 6]], _ids(sets)),
        _check("minimal_collections", [[[1, 4], [2, 5], [3, 6]]], [_ids(col.sets) for col in cols]),
        _check("U_IDNC", 3, len(cols[0])),
        _check("chromatic_number", 3, chromatic_oracle(c)),
        _check("greedy_size", 4, len(greedy)),
        _check("greedy_first_set", [1, 2, 3], _ids(greedy.sets[:1])[0]),
    ])


def _example3(cfg: ExperimentConfig) -> Report:
    a = FIVE_RECEIVER_SFM
    c = conflict_matrix(a)
    d = derive_demands(a)
    sets = maximal_encoding_sets(c)
    cols = minimal_collections(sets, c.n_packets)
    chosen = select_and_order(cols, d)
    return _fixture_report("example3", [
        _check("conflict_matrix_matches_printed", True, c == FIVE_RECEIVER_CONFLICTS),
        _check("maximal_sets", [[1, 3], [2, 3, 5], [3, 4], [4, 6], [5, 6]], _ids(sets)),
        _check("minimal_collections", [[[1, 3], [2, 3, 5], [4, 6]]], [_ids(col.sets) for col in cols]),
        _check("transmission_order", [[1, 3], [4, 6], [2, 3, 5]], _ids(chosen.sets)),
        _check("benefits", [5, 5, 3], marginal_benefits(chosen, d.t_sizes)),
    ])


def _frac(x: float) -> str:
    return str(Fraction(x).limit_denominator(1000))


def _example4(cfg: ExperimentConfig) -> Report:
    a = FIVE_RECEIVER_SFM
    d = derive_demands(a)
    sol = solve(conflict_matrix(a), d, cfg.solver)
    ri = idnc_delay_report(d, sol.collection, 0.0)
    rr = rlnc_delay_report(d, 0.0)
    ti = run_semi_online_idnc(a, 0.0, trial_rng(cfg.seed, 0))
    tr = run_rlnc(a, 0.0, trial_rng(cfg.seed, 0))
    rep = _fixture_report("example4", [
        _check("T_total", 13, d.t_total),
        _check("E[D_u] IDNC", [5.0, 5.0, 3.0], list(ri.expected_decoded)),
        _check("E[D_u] RLNC", [0.0, 4.0, 9.0], list(rr.expected_decoded)),
        _check("L_IDNC", "24/13", _frac(ri.expected_delay)),
        _check("L_RLNC", "35/13", _frac(rr.expected_delay)),
        _check("L_IDNC_trace", "24/13", _frac(ti.average_delay())),
        _check("L_RLNC_trace", "35/13", _frac(tr.average_delay())),
    ])
    rep.extra = {"L_IDNC": ri.expected_delay, "L_RLNC": rr.expected_delay}
    return rep


def _appendix_c(cfg: ExperimentConfig) -> Report:
    semi = run_semi_online_idnc(THREE_RECEIVER_SFM, THREE_RECEIVER_SCHEDULE)
    online = run_fully_online_idnc(THREE_RECEIVER_SFM, THREE_RECEIVER_SCHEDULE)
    rep = _fixture_report("appendixC", [
        _check("semi_online", 5, semi.total_slots),
        _check("semi_online_rounds", [3, 2], semi.round_sizes),
        _check("semi_online_packets", [[1], [2], [3], [1], [3]], [list(s.packets) for s in semi.slots]),
        _check("fully_online", 4, online.total_slots),
        _check("fully_online_packets", [[1], [1], [2], [3]], [list(s.packets) for s in online.slots]),
    ])
    rep.extra = {"semi_online": semi.to_dict(), "fully_online": online.to_dict()}
    return rep


def _custom(cfg: ExperimentConfig) -> Report:
    if not cfg.sfm:
        raise ValueError("the custom experiment needs --sfm FILE")
    a = load_sfm(cfg.sfm)
    if a.is_empty:
        raise ValueError("the demand matrix wants nothing")
    d = derive_demands(a)
    c = conflict_matrix(a)
    sol = solve(c, d, cfg.solver)
    vi, vr = v_idnc_pdf(a, sol.collection, cfg.pe), v_rlnc_pdf(d, cfg.pe)
    li, lr = idnc_delay_report(d, sol.collection, cfg.pe), rlnc_delay_report(d, cfg.pe)
    rows = [
        ["K", a.n_packets], ["N", a.n_receivers], ["M0", c.m0], ["T_total", d.t_total],
        ["U_IDNC", sol.u_idnc], ["U_RLNC", d.w_max],
        ["U_lower", u_lower_bound(a.n_packets, c.m0)], ["U_upper", u_upper_bound(a.n_packets, c.m0)],
        ["E_L_idnc", li.expected_delay], ["E_L_rlnc", lr.expected_delay],
        ["mean_V_idnc", vi.mean()], ["mean_V_rlnc", vr.mean()],
    ]
    extra = {"packet_ids": list(a.packet_ids), "collection": sol.collection.to_lists(a.packet_ids),
             "suboptimal": sol.suboptimal, "v_idnc": vi.to_dict(), "v_rlnc": vr.to_dict(),
             "delay_idnc": li.to_dict(), "delay_rlnc": lr.to_dict()}
    if cfg.schedule:
        pattern = load_schedule(cfg.schedule)
        traces = {"semi_online": run_semi_online_idnc(a, pattern, solver=cfg.solver),
                  "fully_online": run_fully_online_idnc(a, pattern, solver=cfg.solver),
                  "rlnc": run_rlnc(a, pattern)}
        for name, t in traces.items():
            rows.append([f"slots_{name}", t.total_slots])
        extra["traces"] = {name: t.to_dict() for name, t in traces.items()}
    return Report("custom", ["metric", "value"], rows, extra)


_RUNNERS = {"fig1": _fig1, "fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
            "example1": _example1, "example3": _example3, "example4": _example4,
            "appendixC": _appendix_c, "custom": _custom}


def run_experiment(cfg: ExperimentConfig) -> Report:
    return _RUNNERS[cfg.experiment](cfg)


def ensure_writable(out: str | Path) -> Path:
    """Create ``out`` and fail early if files cannot be written there."""
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    probe = d / ".nccompare-write-check"
    probe.write_text("")
    probe.unlink()
    return d


def report_payload(report: Report, cfg: ExperimentConfig) -> dict:
    return {
        "experiment": report.experiment,
        "version": __version__,
        "seed": cfg.seed,
        "config": asdict(cfg) | {"n_range": list(cfg.n_range) if cfg.n_range else None},
        "columns": report.columns,
        "rows": report.rows,
        "extra": report.extra,
        "checks": report.checks,
        "ok": report.ok,
    }


def emit_report(report: Report, cfg: ExperimentConfig, fmt: str | None = None) -> Path:
    """Write ``<out>/<experiment>.csv`` or ``.json``; returns the path written."""
    if not report.rows:
        raise ValueError("empty report")
    fmt = fmt or cfg.format
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{report.experiment}.{fmt}"
    if fmt == "json":
        path.write_text(json.dumps(report_payload(report, cfg), indent=2, sort_keys=True) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            fh.write(f"# {report.experiment} version={__version__} seed={cfg.seed} "
                     f"config={json.dumps(report_payload(report, cfg)['config'], sort_keys=True)}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(report.columns)
            for row in report.rows:
                w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path
