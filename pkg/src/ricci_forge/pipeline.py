"""End-to-end run from an invariant list ``nu`` to certified building blocks.

Stages run in order and the first failure stops the run:

1. ``matrix``: ``B_{nu, ell}``.
2. ``normal_form``: witness ``T`` and the check against ``D(1, ..., 1, n_1, ..., n_k)``.
3. ``realization``: planes ``W_i`` and their intersection matrix, compared with ``B``.
4. ``graph``: zero-intersection graph, component shapes, hypotheses.
5. ``schedule``: clique-tree separation schedule.
6. ``unlink``: one certified unlinking deformation per moved plane.
7. ``surgery``: transition, isotopy ramp and collapse profiles.
8. ``eqf``: transported extended quadratic form and boundary classification.

Every artifact is deterministic JSON/CSV (plus PNGs when plotting is on);
wall-clock timings go to ``timing.txt`` only.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import linking, skewalg
from .constructions import (
    chi_ramp,
    collapse_profiles,
    find_unlink_eps,
    isotopy_params,
    tot_geod_profiles,
)
from .curvature import INF, ATensorBounds, q_from_json, q_to_json
from .errors import DomainError, DomainMismatch
from .io import dumps, plain, write_json, write_text_atomic

REPORT_SCHEMA = "ricci-forge/pipeline-report"
REPORT_VERSION = 1


@dataclass
class PipelineConfig:
    """Inputs of a run.

    ``h_nu`` is the stretch factor of the unlinking profile ``h_eps``; values
    from about 1.032 upward make that profile's last junction concave, so the
    default stays below.
    """

    nu: tuple[int, ...]
    m: int = 1
    ell: int | None = None
    eps_link: str = "1/1000"
    h_nu: float = 1.02
    unlink_halvings: int = 10
    collapse_lambda3: float = 1.0
    collapse_mu: float = 0.1
    collapse_eps: float = 0.05
    tot_r: float = 1.0
    tot_t0: float = 1.0
    tot_mu: float = 1e-3
    tot_A: tuple[float, float, float] = (0.2, 0.2, 0.1)
    tot_q: float = INF
    iso_c: float = 1.0
    iso_C: float = 5.0
    iso_n: int = 5
    iso_lambda: float = 2.0
    coeff_group: tuple[int, ...] | None = None
    p_image: tuple[int, ...] = ()
    mu_w: tuple | None = None
    grid_step: float = 1e-3
    out_dir: str | None = None
    threads: int = 1
    plots: bool = True

    def __post_init__(self):
        self.nu = tuple(int(n) for n in self.nu)
        if not self.nu or any(n <= 0 for n in self.nu):
            raise ValueError(f"nu must be a nonempty sequence of positive integers, got {self.nu}")
        if self.m < 1:
            raise ValueError("m must be positive")
        Fraction(self.eps_link)

    @property
    def resolved_ell(self) -> int:
        return self.ell if self.ell is not None else skewalg.minimal_ell(self.nu)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tot_q"] = q_to_json(self.tot_q)
        d["ell"] = self.ell
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        if "tot_q" in d:
            d["tot_q"] = q_from_json(d["tot_q"])
        for key in ("nu", "tot_A", "coeff_group", "p_image", "mu_w"):
            if d.get(key) is not None:
                d[key] = tuple(tuple(x) if isinstance(x, list) else x for x in d[key])
        return cls(**d)

    def result_fields(self) -> dict:
        """Everything that affects results; the output path and thread count do not."""
        d = self.to_dict()
        for key in ("out_dir", "threads", "plots"):
            d.pop(key)
        return d

    def digest(self) -> str:
        d = self.result_fields()
        return hashlib.sha256(json.dumps(plain(d), sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class StageResult:
    name: str
    passed: bool
    summary: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    error: dict | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "summary": self.summary,
            "artifacts": list(self.artifacts),
            "error": self.error,
        }


@dataclass
class PipelineReport:
    config: PipelineConfig
    stages: list[StageResult]

    @property
    def passed(self) -> bool:
        return bool(self.stages) and all(s.passed for s in self.stages) and len(self.stages) == len(STAGES)

    @property
    def first_failure(self) -> str | None:
        return next((s.name for s in self.stages if not s.passed), None)

    def stage(self, name: str) -> StageResult:
        return next(s for s in self.stages if s.name == name)

    def to_dict(self) -> dict:
        ran = {s.name for s in self.stages}
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_VERSION,
            "config": self.config.result_fields(),
            "config_digest": self.config.digest(),
            "passed": self.passed,
            "first_failure": self.first_failure,
            "stages": [s.to_dict() for s in self.stages],
            "skipped": [name for name, _ in STAGES if name not in ran],
        }

    def timing_text(self) -> str:
        lines = [f"{s.name}\t{s.seconds:.3f}" for s in self.stages]
        lines.append(f"total\t{sum(s.seconds for s in self.stages):.3f}")
        return "\n".join(lines) + "\n"


class _Run:
    """Shared state between stages plus artifact writing."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir) if cfg.out_dir else None
        self.ctx: dict[str, Any] = {}
        self.artifacts: list[str] = []

    def emit(self, name: str, obj: Any) -> None:
        if self.out is not None:
            write_json(self.out / name, obj)
        self.artifacts.append(name)

    def emit_text(self, name: str, text: str) -> None:
        if self.out is not None:
            write_text_atomic(self.out / name, text)
        self.artifacts.append(name)

    def emit_scan(self, stem: str, spec, report) -> None:
        """Spec JSON, report JSON (no samples), CSV of samples and optional PNGs."""
        self.emit(f"{stem}_spec.json", spec)
        self.emit(f"{stem}_report.json", report.to_dict(include_samples=False))
        self.emit_text(f"{stem}_scan.csv", report.to_csv())
        if self.cfg.plots and self.out is not None:
            from . import plotting

            plotting.render_scan(self.out / f"{stem}_scan.csv", title=stem)
            plotting.render_profiles(spec, self.out / f"{stem}_profiles.png", title=stem)
            self.artifacts += [f"{stem}_scan.png", f"{stem}_profiles.png"]


# ---------------------------------------------------------------------------
# stages


def _stage_matrix(run: _Run) -> dict:
    cfg = run.cfg
    ell = cfg.resolved_ell
    B = skewalg.build_B(cfg.nu, ell)
    run.ctx.update(B=B, ell=ell)
    run.emit("B.json", B.to_list())
    return {"ell": ell, "size": B.n, "pfaffian_abs": abs(skewalg.pfaffian(B)) if B.n <= 16 else None}


def _stage_normal_form(run: _Run) -> dict:
    cfg, B, ell = run.cfg, run.ctx["B"], run.ctx["ell"]
    T, form = skewalg.skew_normal_form(B)
    if T.apply(B) != form.matrix():
        raise DomainMismatch("witness does not reproduce the normal form")
    D = skewalg.expected_B_form(cfg.nu, ell)
    TE, formE = skewalg.skew_normal_form(D)
    if formE != form:
        raise DomainMismatch("B is not congruent to D(1, ..., 1, n_1, ..., n_k)",
                             blocks=form.blocks, expected=formE.blocks)
    # T_D carries B to the uncanonicalized D
    TD = skewalg.UnimodularWitness(skewalg.matmul(TE.inverse().T, T.T))
    if TD.apply(B) != D:
        raise DomainMismatch("composite witness does not carry B to D")
    run.ctx.update(T_D=TD, D=D)
    run.emit("normal_form.json", {
        "T": T.to_list(),
        "form": form.to_dict(),
        "T_D": TD.to_list(),
        "D_blocks": [1] * (len(cfg.nu) * (ell - 1)) + list(cfg.nu),
    })
    return {"blocks": list(form.blocks), "zero_count": form.zero_count, "congruent_to_D": True}


def _stage_realization(run: _Run) -> dict:
    cfg, B, ell = run.cfg, run.ctx["B"], run.ctx["ell"]
    fam = linking.build_subspaces(cfg.nu, ell, cfg.m, cfg.eps_link)
    table = linking.intersection_matrix(fam)
    if table.matrix != skewalg.build_B(cfg.nu, ell):
        raise DomainMismatch("intersection matrix differs from B", eps=cfg.eps_link)
    run.ctx.update(family=fam, table=table)
    run.emit("family.json", fam)
    run.emit("intersection.json", table)
    return {"planes": len(fam), "matches_B": True, "max_intersection_dim": max(
        (d for i, r in enumerate(table.dims) for j, d in enumerate(r) if i != j), default=0)}


def _stage_graph(run: _Run) -> dict:
    cfg, fam, table = run.cfg, run.ctx["family"], run.ctx["table"]
    G = linking.build_graph(table.matrix)
    shapes = linking.component_shapes(G, cfg.nu, run.ctx["ell"])
    verdict = linking.check_hypotheses(fam, G)
    run.ctx.update(graph=G, verdict=verdict)
    run.emit("graph.json", {"graph": G, "shapes": shapes, "hypotheses": verdict})
    run.emit_text("graph.dot", G.to_dot())
    if not verdict.passed:
        raise DomainMismatch("graph hypotheses fail", **{k: str(v) for k, v in verdict.to_dict().items()})
    return {"edges": len(G.edges), **shapes.to_dict()["counts"], "singletons": len(shapes.singletons),
            "max_clique_rank": max(verdict.clique_ranks.values(), default=0)}


def _stage_schedule(run: _Run) -> dict:
    fam, G = run.ctx["family"], run.ctx["graph"]
    sched = linking.separation_schedule(fam, G)
    if not linking.schedule_is_sound(sched, G, fam):
        raise DomainMismatch("separation schedule is not sound")
    run.ctx["schedule"] = sched
    run.emit("schedule.json", sched)
    return {"steps": len(sched.steps), "moved": len(sched.moved_vertices())}


def _stage_unlink(run: _Run) -> dict:
    cfg, sched = run.cfg, run.ctx["schedule"]
    cache: dict[tuple, tuple] = {}
    rows = []
    worst = None
    for step in sched.steps:
        for v, eps, delta in step.moved:
            key = (eps, delta)
            if key not in cache:
                e, _, rep = find_unlink_eps(cfg.m, float(delta), cfg.h_nu, eps_max=float(eps),
                                            halvings=cfg.unlink_halvings)
                cache[key] = (e, rep)
            e, rep = cache[key]
            worst = rep.min_margin if worst is None else min(worst, rep.min_margin)
            rows.append({"vertex": v, "clique": list(step.clique), "scheduled_eps": eps,
                         "delta": delta, "certified_eps": e, "report": rep})
    run.emit("unlink.json", {"h_nu": cfg.h_nu, "moves": rows})
    return {"certified_moves": len(rows), "min_margin": worst}


def _stage_surgery(run: _Run) -> dict:
    cfg = run.cfg
    dim = 2 * cfg.m
    tg = tot_geod_profiles(cfg.tot_r, cfg.tot_t0, cfg.tot_mu, A=ATensorBounds(*cfg.tot_A), q=cfg.tot_q,
                           a=dim, b=dim, threads=cfg.threads)
    run.emit_scan("tot_geod", tg.spec, tg.report)
    run.emit("tot_geod_transition.json", {"transition": tg.transition(), "boundary": tg.boundary})
    iso = isotopy_params(cfg.iso_c, cfg.iso_C, cfg.iso_n, cfg.iso_lambda)
    ramp = chi_ramp(iso.a)
    run.emit("isotopy.json", {"params": iso, "holds": iso.holds(), "chi_ramp": ramp})
    col = collapse_profiles(dim, dim, cfg.collapse_lambda3, cfg.collapse_mu, cfg.collapse_eps,
                            threads=cfg.threads, grid_step=cfg.grid_step)
    run.emit_scan("collapse", col.spec, col.report)
    run.emit("collapse_boundary.json", {"t3": col.t3, "t_eps": col.t_eps, "boundary": col.boundary})
    ok = tg.report.passed and col.report.passed and iso.holds()
    summary = {"tot_geod_margin": tg.report.min_margin, "collapse_margin": col.report.min_margin,
               "isotopy_a": iso.a, "isotopy_holds": iso.holds()}
    if not ok:
        raise DomainMismatch("a surgery building block failed certification", **summary)
    return summary


def _stage_eqf(run: _Run) -> dict:
    cfg, B, D, TD = run.cfg, run.ctx["B"], run.ctx["D"], run.ctx["T_D"]
    if cfg.coeff_group is None:
        if cfg.m != 1:
            raise DomainMismatch("coefficient data must be given explicitly when m != 1", m=cfg.m)
        coeff, p_img = (), ()
    else:
        coeff, p_img = tuple(cfg.coeff_group), tuple(cfg.p_image)
    k = len(cfg.nu)
    zero = (0,) * len(coeff)
    mu_w = tuple(tuple(x) if isinstance(x, (list, tuple)) else (x,) for x in (cfg.mu_w or [zero] * (2 * k)))
    if len(mu_w) != 2 * k:
        raise DomainMismatch("mu_w needs one value per basis vector of the form", expected=2 * k, got=len(mu_w))
    mu = (zero,) * (D.n - 2 * k) + mu_w
    form_D = skewalg.ExtendedQuadraticForm(D, coeff, p_img, mu)
    form_B = skewalg.eqf_change_basis(form_D, TD.inverse())
    if form_B.lam != B:
        raise DomainMismatch("transported form does not have lambda = B")
    if skewalg.eqf_change_basis(form_B, TD) != form_D:
        raise DomainMismatch("basis change round trip failed")
    tags = []
    for i in range(D.n // 2):
        sub = skewalg.ExtendedQuadraticForm(
            skewalg.block_diagonal([D[2 * i, 2 * i + 1]]), coeff, p_img, (mu[2 * i], mu[2 * i + 1]))
        tags.append({"block": D[2 * i, 2 * i + 1], "boundary": skewalg.classify_boundary(sub)})
    run.emit("eqf.json", {"form_D": form_D, "form_B": form_B, "summands": tags})
    counts: dict[str, int] = {}
    for t in tags:
        counts[t["boundary"].value] = counts.get(t["boundary"].value, 0) + 1
    return {"rank": form_B.rank, "summands": counts}


STAGES: tuple[tuple[str, Callable[[_Run], dict]], ...] = (
    ("matrix", _stage_matrix),
    ("normal_form", _stage_normal_form),
    ("realization", _stage_realization),
    ("graph", _stage_graph),
    ("schedule", _stage_schedule),
    ("unlink", _stage_unlink),
    ("surgery", _stage_surgery),
    ("eqf", _stage_eqf),
)


def run(cfg: PipelineConfig) -> PipelineReport:
    """Execute all stages; stop at the first failure and record it.

    Only :class:`DomainError` is caught; anything else is a bug and propagates.
    """
    r = _Run(cfg)
    stages: list[StageResult] = []
    for name, fn in STAGES:
        r.artifacts = []
        t0 = time.perf_counter()
        try:
            summary = fn(r)
            res = StageResult(name, True, plain(summary), list(r.artifacts))
        except DomainError as exc:
            res = StageResult(name, False, {}, list(r.artifacts), exc.to_dict())
        res.seconds = time.perf_counter() - t0
        stages.append(res)
        if not res.passed:
            break
    report = PipelineReport(cfg, stages)
    if r.out is not None:
        write_text_atomic(r.out / "report.json", dumps(report))
        write_text_atomic(r.out / "timing.txt", report.timing_text())
    return report


__all__ = ["PipelineConfig", "PipelineReport", "StageResult", "STAGES", "run"]
