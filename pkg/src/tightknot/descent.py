"""Constrained-descent driver: stepping, line search, thickness correction.

The driver shortens a polygon subject to unit constraint thickness.  Away
from contact it is plain steepest descent on length plus the equilateral
penalty.  At contact the descent direction is resolved against the active
constraint cone and the stepsize comes from a low-precision Brent search
on polygonal ropelength, filtered by a few practical acceptability rules.
Accumulated thickness error is repaired by a Newton corrector that pushes
every active constraint back toward the bound, with uniform rescaling as
the fallback.  A run walks a schedule of resolutions, re-sampling the
rounded-out curve between stages, and keeps an append-only TSV trace.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .geometry import (Polygon, eq_penalty, grad_eq_penalty, grad_length,
                       polygon_length)
from .rigidity import RESIDUAL_GOAL, Resolution, build_rigidity_matrix, resolve
from .roundout import sample_even, splice
from .snnls import SingularSubmatrix, minnorm_solve
from .thickness import cthi, find_active_sets, prop_len, pthi

__all__ = [
    "RunConfig",
    "DescentState",
    "RunReport",
    "Stalled",
    "descend_step",
    "correct",
    "run",
    "refine",
    "MAX_NEWTON",
]

MAX_NEWTON = 10        # Newton passes before the rescale fallback
_FLAT_TOL = 1e-12      # relative change treated as "did not increase"
_INCREASE_TOL = 1e-3   # largest accepted relative ropelength increase
_BRENT_TOL = 1e-3      # relative stepsize precision of the line search
_STALL_WINDOW = 100    # floor-sized steps without progress before a stall
_STALL_DLEN = 1e-9


class Stalled(RuntimeError):
    """No computationally acceptable stepsize exists at this state."""


@dataclass(frozen=True)
class RunConfig:
    """Knobs of a tightening run; the defaults are the production settings."""

    tau: float = 1.0
    max_err: float = 1e-4
    min_step: float = 1e-6
    max_step: float = 1e-2
    euler_cap: float = 1e-2
    residual_target: float = RESIDUAL_GOAL
    schedule: tuple = (2.0, 4.0, 8.0)
    eq_stiffness: float = 1.0
    seed: int = 0
    max_steps: int = 20_000
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0.0 < self.min_step <= self.max_step:
            raise ValueError("step bounds must satisfy 0 < min <= max")
        if not 0.0 < self.max_err < 0.01:
            raise ValueError("max_err must lie in (0, 0.01)")
        sched = tuple(float(s) for s in self.schedule)
        if not sched or min(sched) <= 0.0 or \
                any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("schedule must be positive and strictly increasing")
        object.__setattr__(self, "schedule", sched)
        if self.tau <= 0.0 or self.euler_cap <= 0.0:
            raise ValueError("tau and the Euler cap must be positive")
        if self.residual_target <= 0.0:
            raise ValueError("residual target must be positive")
        if self.eq_stiffness < 0.0 or self.max_steps < 0 or self.checkpoint_every < 0:
            raise ValueError("stiffness, budget and cadence cannot be negative")


@dataclass
class DescentState:
    """Mutable driver state; the log is append-only and shared by design."""

    poly: Polygon
    step: int = 0
    resolution: Resolution | None = None
    cthi: float = float("nan")
    log: list = field(default_factory=list)
    last_alpha: float = 0.0
    last_event: str = ""
    _ctx: tuple | None = field(default=None, repr=False)


@dataclass(frozen=True)
class RunReport:
    status: str            # "converged" | "stalled" | "budget"
    steps: int
    stage: int             # index into the schedule that the run reached
    prop_len: float
    pthi: float
    cthi: float
    residual_ratio: float
    num_struts: int
    num_kinks: int
    trace: tuple


# -- per-position context -------------------------------------------------


@dataclass
class _Context:
    direction: np.ndarray  # -grad(Len + Eq), one 3-vector per vertex
    length: float
    penalty: float
    pthi: float
    cthi: float
    active: object | None
    resolution: Resolution | None

    @property
    def objective(self) -> float:
        return self.length + self.penalty


def _make_context(poly: Polygon, cfg: RunConfig) -> _Context:
    b = grad_length(poly) - grad_eq_penalty(poly, cfg.eq_stiffness)
    c = cthi(poly, cfg.tau)
    out = _Context(direction=b, length=polygon_length(poly),
                   penalty=eq_penalty(poly, cfg.eq_stiffness),
                   pthi=pthi(poly), cthi=c, active=None, resolution=None)
    if c <= 1.0:
        out.active = find_active_sets(poly, tau=cfg.tau, target=1.0,
                                      strut_tol=2.0 * cfg.max_err,
                                      kink_tol=2.0 * cfg.max_err)
        A = build_rigidity_matrix(poly, out.active)
        out.resolution = resolve(b, A)
    return out


def _cfg_key(cfg: RunConfig):
    return (cfg.tau, cfg.eq_stiffness, cfg.max_err)


def _commit(state: DescentState, cfg: RunConfig, poly: Polygon, ctx: _Context):
    state.poly = poly
    state._ctx = (poly, _cfg_key(cfg), ctx)
    state.resolution = ctx.resolution
    state.cthi = ctx.cthi


def _context(state: DescentState, cfg: RunConfig) -> _Context:
    cached = state._ctx
    if cached is not None and cached[0] is state.poly and cached[1] == _cfg_key(cfg):
        return cached[2]
    ctx = _make_context(state.poly, cfg)
    _commit(state, cfg, state.poly, ctx)
    return ctx


# -- single step ------------------------------------------------------------


def descend_step(state: DescentState, cfg: RunConfig) -> DescentState:
    """One driver step: Euler before contact, resolved line search at contact.

    At a near-critical state (residual at or under the configured target
    with thickness in bounds) the state is returned unmoved with last_event
    "converged".  A state with no computationally acceptable stepsize
    raises Stalled.
    """
    poly = state.poly
    ctx = _context(state, cfg)
    if ctx.cthi > 1.0:
        # pre-contact regime: no linear algebra, stepsize from the
        # remaining room before the tube touches itself
        alpha = min(cfg.euler_cap, max(cfg.min_step, 0.5 * (ctx.cthi - 1.0)))
        cand = poly.with_verts(poly.verts + alpha * ctx.direction)
        return _finish_step(state, cfg, ctx, cand, alpha)
    res = ctx.resolution
    if res.residual_ratio <= cfg.residual_target and ctx.cthi >= 1.0 - cfg.max_err:
        state.last_alpha = 0.0
        state.last_event = "converged"
        return state

    dirn = res.constrained_gradient
    base = ctx.length / ctx.pthi
    reject_below = 1.0 - 2.0 * cfg.max_err
    big = 16.0 * base

    def measured(alpha: float) -> float:
        cand = poly.with_verts(poly.verts + alpha * dirn)
        # a probe that swallows an undiscovered contact is unacceptable
        if cthi(cand, cfg.tau) < reject_below:
            return big + alpha
        return prop_len(cand)

    # searching in log-step makes the Brent tolerance relative
    found = optimize.minimize_scalar(
        lambda t: measured(math.exp(t)),
        bounds=(math.log(cfg.min_step), math.log(cfg.max_step)),
        method="bounded", options={"xatol": _BRENT_TOL})
    alpha = float(math.exp(found.x))
    best = float(found.fun)
    if best >= big:
        raise Stalled(
            "stalled: every stepsize in [%g, %g] dropped constraint thickness "
            "below %.6g (residual %.3g)"
            % (cfg.min_step, cfg.max_step, reject_below, res.residual_ratio))
    if best > base * (1.0 + _INCREASE_TOL):
        raise Stalled(
            "stalled: the best stepsize %g still raises ropelength by %.3g "
            "(allowed %.1g, residual %.3g)"
            % (alpha, best / base - 1.0, _INCREASE_TOL, res.residual_ratio))

    # look ahead: the constraint solve must also work at the new position
    while True:
        cand = poly.with_verts(poly.verts + alpha * dirn)
        try:
            return _finish_step(state, cfg, ctx, cand, alpha)
        except SingularSubmatrix:
            alpha *= 0.5
            if alpha < cfg.min_step:
                raise Stalled("stalled: the constraint solve failed at every "
                              "acceptable stepsize") from None


def _finish_step(state: DescentState, cfg: RunConfig, old: _Context,
                 cand: Polygon, alpha: float) -> DescentState:
    ctx = _make_context(cand, cfg)
    _commit(state, cfg, cand, ctx)
    state.step += 1
    state.last_alpha = alpha
    if ctx.objective > old.objective * (1.0 + _FLAT_TOL):
        state.last_event = "accepted_increase"
    elif old.cthi > 1.0:
        state.last_event = "euler"
    else:
        state.last_event = "step"
    return state


# -- error correction ---------------------------------------------------------


def correct(state: DescentState, cfg: RunConfig,
            max_newton: int = MAX_NEWTON) -> DescentState:
    """Newton-correct accumulated thickness error back above 1 - max_err.

    Each pass asks every active constraint to move to 1 - max_err/2 (the
    deliberate undershoot keeps rediscovered struts from cycling), solves
    the transposed rigidity system for the smallest such variation, and
    backtracks on the thickness deficit.  If the passes run out, the state
    is rescaled uniformly instead, which preserves ropelength exactly.
    """
    poly = state.poly
    c = cthi(poly, cfg.tau)
    goal = 1.0 - 0.5 * cfg.max_err
    for _ in range(max_newton):
        if c >= 1.0 - cfg.max_err:
            break
        acts = find_active_sets(poly, tau=cfg.tau, target=1.0,
                                strut_tol=2.0 * cfg.max_err,
                                kink_tol=2.0 * cfg.max_err)
        wanted = np.array([goal - 0.5 * s.dist for s in acts.struts] +
                          [cfg.tau * goal - k.minrad for k in acts.kinks])
        if wanted.size == 0 or not np.any(wanted):
            break
        A = build_rigidity_matrix(poly, acts)
        # columns hold negated constraint gradients, so desired increases
        # enter the transposed system with their sign flipped
        w = minnorm_solve(A.T, -wanted).w.reshape(-1, 3)
        scale, stepped = 1.0, False
        for _ in range(8):
            cand = poly.with_verts(poly.verts + scale * w)
            c_new = cthi(cand, cfg.tau)
            if c_new > c:
                poly, c, stepped = cand, c_new, True
                break
            scale *= 0.5
        if not stepped:
            break
    if c < 1.0 - cfg.max_err:
        warnings.warn("thickness correction fell back to uniform rescaling",
                      RuntimeWarning, stacklevel=2)
        # rescaling is not exactly thickness-linear (the admissible-pair
        # family follows the edge length), so settle it in a few passes
        for _ in range(3):
            poly = poly.scaled(1.0 / c)
            c = cthi(poly, cfg.tau)
            if abs(c - 1.0) <= 0.5 * cfg.max_err:
                break
    if poly is not state.poly:
        state.poly = poly
        state._ctx = None
        state.resolution = None
    state.cthi = c
    return state


# -- resolution ladder ----------------------------------------------------


def refine(poly: Polygon, factor: int) -> Polygon:
    """Resample every component from the rounded-out curve at factor times
    its vertex count; factor 1 hands the polygon back untouched.  The new
    vertices sit on the spliced arc-and-segment curve at equal arclength
    per component, so the output is approximately equilateral and keeps
    the discrete curvature radius up to discretization error."""
    if factor <= 1:
        return poly
    counts = [int(factor) * int(n) for n in poly.component_sizes()]
    return sample_even(splice(poly), counts)


# -- the run driver ---------------------------------------------------------


def run(poly: Polygon, cfg: RunConfig = RunConfig(), on_checkpoint=None):
    """Tighten a polygon down the resolution schedule until critical.

    The first action rescales the input to constraint thickness 1; the
    topology is trusted as given.  Returns (state, report).  Stalls and
    exhausted step budgets are reported distinctly in report.status and
    both still hand back the best state of the current stage.
    """
    state = DescentState(poly)
    _log_header(state, cfg)
    _rescale_to_unit(state, cfg)
    _log_row(state, cfg, "rescale")
    status = "budget"
    stage = 0
    for stage, level in enumerate(cfg.schedule):
        _enter_stage(state, cfg, level)
        status = _descend_stage(state, cfg, on_checkpoint)
        if status != "converged":
            break
    ctx = _context(state, cfg)
    res = ctx.resolution
    report = RunReport(
        status=status, steps=state.step, stage=stage,
        prop_len=ctx.length / ctx.pthi, pthi=ctx.pthi, cthi=ctx.cthi,
        residual_ratio=res.residual_ratio if res is not None else 1.0,
        num_struts=len(ctx.active.struts) if ctx.active is not None else 0,
        num_kinks=len(ctx.active.kinks) if ctx.active is not None else 0,
        trace=tuple(state.log))
    return state, report


def _descend_stage(state: DescentState, cfg: RunConfig, on_checkpoint) -> str:
    floor_run = 0
    best_prop, best_verts = math.inf, None
    while True:
        if state.step >= cfg.max_steps:
            status = "budget"
            break
        prev_len = _context(state, cfg).length
        try:
            descend_step(state, cfg)
        except Stalled:
            status = "stalled"
            _log_row(state, cfg, "stalled")
            break
        if state.last_event == "converged":
            _log_row(state, cfg, "converged")
            return "converged"
        event = state.last_event
        if state.cthi < 1.0 - cfg.max_err:
            correct(state, cfg)
            event += ",correct"
        ctx = _context(state, cfg)
        _log_row(state, cfg, event)
        if on_checkpoint is not None and cfg.checkpoint_every > 0 \
                and state.step % cfg.checkpoint_every == 0:
            on_checkpoint(state)
        prop = ctx.length / ctx.pthi
        if ctx.cthi >= 1.0 - 1.01 * cfg.max_err and prop < best_prop:
            best_prop, best_verts = prop, state.poly.verts.copy()
        at_floor = state.last_alpha <= cfg.min_step * 1.01
        small = abs(ctx.length - prev_len) < _STALL_DLEN * prev_len
        floor_run = floor_run + 1 if (at_floor and small) else 0
        if floor_run >= _STALL_WINDOW:
            status = "stalled"
            _log_row(state, cfg, "stalled")
            break
    # a stalled or out-of-budget stage still hands back its best state
    if best_verts is not None and best_prop < _context(state, cfg).length / _context(state, cfg).pthi:
        state.poly = state.poly.with_verts(best_verts)
        state._ctx = None
        _context(state, cfg)
    return status


def _enter_stage(state: DescentState, cfg: RunConfig, level: float):
    ctx = _context(state, cfg)
    target = level * ctx.length / ctx.pthi
    factor = max(1, int(round(target / state.poly.num_vertices)))
    if factor == 1:
        return
    state.poly = refine(state.poly, factor)
    state._ctx = None
    _rescale_to_unit(state, cfg)
    state.last_alpha = 0.0
    _log_row(state, cfg, "refine")


def _rescale_to_unit(state: DescentState, cfg: RunConfig):
    # normalize by pthi first: it is exactly scale-linear, so this lands
    # every input scale on the same polygon before the settle loop.  Going
    # straight at cthi = 1 from a very coarse scale can instead hit a
    # fixed point where near-neighbor admissible pairs dominate and the
    # polygon is under-resolved for the tube.
    state.poly = state.poly.scaled(1.0 / pthi(state.poly))
    state._ctx = None
    # constraint thickness is only nearly scale-linear (the admissible-pair
    # family tracks the mean edge), hence the short settling loop
    c = cthi(state.poly, cfg.tau)
    for _ in range(3):
        if abs(c - 1.0) <= 0.25 * cfg.max_err:
            break
        state.poly = state.poly.scaled(1.0 / c)
        state._ctx = None
        c = cthi(state.poly, cfg.tau)
    state.cthi = c
    state.last_alpha = 0.0


# -- trace ------------------------------------------------------------------


def _log_header(state: DescentState, cfg: RunConfig):
    state.log.append(
        "# tightknot run tau=%.17g max_err=%.17g step=[%.17g,%.17g] "
        "euler_cap=%.17g residual_target=%.17g schedule=%s eq_stiffness=%.17g "
        "seed=%d max_steps=%d"
        % (cfg.tau, cfg.max_err, cfg.min_step, cfg.max_step, cfg.euler_cap,
           cfg.residual_target, ",".join("%.17g" % s for s in cfg.schedule),
           cfg.eq_stiffness, cfg.seed, cfg.max_steps))
    state.log.append("# step\tlen\tpthi\tresidual\tstruts\tkinks\talpha\tevent")


def _log_row(state: DescentState, cfg: RunConfig, event: str):
    ctx = _context(state, cfg)
    res = ctx.resolution
    state.log.append("%d\t%.17g\t%.17g\t%.17g\t%d\t%d\t%.17g\t%s" % (
        state.step, ctx.length, ctx.pthi,
        res.residual_ratio if res is not None else 1.0,
        len(ctx.active.struts) if ctx.active is not None else 0,
        len(ctx.active.kinks) if ctx.active is not None else 0,
        state.last_alpha, event))
