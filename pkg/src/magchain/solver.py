"""Equilibrium search: energy minimization over products of unit spheres.

A quasi-Newton (limited-memory BFGS) descent runs on the tangent spaces of
the free unit vectors; every accepted step is pulled back to the manifold by
row renormalization.  Gradients are projected, so the effective parameter
count is 2 per free unit vector (4n - 4 for an n-ball chain).  A backtracking
Armijo line search keeps accepted iterates strictly energy-monotone.

Multiple equilibria are expected physically.  Sweeps disambiguate branches by
continuation (warm starts); a seeded multi-start with small tangent
perturbations is available for isolated solves near unstable states such as a
field anti-parallel to the base tangent.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .chain import ChainConfig, DesignKind, DesignSpec, EnergyBreakdown, Gravity, RodShape, nonadjacent_overlaps
from .energymodel import ChainModel, RodModel, make_model, normalize_rows, project_rows
from .errors import SingularityError
from .magnetics import FieldSource


@dataclass
class SolveOptions:
    max_iterations: int = 2000
    gradient_tol_rel: float = 1e-10   # times the model energy scale, per radian
    energy_rel_tol: float = 1e-12     # relative energy change over the window
    energy_window: int = 5
    memory: int = 10                  # L-BFGS history length
    restarts: int = 0                 # extra perturbed starts (multi-start)
    perturbation: float = 0.05        # rad, multi-start tangent noise
    gradient_mode: str = "analytic"   # "analytic" | "fd" (3-point, slow, for checking)


@dataclass
class SolveResult:
    config: ChainConfig | RodShape
    energy: EnergyBreakdown
    converged: bool
    iterations: int
    gradient_norm: float
    gradient_tol: float
    tip: np.ndarray
    energy_history: np.ndarray
    overlaps: list = dataclass_field(default_factory=list)
    messages: list = dataclass_field(default_factory=list)


def _tangent_basis(u: np.ndarray):
    a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ u) * u
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(u, e1)


def _fd_gradient(model, P: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """3-point central differences along tangent bases, with retraction."""
    G = np.zeros_like(P)
    for i in range(P.shape[0]):
        for e in _tangent_basis(P[i]):
            Pp = P.copy()
            Pp[i] = P[i] + h * e
            Pp[i] /= np.linalg.norm(Pp[i])
            up = model.value_and_grad(normalize_rows(Pp))[0]
            Pm = P.copy()
            Pm[i] = P[i] - h * e
            Pm[i] /= np.linalg.norm(Pm[i])
            um = model.value_and_grad(normalize_rows(Pm))[0]
            G[i] += (up - um) / (2.0 * h) * e
    return G


def _value_and_grad(model, P: np.ndarray, mode: str):
    if mode == "fd":
        U = model.value_and_grad(P)[0]
        return U, _fd_gradient(model, P)
    return model.value_and_grad(P)


def minimize(model, P0: np.ndarray, options: SolveOptions):
    """L-BFGS with Armijo backtracking and unit-sphere retraction.

    Returns (P, info dict).  info["converged"] requires both the projected
    gradient norm below tolerance and a flat energy over the trailing window.
    """
    opts = options
    scale = model.energy_scale()
    gtol = opts.gradient_tol_rel * scale
    P = normalize_rows(np.array(P0, dtype=float))
    if P.shape[0] == 0:
        U = model.value_and_grad(P)[0]
        return P, {"converged": True, "iterations": 0, "gradient_norm": 0.0,
                   "gradient_tol": gtol, "history": [U], "messages": []}
    U, G = _value_and_grad(model, P, opts.gradient_mode)
    history = [U]
    messages = []
    S, Y, RHO = [], [], []
    n_iter = 0
    converged = False

    def flat_energy() -> bool:
        if len(history) < 2:
            return True
        w = min(opts.energy_window, len(history) - 1)
        return abs(history[-1] - history[-1 - w]) <= opts.energy_rel_tol * max(abs(history[-1]), 1e-30)

    def direction(g: np.ndarray) -> np.ndarray:
        q = g.ravel().copy()
        if not S:
            # no curvature info yet: gradient over the characteristic
            # curvature (~ energy scale per rad^2) gives a Newton-sized step
            # and keeps the iteration invariant under energy rescaling
            return -q / scale
        alphas = []
        for s, y, rho in zip(reversed(S), reversed(Y), reversed(RHO)):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        q *= float(S[-1] @ Y[-1]) / float(Y[-1] @ Y[-1])
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q

    while n_iter < opts.max_iterations:
        gnorm = float(np.linalg.norm(G))
        if gnorm <= gtol and flat_energy():
            converged = True
            break
        p = direction(G)
        gdotp = float(G.ravel() @ p)
        if gdotp >= -1e-15 * gnorm * max(np.linalg.norm(p), 1e-300):
            S.clear(); Y.clear(); RHO.clear()
            p = -G.ravel()
            gdotp = -gnorm**2
        step = p.reshape(P.shape)
        # Armijo with a machine-epsilon cushion: near the minimum the true
        # decrease is below the resolution of U, but the analytic gradient is
        # still accurate, so the quasi-Newton phase keeps shrinking it.
        cushion = 8.0 * np.finfo(float).eps * abs(U)
        alpha = 1.0
        accepted = False
        for _ in range(60):
            P_new = normalize_rows(P + alpha * step)
            try:
                U_new, G_new = _value_and_grad(model, P_new, opts.gradient_mode)
            except SingularityError:
                # trial jumped inside the dipole core; shrink and retry
                alpha *= 0.5
                continue
            if U_new <= U + 1e-4 * alpha * gdotp + cushion:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if S:
                # quasi-Newton direction has gone stale; retry once from steepest
                S.clear(); Y.clear(); RHO.clear()
                continue
            if gnorm <= gtol:
                converged = True
            else:
                messages.append(f"line search stalled at gradient norm {gnorm:.3e}")
            break
        s = project_rows(P_new - P, P_new).ravel()
        y = (G_new - project_rows(G, P_new)).ravel()
        sy = float(s @ y)
        if sy > 1e-12 * np.linalg.norm(s) * max(np.linalg.norm(y), 1e-300):
            S.append(s); Y.append(y); RHO.append(1.0 / sy)
            if len(S) > opts.memory:
                S.pop(0); Y.pop(0); RHO.pop(0)
        P, U, G = P_new, U_new, G_new
        history.append(U)
        n_iter += 1
    gnorm = float(np.linalg.norm(G))
    if not converged and gnorm <= gtol and flat_energy():
        converged = True
    return P, {"converged": converged, "iterations": n_iter, "gradient_norm": gnorm,
               "gradient_tol": gtol, "history": history, "messages": messages}


def _perturbed(P: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    noise = rng.normal(0.0, scale, size=P.shape)
    return normalize_rows(P + project_rows(noise, P))


def solve_shape(design: DesignSpec, field: FieldSource | None, *,
                ball_count: int | None = None, length: float | None = None,
                gravity: Gravity | None = None, include_skin: bool = True,
                base_position=(0.0, 0.0, 0.0), base_tangent=(1.0, 0.0, 0.0),
                clamped_base: bool = False, wall=None, self_contact: bool = True,
                init: ChainConfig | RodShape | None = None,
                options: SolveOptions | None = None, seed: int = 0) -> SolveResult:
    """Find an equilibrium shape for one design under one field.

    init seeds the descent (continuation); None starts from straight.  With
    options.restarts > 0, additional seeded tangent perturbations of the
    initial guess are solved and the lowest converged energy wins.
    """
    opts = options or SolveOptions()
    model = make_model(design, field, ball_count=ball_count, length=length,
                       gravity=gravity, include_skin=include_skin,
                       base_position=base_position, base_tangent=base_tangent,
                       clamped_base=clamped_base, wall=wall, self_contact=self_contact)
    P0 = model.params_from_config(init) if init is not None else model.straight_params()
    candidates = [minimize(model, P0, opts)]
    if opts.restarts > 0 and P0.shape[0] > 0:
        for r in range(opts.restarts):
            rng = np.random.default_rng([seed, r])
            candidates.append(minimize(model, _perturbed(P0, opts.perturbation, rng), opts))

    def rank(c):
        P, info = c
        return (not info["converged"], info["history"][-1])

    P, info = min(candidates, key=rank)
    config = model.config_from_params(P)
    bd = model.breakdown(P)
    overlaps = nonadjacent_overlaps(config) if isinstance(config, ChainConfig) else []
    messages = list(info["messages"])
    if overlaps:
        messages.append(f"non-adjacent overlap at ball pairs {overlaps}")
    return SolveResult(
        config=config, energy=bd, converged=info["converged"],
        iterations=info["iterations"], gradient_norm=info["gradient_norm"],
        gradient_tol=info["gradient_tol"], tip=model.tip_position(P),
        energy_history=np.asarray(info["history"]), overlaps=overlaps,
        messages=messages)


def continuation_sweep(design: DesignSpec, fields, *, reseed_straight: bool = True,
                       **kwargs) -> list[SolveResult]:
    """Solve a sequence of fields, warm-starting each from the previous shape.

    A non-converged step is flagged and, if reseed_straight, retried from the
    straight configuration; the better of the two attempts is kept and the
    next step reseeds from scratch if neither converged.
    """
    results: list[SolveResult] = []
    prev = None
    for fld in fields:
        res = solve_shape(design, fld, init=prev, **kwargs)
        if not res.converged and reseed_straight and prev is not None:
            retry = solve_shape(design, fld, init=None, **kwargs)
            retry.messages.insert(0, "warm start failed to converge; reseeded from straight")
            if retry.converged or retry.energy.total < res.energy.total:
                res = retry
        results.append(res)
        prev = res.config if res.converged else None
    return results


def verify_gradient(design: DesignSpec, field: FieldSource | None,
                    config: ChainConfig | RodShape | None = None,
                    step: float = 1e-7, **kwargs) -> float:
    """Relative mismatch between analytic and 5-point finite-difference gradients.

    The difference quotient runs along tangent-basis directions with
    retraction, so it measures exactly what the projected analytic gradient
    claims.  Returns ||G_fd - G_an|| / max(||G_fd||, ||G_an||).
    """
    if isinstance(config, ChainConfig):
        kwargs.setdefault("ball_count", config.ball_count)
        kwargs.setdefault("base_position", config.base_position)
        kwargs.setdefault("base_tangent", config.dipole_dirs[0])
    model = make_model(design, field, **kwargs)
    P = model.params_from_config(config) if config is not None else model.straight_params()
    _, G_an = model.value_and_grad(P)

    def value_at(i: int, e: np.ndarray, a: float) -> float:
        Pd = P.copy()
        Pd[i] = P[i] + a * e
        Pd[i] /= np.linalg.norm(Pd[i])
        return model.value_and_grad(Pd)[0]

    G_fd = np.zeros_like(P)
    for i in range(P.shape[0]):
        for e in _tangent_basis(P[i]):
            d = (value_at(i, e, -2 * step) - 8.0 * value_at(i, e, -step)
                 + 8.0 * value_at(i, e, step) - value_at(i, e, 2 * step)) / (12.0 * step)
            G_fd[i] += d * e
    denom = max(float(np.linalg.norm(G_fd)), float(np.linalg.norm(G_an)), 1e-300)
    return float(np.linalg.norm(G_fd - G_an)) / denom
