"""Constructive solution finders: direct minimization, mountain pass,
deflated multiplicity search, and the almost-everywhere identity check.

All three solvers share one first-order engine: descent in the metric of
the linear part H = D^T diag(wd) D / h (Armijo backtracking, c1 = 1e-4,
shrink 0.5, initial step 1).  Descent in that fixed metric removes the
grid-induced stiffness of the fractional operator, stays deterministic,
and makes no secant assumptions, so it is robust across p.  Critical
points that are not minima (the higher symmetric pairs, and the final
polish of the mountain-pass maximizer) are located by a damped
trust-region root solve on the same gradient field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, toeplitz
from scipy.optimize import root

from .energy import ProblemState, basis_alpha_norms, energy, gradient, phi
from .fracops import alpha_norm, gl_weights
from .grid import GridFunction, sup_norm
from .nonlinearity import Family

__all__ = [
    "GeometryError",
    "SolveReport",
    "MultiplicityReport",
    "RegularityResult",
    "minimize_direct",
    "mountain_pass",
    "multiplicity_search",
    "regularity_check",
    "DEFAULT_SEPARATION_SCALE",
]

ARMIJO_C1 = 1e-4
ARMIJO_SHRINK = 0.5
TRIVIAL_SUP = 1e-10
DEFAULT_SEPARATION_SCALE = 1e-3


class GeometryError(RuntimeError):
    """The mountain-pass geometry could not be established numerically."""


@dataclass
class SolveReport:
    solution: GridFunction
    energy_value: float
    residual: float
    iterations: int
    converged: bool
    method: str
    seed: int
    eps_reg_used: float
    trivial: bool
    rim_value: Optional[float] = None
    endpoint_energy: Optional[float] = None


@dataclass
class MultiplicityReport:
    pairs: list
    pairwise_distances: np.ndarray
    converged_count: int
    separation: float
    seed: int


@dataclass
class RegularityResult:
    """Constancy statistics of the transformed flux plus the f-primitive.

    constant_estimate and deviation are taken over the central region
    [T/10, 9T/10]; the fractional flux of a converged solution carries an
    integrable singularity at t = T whose quadrature error would otherwise
    mask the identity.  deviation_full_interior covers all interior nodes,
    and deviation_left_variant evaluates the same expression with the
    left-sided transform, which is *not* constant for critical points and
    is reported for contrast.
    """

    constant_estimate: float
    deviation: float
    deviation_full_interior: float
    deviation_left_variant: float

    def __iter__(self):
        return iter((self.constant_estimate, self.deviation))


class _Workspace:
    """Per-state cache: metric factorization, basis norms, Hessian builder."""

    def __init__(self, st: ProblemState):
        self.st = st
        n = st.grid.n
        D = st.ops.left_deriv
        wd = st.ops.deriv_quad_weights
        H = (D.T * wd) @ D / st.grid.h
        self.H_int = H[1:n, 1:n]
        self.metric = cho_factor(self.H_int + 1e-14 * np.eye(n - 1))
        self.basis_norms = basis_alpha_norms(st)

    def residual(self, u: GridFunction) -> float:
        g = gradient(self.st, u).values
        return float(np.max(self.st.grid.h * np.abs(g[1:-1]) / self.basis_norms))

    def descent_direction(self, g: np.ndarray) -> np.ndarray:
        d = np.zeros_like(g)
        d[1:-1] = -cho_solve(self.metric, g[1:-1])
        return d

    def grad_interior(self, ui: np.ndarray) -> np.ndarray:
        u = np.zeros(self.st.grid.n + 1)
        u[1:-1] = ui
        return gradient(self.st, GridFunction(u, dirichlet=True)).values[1:-1]

    def hessian_interior(self, ui: np.ndarray) -> np.ndarray:
        st = self.st
        n = st.grid.n
        u = np.zeros(n + 1)
        u[1:-1] = ui
        p = st.params.p
        du = st.ops.left_deriv @ u
        eps = st.eps_reg
        if p >= 2.0:
            dphi = (p - 1.0) * np.abs(du) ** (p - 2.0)
        else:
            s2 = du * du + eps * eps
            dphi = s2 ** ((p - 4.0) / 2.0) * ((p - 1.0) * du * du + eps * eps)
        D = st.ops.left_deriv
        wd = st.ops.deriv_quad_weights
        H = (D.T * (wd * dphi)) @ D / st.grid.h
        fu = st.spec.fu_values(st.grid.nodes, u)
        return H[1:n, 1:n] - np.diag(fu[1:n])


def _armijo_step(
    st: ProblemState,
    u: np.ndarray,
    E: float,
    d: np.ndarray,
    slope: float,
    max_halvings: int = 60,
) -> tuple[np.ndarray, float]:
    s = 1.0
    for _ in range(max_halvings):
        un = u + s * d
        un[0] = 0.0
        un[-1] = 0.0
        En = energy(st, GridFunction(un, dirichlet=True))
        if En <= E + ARMIJO_C1 * s * slope:
            return un, En
        s *= ARMIJO_SHRINK
    return un, En


def _sublinear_gate(st: ProblemState, caller: str) -> None:
    spec = st.spec
    if spec.family is Family.SUPERLINEAR_POWER:
        raise ValueError(
            f"{caller} requires a sublinear-regime nonlinearity; "
            f"got SUPERLINEAR_POWER (mu={spec.mu})"
        )
    if spec.family is Family.SUBLINEAR_POWER and not spec.q < st.params.p:
        raise ValueError(
            f"{caller} requires exponent q < p, got q={spec.q}, p={st.params.p}"
        )


def _superlinear_gate(st: ProblemState, caller: str) -> None:
    spec = st.spec
    if spec.family is Family.SUBLINEAR_POWER:
        raise ValueError(
            f"{caller} requires a superlinear-regime nonlinearity; "
            f"got SUBLINEAR_POWER (q={spec.q})"
        )
    if spec.family is Family.SUPERLINEAR_POWER and not spec.mu > st.params.p:
        raise ValueError(
            f"{caller} requires exponent mu > p, got mu={spec.mu}, p={st.params.p}"
        )


def minimize_direct(
    st: ProblemState,
    init: GridFunction,
    tol: float = 1e-6,
    max_iter: int = 2000,
    seed: int = 0,
    _ws: Optional[_Workspace] = None,
) -> SolveReport:
    """Armijo descent on the energy in the linear-part metric.

    Requires a sublinear-regime nonlinearity (coercive energy).  On
    convergence the weak residual is at or below tol; starting from a
    small multiple of a smooth bump lands at a nontrivial negative-energy
    minimizer, while starting from zero stays at the trivial critical
    point, which the report flags.
    """
    _sublinear_gate(st, "minimize_direct")
    ws = _ws if _ws is not None else _Workspace(st)
    u = init.values.copy()
    u[0] = 0.0
    u[-1] = 0.0
    E = energy(st, GridFunction(u, dirichlet=True))
    res = math.inf
    steps = 0
    while True:
        uf = GridFunction(u, dirichlet=True)
        g = gradient(st, uf).values
        res = float(np.max(st.grid.h * np.abs(g[1:-1]) / ws.basis_norms))
        if res <= tol or steps >= max_iter:
            break
        d = ws.descent_direction(g)
        slope = float(np.sum(st.grid.h * g * d))
        if slope >= 0.0:  # metric solve lost descent; fall back to raw gradient
            d = -g
            slope = float(np.sum(st.grid.h * g * d))
            if slope >= 0.0:
                break
        E_prev = E
        u, E = _armijo_step(st, u, E, d, slope)
        steps += 1
        if E > E_prev:
            raise AssertionError("descent invariant violated: energy increased")
    sol = GridFunction(u, dirichlet=True)
    return SolveReport(
        solution=sol,
        energy_value=energy(st, sol),
        residual=res,
        iterations=steps,
        converged=res <= tol,
        method="direct",
        seed=seed,
        eps_reg_used=st.eps_reg,
        trivial=sup_norm(sol) <= TRIVIAL_SUP,
    )


def _sine_modes(st: ProblemState, coeffs: np.ndarray) -> GridFunction:
    t = st.grid.nodes
    T = st.grid.T
    u = np.zeros_like(t)
    for j, c in enumerate(coeffs, start=1):
        u += c * np.sin(j * np.pi * t / T)
    return GridFunction(u, dirichlet=True)


def _normalized(st: ProblemState, u: GridFunction) -> GridFunction:
    nrm = alpha_norm(st.ops, u, st.params.p)
    if nrm <= 0.0:
        raise ValueError("cannot normalize the zero function")
    return GridFunction(u.values / nrm, dirichlet=True)


def _redistribute(path: list[np.ndarray]) -> list[np.ndarray]:
    """Resample the polygonal path at uniform chord length.

    Keeps the states a connected chain from 0 to the far endpoint; without
    this the free states drain into the two basins and the running maximum
    ceases to witness the min-max level.
    """
    P = np.asarray(path)
    chords = np.sqrt(((P[1:] - P[:-1]) ** 2).sum(axis=1))
    s = np.concatenate([[0.0], np.cumsum(chords)])
    total = s[-1]
    if total <= 0.0:
        return path
    s /= total
    targets = np.linspace(0.0, 1.0, len(path))
    out = [path[0]]
    for tgt in targets[1:-1]:
        k = min(max(int(np.searchsorted(s, tgt)) - 1, 0), len(path) - 2)
        width = s[k + 1] - s[k]
        th = (tgt - s[k]) / width if width > 0 else 0.0
        out.append((1.0 - th) * P[k] + th * P[k + 1])
    out.append(path[-1])
    return out


def _rim_value(
    st: ProblemState, ws: _Workspace, rng: np.random.Generator, directions: int = 40
) -> tuple[float, float]:
    """Smallest sampled energy on the sphere of radius rho, shrinking rho
    until that minimum is positive."""
    rho = 0.1 * st.grid.T ** st.params.alpha
    for _ in range(80):
        worst = math.inf
        for _ in range(directions):
            c = rng.standard_normal(6)
            if not np.any(c):
                c[0] = 1.0
            v = _normalized(st, _sine_modes(st, c))
            worst = min(worst, energy(st, GridFunction(rho * v.values, dirichlet=True)))
        if worst > 0.0:
            return float(worst), rho
        rho *= 0.5
    raise GeometryError("no positive rim found: energy is not positive near 0")


def _polish_root(ws: _Workspace, u0: np.ndarray) -> tuple[np.ndarray, int]:
    sol = root(ws.grad_interior, u0[1:-1], jac=ws.hessian_interior, method="hybr", tol=1e-14)
    u = np.zeros_like(u0)
    u[1:-1] = sol.x
    return u, int(sol.nfev)


def mountain_pass(
    st: ProblemState,
    path_points: int = 21,
    tol: float = 1e-5,
    max_iter: int = 2000,
    seed: int = 0,
) -> SolveReport:
    """Min-max search along a deforming path from 0 to a negative endpoint.

    The rim value beta > 0 is certified by sampling a small sphere, the
    endpoint e by marching out the first sine ray until the energy turns
    negative.  Each sweep applies one Armijo descent step to the path's
    maximal-energy state (endpoints fixed) and re-equidistributes the
    chain; once the maximizer's residual is small its critical point is
    polished by a trust-region root solve on the gradient.  The returned
    value satisfies energy(e) < 0 < beta <= energy_value.
    """
    _superlinear_gate(st, "mountain_pass")
    ws = _Workspace(st)
    rng = np.random.default_rng(seed)
    beta, _rho = _rim_value(st, ws, rng)

    w0 = _normalized(st, _sine_modes(st, np.array([1.0])))
    s = 1.0
    e = None
    for _ in range(80):
        cand = GridFunction(s * w0.values, dirichlet=True)
        if energy(st, cand) < 0.0:
            e = cand
            break
        s *= 2.0
    if e is None:
        raise GeometryError("no negative-energy endpoint within the ray budget")
    endpoint_energy = energy(st, e)

    lams = np.linspace(0.0, 1.0, path_points)
    path = [lam * e.values for lam in lams]
    polish_gate = max(100.0 * tol, 1e-3)
    sweeps = 0
    res = math.inf
    kmax = 1
    for sweeps in range(max_iter):
        energies = [energy(st, GridFunction(z, dirichlet=True)) for z in path]
        kmax = 1 + int(np.argmax(energies[1:-1]))
        z = path[kmax]
        zf = GridFunction(z, dirichlet=True)
        g = gradient(st, zf).values
        res = float(np.max(st.grid.h * np.abs(g[1:-1]) / ws.basis_norms))
        if res <= polish_gate:
            break
        d = ws.descent_direction(g)
        slope = float(np.sum(st.grid.h * g * d))
        zn, _ = _armijo_step(st, z.copy(), energies[kmax], d, slope)
        path[kmax] = zn
        path = _redistribute(path)

    z, nfev = _polish_root(ws, path[kmax])
    sol = GridFunction(z, dirichlet=True)
    res = ws.residual(sol)
    E = energy(st, sol)
    converged = res <= tol and E >= beta and sup_norm(sol) > TRIVIAL_SUP
    if not converged and res > tol:
        # polish failed; report the raw maximizer
        sol = GridFunction(path[kmax], dirichlet=True)
        res = ws.residual(sol)
        E = energy(st, sol)
        converged = res <= tol and E >= beta
    return SolveReport(
        solution=sol,
        energy_value=E,
        residual=res,
        iterations=sweeps + nfev,
        converged=converged,
        method="mountain_pass",
        seed=seed,
        eps_reg_used=st.eps_reg,
        trivial=sup_norm(sol) <= TRIVIAL_SUP,
        rim_value=beta,
        endpoint_energy=endpoint_energy,
    )


def _deflation_factor(
    st: ProblemState, u: np.ndarray, known: list[np.ndarray], p: float
) -> float:
    m = 1.0
    for uk in known:
        for sgn in (1.0, -1.0):
            d = alpha_norm(
                st.ops, GridFunction(u - sgn * uk, dirichlet=True), p
            )
            m *= 1.0 + 1.0 / d**p
    return m


def _deflated_system(ws: _Workspace, known: list[np.ndarray]):
    """Residual and Jacobian of M(u) * grad(u) on the interior nodes.

    M is the product of (1 + ||u -+ u_k||^-p) penalties over the found
    pairs, so every known critical point (and its negative) stops being a
    root of the deflated field while new ones keep their residuals.
    """
    st = ws.st
    p = st.params.p
    n = st.grid.n
    D = st.ops.left_deriv
    wd = st.ops.deriv_quad_weights
    h = st.grid.h

    def embed(ui):
        u = np.zeros(n + 1)
        u[1:-1] = ui
        return u

    def factor_and_grad(u):
        m = 1.0
        gm = np.zeros(n - 1)
        for uk in known:
            for sgn in (1.0, -1.0):
                diff = u - sgn * uk
                dphi = phi(D @ diff, p)
                dn = float(np.sum(wd * np.abs(D @ diff) ** p) ** (1.0 / p))
                fac = 1.0 + dn ** (-p)
                m *= fac
                # d/du of ||diff||^-p contributes -p dn^(-p-1) * d dn/du
                ddn = (D.T @ (wd * dphi))[1:-1] * dn ** (1.0 - p)
                gm += (-p * dn ** (-p - 1.0) / fac) * ddn
        return m, m * gm

    def fun(ui):
        u = embed(ui)
        g = ws.grad_interior(ui)
        m, _ = factor_and_grad(u) if known else (1.0, None)
        return m * g

    def jac(ui):
        u = embed(ui)
        g = ws.grad_interior(ui)
        H = ws.hessian_interior(ui)
        if not known:
            return H
        m, gm = factor_and_grad(u)
        return m * H + np.outer(g, gm)

    return fun, jac


def multiplicity_search(
    st: ProblemState,
    k: int,
    tol: float = 1e-8,
    seed: int = 0,
) -> MultiplicityReport:
    """Collect up to k distinct +-pairs of negative-energy critical points.

    The even, coercive sublinear energy has exactly one minimizing pair;
    the further pairs guaranteed by the symmetric min-max values are
    saddle points, so descent alone cannot reach them.  Starts are taken
    on stationary points of the energy along rays through nested sine
    spans (pure modes first, then seeded combinations), the first pair by
    descent and the rest by the deflated root solve, with previously
    found pairs deflated away.  Pairs closer than the separation
    threshold to a known pair (under either sign) are discarded.
    """
    _sublinear_gate(st, "multiplicity_search")
    if not st.spec.is_even():
        raise ValueError("multiplicity_search requires an even antiderivative F")
    ws = _Workspace(st)
    p = st.params.p
    sep = DEFAULT_SEPARATION_SCALE * st.grid.T ** st.params.alpha
    rng = np.random.default_rng(seed)

    found: list[np.ndarray] = []
    reports: list[SolveReport] = []
    trials = 0
    budget = 15 * max(k, 1)
    n_modes = k + 2
    while len(found) < k and trials < budget:
        mode = trials % n_modes + 1
        if trials < n_modes:
            coeffs = np.zeros(mode)
            coeffs[-1] = 1.0
        else:
            coeffs = rng.standard_normal(mode)
            if not np.any(coeffs):
                coeffs[0] = 1.0
        trials += 1
        v = _normalized(st, _sine_modes(st, coeffs))
        sigmas = 2.0 ** np.arange(3.0, -13.0, -1.0)
        ray = [energy(st, GridFunction(sg * v.values, dirichlet=True)) for sg in sigmas]
        u0 = float(sigmas[int(np.argmin(ray))]) * v.values

        if not found:
            rep = minimize_direct(
                st, GridFunction(u0, dirichlet=True), tol=tol, max_iter=4000, seed=seed, _ws=ws
            )
            u, res, E = rep.solution.values, rep.residual, rep.energy_value
            iters = rep.iterations
            ok = rep.converged
        else:
            # stage 1: deflated solve escapes the basins of the found pairs;
            # stage 2: undeflated polish, since the deflation term's
            # curvature can stall the trust region short of full tolerance
            fun, jac = _deflated_system(ws, found)
            sol = root(fun, u0[1:-1], jac=jac, method="hybr", tol=1e-14)
            u = np.zeros(st.grid.n + 1)
            u[1:-1] = sol.x
            u, nfev2 = _polish_root(ws, u)
            uf = GridFunction(u, dirichlet=True)
            res = ws.residual(uf)
            E = energy(st, uf)
            iters = int(sol.nfev) + nfev2
            ok = res <= tol

        if not ok or E >= 0.0 or sup_norm(u) <= 1e-8:
            continue
        dists = [
            min(
                alpha_norm(st.ops, GridFunction(u - uk, dirichlet=True), p),
                alpha_norm(st.ops, GridFunction(u + uk, dirichlet=True), p),
            )
            for uk in found
        ]
        if any(d < sep for d in dists):
            continue
        found.append(u)
        reports.append(
            SolveReport(
                solution=GridFunction(u, dirichlet=True),
                energy_value=E,
                residual=res,
                iterations=iters,
                converged=True,
                method="multiplicity",
                seed=seed,
                eps_reg_used=st.eps_reg,
                trivial=False,
            )
        )

    m = len(found)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                dist[i, j] = alpha_norm(
                    st.ops, GridFunction(found[i] - found[j], dirichlet=True), p
                )
    return MultiplicityReport(
        pairs=reports,
        pairwise_distances=dist,
        converged_count=m,
        separation=sep,
        seed=seed,
    )


def regularity_check(st: ProblemState, u: GridFunction) -> RegularityResult:
    """Constancy of the right (1-alpha)-integral of the flux plus the
    running integral of f along a critical point.

    For 0 < alpha < 1/p a discrete weak solution satisfies, up to
    discretization error,

        I_right^(1-alpha)[ |D u|^(p-2) D u ](t) + int_0^t f(s, u(s)) ds = const,

    which is the almost-everywhere form of the boundary value problem.
    The returned deviation certifies the identity when it is small against
    |constant_estimate|; for non-critical u it is large.
    """
    a = st.params.alpha
    p = st.params.p
    if not a < 1.0 / p:
        raise ValueError(
            f"regularity_check requires alpha < 1/p, got alpha={a}, p={p}"
        )
    v = st.require_dirichlet(u)
    n = st.grid.n
    h = st.grid.h
    order = 1.0 - a
    gi = gl_weights(-order, n) * h**order
    left_tf = toeplitz(gi, np.zeros(n + 1))
    flux = phi(st.ops.left_deriv @ v, p)
    f = st.spec.f_values(st.grid.nodes, v)
    cumf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * h)])
    g_right = left_tf.T @ flux + cumf
    g_left = left_tf @ flux + cumf

    i0 = max(1, int(math.ceil(n / 10)))
    i1 = min(n - 1, int(math.floor(9 * n / 10)))
    central = g_right[i0 : i1 + 1]
    c = float(np.mean(central))
    dev = float(np.max(np.abs(central - c)))
    dev_full = float(np.max(np.abs(g_right[1:n] - c)))
    c_left = float(np.mean(g_left[i0 : i1 + 1]))
    dev_left = float(np.max(np.abs(g_left[i0 : i1 + 1] - c_left)))
    return RegularityResult(
        constant_estimate=c,
        deviation=dev,
        deviation_full_interior=dev_full,
        deviation_left_variant=dev_left,
    )
