"""Star-shaped distributions with sign symmetry or skew.

A gauge rho (positively homogeneous, even) cuts R^p \\ {0} into proportional
copies of the set Z~ = {rho = 1}; folding by a sign rule halves it to Z, and
every x factors uniquely as x = eps * h * z with eps = +-1, h = rho(x) > 0
and z in Z.  Densities of the form c(eps) f(h) make the three parts
independent: h follows f(h) h^(p-1) / c0, eps is +1 with probability c/2,
and the law of z does not depend on f at all.  Sampling exploits exactly
that factorization.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import dblquad, quad

__all__ = ["Gauge", "SignRule", "StarShapedModel", "StarSample",
           "RejectionRateError"]

_GRID_RESOLUTION = 10_000  # sphere grid for custom-gauge bounds, p <= 3


class RejectionRateError(RuntimeError):
    """Direction sampling acceptance fell below the workable threshold."""

    def __init__(self, rate: float, threshold: float):
        super().__init__(
            f"rejection sampler acceptance rate {rate:.2e} is below "
            f"{threshold:.0e}; the gauge is too eccentric"
        )
        self.rate = rate


class Gauge:
    """A positively homogeneous, even level function on R^p \\ {0}.

    Use the constructors: :meth:`l2`, :meth:`lq`, :meth:`ellipsoid`,
    :meth:`custom`.  ``bounds`` are the extrema of the gauge over the unit
    sphere (closed form for the built-in kinds, deterministic grid search
    for custom ones).
    """

    def __init__(self, p, kind, evaluate, gradient, bounds):
        if p < 1:
            raise ValueError("dimension must be >= 1")
        self.p = int(p)
        self.kind = kind
        self._evaluate = evaluate
        self._gradient = gradient
        self.rho_min, self.rho_max = bounds
        if not (0 < self.rho_min <= self.rho_max < math.inf):
            raise ValueError(f"bad gauge bounds {bounds}")

    @classmethod
    def l2(cls, p: int) -> "Gauge":
        return cls(
            p,
            "l2",
            lambda x: np.sqrt(np.sum(np.square(x), axis=-1)),
            lambda z: np.asarray(z, dtype=float)
            / np.linalg.norm(np.asarray(z, dtype=float)),
            (1.0, 1.0),
        )

    @classmethod
    def lq(cls, p: int, q: float) -> "Gauge":
        if q <= 0:
            raise ValueError("q must be positive")

        def evaluate(x):
            return np.sum(np.abs(x) ** q, axis=-1) ** (1.0 / q)

        def gradient(z):
            if q < 1:
                raise ValueError(
                    "lq gauge with q < 1 is not differentiable; "
                    "surface densities are disabled"
                )
            z = np.asarray(z, dtype=float)
            if q == 1.0 and np.any(np.abs(z) < 1e-12):
                raise ValueError("l1 gauge has a kink where a coordinate vanishes")
            r = evaluate(z)
            return np.sign(z) * np.abs(z) ** (q - 1.0) * r ** (1.0 - q)

        # extrema of |.|_q over the euclidean unit sphere
        spread = p ** (1.0 / q - 0.5)
        bounds = (min(1.0, spread), max(1.0, spread))
        return cls(p, f"lq:{q}", evaluate, gradient, bounds)

    @classmethod
    def ellipsoid(cls, A: np.ndarray) -> "Gauge":
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("A must be a square matrix")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("A must be symmetric")
        evals = np.linalg.eigvalsh(A)
        if evals[0] <= 0:
            raise ValueError("A must be positive definite")
        p = A.shape[0]

        def evaluate(x):
            return np.sqrt(np.einsum("...i,ij,...j->...", x, A, x))

        def gradient(z):
            z = np.asarray(z, dtype=float)
            return (A @ z) / evaluate(z)

        return cls(p, "ellipsoid", evaluate, gradient,
                   (math.sqrt(evals[0]), math.sqrt(evals[-1])))

    @classmethod
    def custom(
        cls,
        p: int,
        fn: Callable[[np.ndarray], np.ndarray],
        bounds: tuple[float, float] | None = None,
        gradient: Callable[[np.ndarray], np.ndarray] | None = None,
    ) -> "Gauge":
        """Wrap a user gauge; fn must broadcast over the last axis.

        Without explicit bounds, the sphere extrema are found on a
        deterministic grid (p <= 3) followed by coordinate-wise refinement;
        supply bounds yourself for p > 3.
        """
        if bounds is None:
            if p > 3:
                raise ValueError("custom gauges with p > 3 need explicit bounds")
            bounds = _grid_bounds(p, fn)
        if gradient is None:
            gradient = _central_difference_grad(fn)
        return cls(p, "custom", fn, gradient, bounds)

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        val = self._evaluate(x)
        if not np.all(np.isfinite(val)):
            raise ValueError("gauge evaluated to a non-finite value")
        return val

    def gradient(self, z) -> np.ndarray:
        g = np.asarray(self._gradient(np.asarray(z, dtype=float)), dtype=float)
        if not np.all(np.isfinite(g)):
            raise ValueError("gauge gradient is non-finite")
        return g


def _central_difference_grad(fn, step: float = 1e-6):
    def gradient(z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        for i in range(z.shape[-1]):
            e = np.zeros_like(z)
            e[..., i] = step
            out[..., i] = (fn(z + e) - fn(z - e)) / (2.0 * step)
        return out

    return gradient


def _sphere_grid(p: int, n: int) -> np.ndarray:
    if p == 1:
        return np.array([[1.0], [-1.0]])
    if p == 2:
        theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # Fibonacci sphere, deterministic
    k = np.arange(n, dtype=float)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    zc = 1.0 - 2.0 * (k + 0.5) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - zc * zc))
    return np.stack([r * np.cos(phi), r * np.sin(phi), zc], axis=1)


def _grid_bounds(p: int, fn) -> tuple[float, float]:
    grid = _sphere_grid(p, _GRID_RESOLUTION)
    vals = np.asarray(fn(grid), dtype=float)
    lo_pt = grid[int(np.argmin(vals))]
    hi_pt = grid[int(np.argmax(vals))]

    def refine(point, sign):
        x = point.copy()
        best = float(fn(x))
        step = 0.1
        while step > 1e-7:
            improved = False
            for i in range(p):
                for delta in (step, -step):
                    cand = x.copy()
                    cand[i] += delta
                    nrm = np.linalg.norm(cand)
                    if nrm == 0:
                        continue
                    cand /= nrm
                    val = float(fn(cand))
                    if sign * val < sign * best:
                        x, best, improved = cand, val, True
            if not improved:
                step /= 2.0
        return best

    lo = refine(lo_pt, +1)
    hi = refine(hi_pt, -1)
    if lo <= 0:
        raise ValueError("gauge must be positive on the unit sphere")
    return lo, hi


class SignRule:
    """An antisymmetric, positive-scale-invariant sign on R^p \\ {0}.

    The default picks the sign of the last nonzero coordinate, which is the
    recursive hemisphere construction: Z is the upper hemisphere, glued to
    the lower-dimensional rule on the equator.
    """

    def __init__(self, p: int, fn: Callable[[np.ndarray], np.ndarray] | None = None):
        self.p = int(p)
        self._fn = fn

    def __call__(self, x) -> np.ndarray | int:
        x = np.asarray(x, dtype=float)
        if self._fn is not None:
            return self._fn(x)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        nonzero = pts != 0.0
        if np.any(~nonzero.any(axis=1)):
            raise ValueError("sign rule is undefined at the origin")
        last = pts.shape[1] - 1 - np.argmax(nonzero[:, ::-1], axis=1)
        signs = np.sign(pts[np.arange(pts.shape[0]), last]).astype(int)
        return int(signs[0]) if single else signs


_RADIAL_BUILTINS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gaussian": lambda h: np.exp(-0.5 * np.square(h)),
    "exponential": lambda h: np.exp(-h),
}


class StarSample(NamedTuple):
    x: np.ndarray
    eps: np.ndarray
    h: np.ndarray
    z: np.ndarray
    acceptance_rate: float


class StarShapedModel:
    """Density c(eps(x)) f(rho(x)), kept in unnormalized form.

    c in [0, 2] skews the two sign classes: c(+1) = c, c(-1) = 2 - c, so
    c = 1 is the symmetric case.  The radial normalizer
    c0 = integral f(h) h^(p-1) dh is computed by quadrature at construction
    and a tabulated CDF backs exact inverse sampling of h.
    """

    CDF_CELLS = 2048
    _GL_ORDER = 16

    def __init__(
        self,
        gauge: Gauge,
        radial: str | Callable[[np.ndarray], np.ndarray] = "gaussian",
        c: float = 1.0,
        sign_rule: SignRule | None = None,
    ):
        if not 0.0 <= c <= 2.0:
            raise ValueError(f"skew constant c must lie in [0, 2], got {c}")
        self.gauge = gauge
        self.p = gauge.p
        self.c = float(c)
        self.sign_rule = sign_rule or SignRule(gauge.p)
        if callable(radial):
            self.radial_name = "custom"
            self._f = radial
        else:
            try:
                self._f = _RADIAL_BUILTINS[radial]
            except KeyError:
                raise ValueError(
                    f"unknown radial {radial!r}; choose from "
                    f"{sorted(_RADIAL_BUILTINS)} or pass a callable"
                ) from None
            self.radial_name = radial
        self._init_radial()

    # -- radial law -----------------------------------------------------------

    def _init_radial(self) -> None:
        p = self.p
        pdf = lambda h: self._f(h) * h ** (p - 1)
        c0, err = quad(pdf, 0.0, np.inf, limit=200)
        if not math.isfinite(c0) or c0 <= 0.0:
            raise ValueError(
                "radial density is not integrable against h^(p-1)"
            )
        if err > 1e-8 * c0:
            raise ValueError("radial normalizer quadrature did not converge")
        self.c0 = float(c0)
        h_max = 1.0
        while quad(pdf, h_max, np.inf, limit=200)[0] > 1e-13 * c0:
            h_max *= 2.0
            if h_max > 1e12:
                raise ValueError("radial density tail decays too slowly")
        self._h_max = h_max
        nodes, weights = leggauss(self._GL_ORDER)
        self._gl_nodes = nodes
        self._gl_weights = weights
        grid = np.linspace(0.0, h_max, self.CDF_CELLS + 1)
        mids = 0.5 * (grid[1:] + grid[:-1])
        half = 0.5 * (grid[1:] - grid[:-1])
        evals = pdf(mids[:, None] + half[:, None] * nodes[None, :])
        cells = (evals * weights[None, :]).sum(axis=1) * half
        cum = np.concatenate([[0.0], np.cumsum(cells)])
        self._grid = grid
        self._cdf_total = float(cum[-1])  # equals c0 up to the 1e-13 tail
        self._cum = cum / cum[-1]

    def marginal_h_pdf(self, h) -> np.ndarray | float:
        """(1/c0) f(h) h^(p-1); the exact law of the scale part."""
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0.0):
            raise ValueError("h must be positive")
        out = self._f(h) * h ** (self.p - 1) / self.c0
        return float(out) if out.ndim == 0 else out

    def marginal_h_cdf(self, h) -> np.ndarray | float:
        h = np.asarray(h, dtype=float)
        if np.any(h < 0.0):
            raise ValueError("h must be nonnegative")
        single = h.ndim == 0
        hv = np.minimum(np.atleast_1d(h), self._h_max)
        idx = np.minimum(
            np.searchsorted(self._grid, hv, side="right") - 1, self.CDF_CELLS - 1
        )
        lo = self._grid[idx]
        out = self._cum[idx] + self._partial_integral(lo, hv)
        out = np.clip(out, 0.0, 1.0)
        return float(out[0]) if single else out

    def _partial_integral(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Gauss-Legendre integral of the normalized pdf over [lo, hi]."""
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = mid[:, None] + half[:, None] * self._gl_nodes[None, :]
        vals = self._f(pts) * pts ** (self.p - 1)
        return (vals * self._gl_weights[None, :]).sum(axis=1) * half / self._cdf_total

    def _sample_h(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Inverse CDF through the table plus in-cell bisection (tol 1e-10)."""
        u = rng.random(n)
        idx = np.minimum(
            np.searchsorted(self._cum, u, side="right") - 1, self.CDF_CELLS - 1
        )
        idx = np.maximum(idx, 0)
        lo = self._grid[idx].copy()
        hi = self._grid[idx + 1].copy()
        base = self._cum[idx]
        cell_lo = self._grid[idx]
        while float(np.max(hi - lo)) > 1e-10:
            mid = 0.5 * (lo + hi)
            cmid = base + self._partial_integral(cell_lo, mid)
            above = cmid >= u
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return 0.5 * (lo + hi)

    # -- decomposition and densities -------------------------------------------

    def decompose(self, x) -> tuple:
        """x = eps * h * z with rho(z) = 1 and sign(z) = +1."""
        x = np.asarray(x, dtype=float)
        if np.any(np.all(x == 0.0, axis=-1)):
            raise ValueError("cannot decompose the origin")
        h = self.gauge(x)
        eps = self.sign_rule(x)
        z = x / (np.asarray(eps, dtype=float)[..., None] * np.asarray(h)[..., None]
                 if x.ndim > 1 else (eps * h))
        return eps, (float(h) if x.ndim == 1 else h), z

    def density(self, x) -> np.ndarray | float:
        """c(eps(x)) f(rho(x)), the unnormalized sample-space density."""
        x = np.asarray(x, dtype=float)
        eps, h, _ = self.decompose(x)
        skew = np.where(np.asarray(eps) == 1, self.c, 2.0 - self.c)
        out = skew * self._f(np.asarray(h))
        return float(out) if x.ndim == 1 else out

    def nu_density(self, z) -> float:
        """Surface density 2 c0 <z, n_z> of the cross-section law at z."""
        z = np.asarray(z, dtype=float)
        if z.ndim != 1:
            raise ValueError("nu_density takes a single point")
        if abs(float(self.gauge(z)) - 1.0) > 1e-8:
            raise ValueError("z is not on the cross section (rho(z) != 1)")
        g = self.gauge.gradient(z)
        n_z = g / np.linalg.norm(g)
        return 2.0 * self.c0 * float(np.dot(z, n_z))

    # -- sampling ----------------------------------------------------------------

    MIN_ACCEPT_RATE = 1e-4

    def _sample_directions(self, rng: np.random.Generator, n: int) -> tuple:
        """Exact cross-section law by rejection from the uniform sphere.

        A uniform direction u is accepted with probability
        (rho_min / rho(u))^p, which tilts the sphere law to rho(u)^-p, the
        exact angular marginal of any star-shaped density; z = u / rho(u)
        folded to positive sign.
        """
        p = self.p
        out = np.empty((n, p))
        got = 0
        proposed = 0
        rate_est = max(self.MIN_ACCEPT_RATE, (self.gauge.rho_min / self.gauge.rho_max) ** p)
        while got < n:
            batch = min(max(1000, int((n - got) / rate_est * 1.2)), 200_000)
            g = rng.standard_normal((batch, p))
            norms = np.linalg.norm(g, axis=1)
            ok = norms > 0
            u = g[ok] / norms[ok, None]
            rho_u = np.atleast_1d(self.gauge(u))
            accept_p = (self.gauge.rho_min / rho_u) ** p
            accepted = rng.random(len(u)) < accept_p
            proposed += batch
            pts = u[accepted]
            take = min(n - got, len(pts))
            out[got : got + take] = pts[:take]
            got += take
            if got:
                rate_est = max(self.MIN_ACCEPT_RATE, got / proposed)
            if proposed >= 20_000 and got / proposed < self.MIN_ACCEPT_RATE:
                raise RejectionRateError(got / proposed, self.MIN_ACCEPT_RATE)
        rate = got / proposed if proposed else 1.0
        z = out / np.atleast_1d(self.gauge(out))[:, None]
        signs = self.sign_rule(z)
        z = z * np.asarray(signs, dtype=float)[:, None]
        return z, rate

    def sample_parts(self, rng: np.random.Generator, n: int) -> StarSample:
        """Draw the three parts independently and recompose x = eps h z.

        RNG consumption order is fixed (h block, eps block, z batches) so a
        seeded generator reproduces identical output.
        """
        h = self._sample_h(rng, n)
        eps = np.where(rng.random(n) < self.c / 2.0, 1, -1)
        z, rate = self._sample_directions(rng, n)
        x = eps[:, None] * h[:, None] * z
        return StarSample(x=x, eps=eps, h=h, z=z, acceptance_rate=rate)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.sample_parts(rng, n).x

    # -- diagnostics ---------------------------------------------------------------

    def normalizing_constant(self) -> dict:
        """Lebesgue normalizer report: total mass = 2 c0 * surface factor.

        The sphere integral of rho^-p is evaluated by quadrature (p <= 3).
        """
        p = self.p
        if p == 1:
            sphere = float(2.0 / self.gauge(np.array([1.0])))
        elif p == 2:
            sphere, _ = quad(
                lambda t: float(
                    self.gauge(np.array([math.cos(t), math.sin(t)]))
                )
                ** (-2),
                0.0,
                2.0 * math.pi,
                limit=200,
            )
        elif p == 3:
            sphere, _ = dblquad(
                lambda phi, th: math.sin(th)
                * float(
                    self.gauge(
                        np.array(
                            [
                                math.sin(th) * math.cos(phi),
                                math.sin(th) * math.sin(phi),
                                math.cos(th),
                            ]
                        )
                    )
                )
                ** (-3),
                0.0,
                math.pi,
                0.0,
                2.0 * math.pi,
            )
        else:
            raise NotImplementedError(
                "normalizing-constant quadrature is implemented for p <= 3"
            )
        return {
            "c0": self.c0,
            "sphere_integral": float(sphere),
            "surface_factor": float(sphere) / 2.0,
            "total_mass": self.c0 * float(sphere),
        }
