"""Ground-truth generator for panels with a known stability space.

A latent stationary VAR(1) ``Z`` is built from an orthogonal split
``[beta, beta_perp]`` of R^m; its image on ``beta_perp`` is cumulated to
produce the stochastic trends, its image on ``beta`` stays stationary.

All randomness flows from one integer seed through ``numpy.random.SeedSequence``
keys: ``(seed, 0, k)`` for the fixed design parameters and ``(seed, 1, rep)``
for the innovations of replicate ``rep``. Replicates are therefore
independent of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Panel
from .errors import DataError, DegreesOfFreedomTooSmall, OverlappingIndexSets

__all__ = [
    "GroundTruth",
    "LatentPaths",
    "SimulationSpec",
    "assemble_scenario1",
    "assemble_scenario2",
    "case_index_sets",
    "draw_ar_coefficients",
    "random_orthogonal_basis",
    "random_spd_covariance",
    "scaled_t_innovations",
    "simulate",
    "simulate_latent",
]

_PARAM_STREAM = 0
_INNOVATION_STREAM = 1
_BASIS, _SIGMA, _STABLE_AR, _TREND_AR = range(4)


def _rng(seed, *key) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


@dataclass(frozen=True)
class GroundTruth:
    beta: np.ndarray
    beta_perp: np.ndarray
    spec: "SimulationSpec | None" = field(default=None, repr=False, compare=False)

    @property
    def r(self) -> int:
        return self.beta.shape[1]

    def to_dict(self) -> dict:
        out = {"beta": self.beta.tolist(), "beta_perp": self.beta_perp.tolist()}
        if self.spec is not None:
            out["spec"] = self.spec.to_dict()
        return out


def _haar_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((m, m)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def random_orthogonal_basis(m: int, r: int, seed=0) -> GroundTruth:
    """QR of an m x m Gaussian draw: first r columns beta, the rest beta_perp."""
    if not 1 <= r <= m:
        raise DataError(f"need 1 <= r <= m, got r={r}, m={m}")
    Q = _haar_orthogonal(m, _rng(seed))
    return GroundTruth(beta=Q[:, :r].copy(), beta_perp=Q[:, r:].copy())


def random_spd_covariance(m: int, seed=0) -> np.ndarray:
    """``Q diag(d) Q'`` with Q Haar-orthogonal and d ~ U[0.5, 2]."""
    if m < 1:
        raise DataError("m must be >= 1")
    rng = _rng(seed)
    Q = _haar_orthogonal(m, rng)
    d = rng.uniform(0.5, 2.0, size=m)
    S = (Q * d) @ Q.T
    return (S + S.T) / 2.0


def draw_ar_coefficients(n: int, seed=0, low=0.3, high=0.9) -> np.ndarray:
    """Magnitudes uniform on [low, high] with independent random signs."""
    rng = _rng(seed)
    mag = rng.uniform(low, high, size=n)
    return mag * rng.choice([-1.0, 1.0], size=n)


def scaled_t_innovations(T: int, sigma, df: float = 3.0, seed=0) -> np.ndarray:
    """Multivariate Student-t rows with population covariance ``sigma``."""
    if df <= 2:
        raise DegreesOfFreedomTooSmall(f"df must exceed 2 for finite variance, got {df}")
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    L = np.linalg.cholesky(sigma)
    rng = _rng(seed)
    z = rng.standard_normal((T, sigma.shape[0]))
    w = rng.chisquare(df, size=T) / df
    return np.sqrt((df - 2.0) / df) * (z @ L.T) / np.sqrt(w)[:, None]


def case_index_sets(m: int, n_m1: int, n_m2: int = 0):
    """Ordered index sets: M1 = first n_m1 coordinates, M2 = the next n_m2 (0-based)."""
    if n_m1 < 0 or n_m2 < 0 or n_m1 + n_m2 > m:
        raise DataError(f"|M1|={n_m1}, |M2|={n_m2} do not fit in m={m}")
    return tuple(range(n_m1)), tuple(range(n_m1, n_m1 + n_m2))


@dataclass(frozen=True)
class SimulationSpec:
    """Full parameterisation of the generator.

    ``stable_ar`` (length r) multiplies the beta block, ``trend_ar`` (length
    m - r) the beta_perp block. ``M1``/``M2`` are 0-based coordinate indices
    and only matter for scenario 2.
    """

    m: int
    r: int
    T: int
    truth: GroundTruth
    sigma: np.ndarray
    stable_ar: np.ndarray
    trend_ar: np.ndarray
    scenario: int = 1
    M1: tuple[int, ...] = ()
    M2: tuple[int, ...] = ()
    df: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r <= self.m:
            raise DataError(f"need 1 <= r <= m, got r={self.r}, m={self.m}")
        if self.T < 2:
            raise DataError("T must be >= 2")
        if self.scenario not in (1, 2):
            raise DataError("scenario must be 1 or 2")
        a = np.asarray(self.stable_ar, dtype=float)
        g = np.asarray(self.trend_ar, dtype=float)
        if a.shape != (self.r,) or g.shape != (self.m - self.r,):
            raise DataError("AR coefficient lengths must be r and m - r")
        if np.any(np.abs(a) >= 1) or np.any(np.abs(g) >= 1):
            raise DataError("AR coefficients must lie strictly inside (-1, 1)")
        S = np.asarray(self.sigma, dtype=float)
        if S.shape != (self.m, self.m) or not np.allclose(S, S.T):
            raise DataError("sigma must be a symmetric m x m matrix")
        if np.linalg.eigvalsh(S).min() <= 0:
            raise DataError("sigma must be positive definite")
        M1, M2 = tuple(int(i) for i in self.M1), tuple(int(i) for i in self.M2)
        if set(M1) & set(M2):
            raise OverlappingIndexSets(f"M1 and M2 share {sorted(set(M1) & set(M2))}")
        if any(not 0 <= i < self.m for i in M1 + M2):
            raise DataError("index sets must lie in 0..m-1")
        object.__setattr__(self, "M1", M1)
        object.__setattr__(self, "M2", M2)
        object.__setattr__(self, "stable_ar", a)
        object.__setattr__(self, "trend_ar", g)
        object.__setattr__(self, "sigma", S)
        if self.truth.spec is None:
            object.__setattr__(
                self, "truth", GroundTruth(self.truth.beta, self.truth.beta_perp, self)
            )

    @classmethod
    def draw(
        cls,
        m: int,
        r: int,
        T: int,
        scenario: int = 1,
        M1=(),
        M2=(),
        seed: int = 0,
        df: float = 3.0,
    ) -> "SimulationSpec":
        """Draw beta, sigma and AR coefficients from ``seed``."""
        if set(M1) & set(M2):
            raise OverlappingIndexSets(f"M1 and M2 share {sorted(set(M1) & set(M2))}")
        truth = random_orthogonal_basis(m, r, _rng(seed, _PARAM_STREAM, _BASIS))
        return cls(
            m=m,
            r=r,
            T=T,
            truth=truth,
            sigma=random_spd_covariance(m, _rng(seed, _PARAM_STREAM, _SIGMA)),
            stable_ar=draw_ar_coefficients(r, _rng(seed, _PARAM_STREAM, _STABLE_AR)),
            trend_ar=draw_ar_coefficients(m - r, _rng(seed, _PARAM_STREAM, _TREND_AR)),
            scenario=scenario,
            M1=tuple(M1),
            M2=tuple(M2),
            df=df,
            seed=seed,
        )

    def with_T(self, T: int) -> "SimulationSpec":
        return SimulationSpec(
            self.m, self.r, T, GroundTruth(self.truth.beta, self.truth.beta_perp),
            self.sigma, self.stable_ar, self.trend_ar, self.scenario,
            self.M1, self.M2, self.df, self.seed,
        )

    def transition_matrix(self) -> np.ndarray:
        b, bp = self.truth.beta, self.truth.beta_perp
        return (bp * self.trend_ar) @ bp.T + (b * self.stable_ar) @ b.T

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "T": self.T,
            "scenario": self.scenario,
            "M1": list(self.M1),
            "M2": list(self.M2),
            "stable_ar": self.stable_ar.tolist(),
            "trend_ar": self.trend_ar.tolist(),
            "sigma": self.sigma.tolist(),
            "df": self.df,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LatentPaths:
    """Latent paths indexed n = 0..T (row 0 is the zero initial state).

    ``ZN`` and ``ZS`` are the images of ``Z`` on Col(beta_perp) and Col(beta);
    ``Z = ZN + ZS``.
    """

    Z: np.ndarray
    ZN: np.ndarray
    ZS: np.ndarray


def simulate_latent(spec: SimulationSpec, innovations=None, replicate: int = 0) -> LatentPaths:
    """Run ``Z_{n+1} = Phi Z_n + eps_{n+1}`` from ``Z_0 = 0`` for n = 0..T-1."""
    if innovations is None:
        innovations = scaled_t_innovations(
            spec.T, spec.sigma, spec.df, _rng(spec.seed, _INNOVATION_STREAM, replicate)
        )
    eps = np.asarray(innovations, dtype=float)
    if eps.shape != (spec.T, spec.m):
        raise DataError(f"innovations must be {spec.T}x{spec.m}")
    phi = spec.transition_matrix()
    Z = np.zeros((spec.T + 1, spec.m))
    for n in range(spec.T):
        Z[n + 1] = phi @ Z[n] + eps[n]
    b, bp = spec.truth.beta, spec.truth.beta_perp
    ZS = (Z @ b) @ b.T
    ZN = (Z @ bp) @ bp.T
    return LatentPaths(Z=Z, ZN=ZN, ZS=ZS)


def assemble_scenario1(ZN, ZS) -> np.ndarray:
    """``X_n = sum_{k<=n} ZN_k + ZS_n`` for n = 0..T (row 0 included)."""
    return np.cumsum(ZN, axis=0) + ZS


def assemble_scenario2(Z, ZN, ZS, M1=(), M2=()) -> np.ndarray:
    """Single cumulation on M1, double cumulation on M2, raw Z elsewhere."""
    M1, M2 = tuple(M1), tuple(M2)
    if set(M1) & set(M2):
        raise OverlappingIndexSets(f"M1 and M2 share {sorted(set(M1) & set(M2))}")
    X = np.array(Z, dtype=float)
    if M1:
        idx = list(M1)
        X[:, idx] = np.cumsum(ZN[:, idx], axis=0) + ZS[:, idx]
    if M2:
        idx = list(M2)
        X[:, idx] = np.cumsum(np.cumsum(ZN[:, idx], axis=0), axis=0) + ZS[:, idx]
    return X


def simulate(spec: SimulationSpec, replicate: int = 0) -> tuple[Panel, GroundTruth]:
    """One replicate: the T x m panel (rows n = 1..T) and its ground truth."""
    paths = simulate_latent(spec, replicate=replicate)
    if spec.scenario == 1:
        X = assemble_scenario1(paths.ZN, paths.ZS)
    else:
        X = assemble_scenario2(paths.Z, paths.ZN, paths.ZS, spec.M1, spec.M2)
    return Panel.from_array(X[1:]), spec.truth
