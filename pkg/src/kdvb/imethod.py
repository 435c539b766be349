"""Multiplier calculus on zero-sum frequency hyperplanes.

The low-frequency smoothing weight m equals 1 below the cutoff N and
(|xi|/N)^s above it; I is the Fourier multiplier operator with symbol m.
On the hyperplane xi_1 + ... + xi_k = 0 the cubic resonance function is
h_k = i (xi_1^3 + ... + xi_k^3) and the dissipation symbol is
beta_{alpha,k} = sum |xi_j|^(2 alpha).  The correction multipliers

    M3 = i (m^2(xi_1) xi_1 + m^2(xi_2) xi_2 + m^2(xi_3) xi_3)
    sigma3 = -M3 / (h3 - eps beta_3)          (sigma3^- flips the eps sign)
    M4 = -(3i/2) [sigma3(xi_1, xi_2, xi_3 + xi_4) (xi_3 + xi_4)]_sym
    sigma4 = -M4 / (h4 - eps beta_4)
    M5 = -2i [sigma4(xi_1, xi_2, xi_3, xi_4 + xi_5) (xi_4 + xi_5)]_sym

define the corrected energies E_I^3 = E_I^2 + Lambda_3(sigma3) and
E_I^4 = E_I^3 + Lambda_4(sigma4), where Lambda_k is the k-linear
hyperplane functional.  Symmetrization [.]_sym averages over the full
permutation group, so the six distinct pairings in M4 (ten in M5) each
carry weight 1/6 (1/10).

Lattice normalization: Lambda_k carries the prefactor L^(1 - k/2), which
makes Lambda_2 with unit multiplier equal the squared L2 norm and makes
the quadratic ledger identity

    d/dt ||I u||^2 = -eps Lambda_2(m(xi_1) m(xi_2) beta_{alpha,2})
                     + (2/3) Lambda_3(M3)

hold exactly for the dealiased discrete flow of u_t + u_xxx
+ eps |d_x|^(2a) u + (u^2)_x = 0.  (The quadratic nonlinearity carries
twice the flux of u u_x; with M3 as above the net constant is 2/3.)

Resonance-function evaluation uses the factored on-hyperplane forms
3i xi_1 xi_2 xi_3 and 3i (xi_1+xi_2)(xi_1+xi_3)(xi_1+xi_4), which are
free of the catastrophic cancellation the raw cube sums suffer when the
frequencies are widely separated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ContractViolationError,
    ParameterError,
    ResonantDenominatorError,
)
from .evolve import Trajectory
from .propagator import ModelParams
from .spectral import SpectralField

_TINY = 1e-30


@dataclass(frozen=True)
class IMultiplierSpec:
    """Cutoff N and exponent s of the smoothing weight m(xi) = min(1, (|xi|/N)^s)."""

    cutoff_n: float
    s_exp: float

    def __post_init__(self):
        if not self.cutoff_n > 0:
            raise ParameterError(f"cutoff_n must be positive, got {self.cutoff_n}")
        if not -0.75 <= self.s_exp <= 0:
            raise ParameterError(f"s_exp must lie in [-3/4, 0], got {self.s_exp}")


@dataclass(frozen=True)
class HyperplaneTuple:
    """A k-tuple of real frequencies constrained to sum to zero, k in 2..5."""

    xis: tuple[float, ...]

    def __post_init__(self):
        xis = tuple(float(x) for x in self.xis)
        object.__setattr__(self, "xis", xis)
        k = len(xis)
        if not 2 <= k <= 5:
            raise ContractViolationError(f"tuple length must be 2..5, got {k}")
        scale = max((abs(x) for x in xis), default=0.0)
        if abs(sum(xis)) > 1e-9 * max(scale, _TINY):
            raise ContractViolationError(
                f"frequencies must sum to zero, got sum {sum(xis):.3e}"
            )

    @property
    def k(self) -> int:
        return len(self.xis)


@dataclass(frozen=True)
class DyadicConfig:
    """Dyadic annuli for the pointwise-bound sampler.

    Magnitudes are N_i = ratios[i] * N1 with 1 = ratios[0] >= ... and
    |xi_i| drawn uniformly from [N_i, 2 N_i] with random signs; N1 runs
    over n1_ladder.  ratios[1] >= 1/4 keeps the top two comparable, and
    the ratio sum >= 1/2 keeps the zero-sum constraint realizable.
    """

    n1_ladder: tuple[float, ...]
    ratios: tuple[float, float, float] = (1.0, 0.5, 0.25)
    seed: int = 0

    def __post_init__(self):
        ladder = tuple(float(n) for n in self.n1_ladder)
        object.__setattr__(self, "n1_ladder", ladder)
        if len(ladder) < 2 or any(n <= 0 for n in ladder):
            raise ParameterError("n1_ladder needs at least two positive entries")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ParameterError("n1_ladder must be strictly increasing")
        r2, r3, r4 = self.ratios
        if not (1.0 >= r2 >= r3 >= r4 > 0):
            raise ParameterError(f"ratios must be nonincreasing in (0, 1], got {self.ratios}")
        if r2 < 0.25:
            raise ParameterError("ratios[0] < 1/4 breaks the comparable-top-pair constraint")
        if r2 + r3 + r4 < 0.5:
            raise ParameterError(
                "ratio sum < 1/2 makes the zero-sum constraint unrealizable"
            )

    def describe(self) -> str:
        return (
            f"N1 in {list(self.n1_ladder)}, (N2,N3,N4) = N1 * {list(self.ratios)}"
        )


@dataclass(frozen=True)
class BoundReport:
    """Sampled verification record for a pointwise multiplier bound."""

    dyadic_config: str
    samples: int
    max_ratio: float
    slope_vs_logn: float
    n1_ladder: tuple[float, ...]
    max_ratios: tuple[float, ...]
    seed: int

    def __post_init__(self):
        if self.samples < 10_000:
            raise ParameterError(
                f"bound reports need >= 1e4 samples per ladder point, got {self.samples}"
            )
        if not np.isfinite(self.max_ratio):
            raise ContractViolationError("max_ratio must be finite")

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.dyadic_config,
                "N_ladder": list(self.n1_ladder),
                "max_ratios": list(self.max_ratios),
                "slope": self.slope_vs_logn,
                "seed": self.seed,
                "samples": self.samples,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# Vectorized kernels (arrays of hyperplane tuples, one frequency per slot)
# ---------------------------------------------------------------------------


def m_weight_array(xi: np.ndarray, spec: IMultiplierSpec) -> np.ndarray:
    ratio = np.maximum(np.abs(np.asarray(xi, dtype=np.float64)) / spec.cutoff_n, 1.0)
    return ratio**spec.s_exp


def _msq(xi, spec):
    return m_weight_array(xi, spec) ** 2


def _m3_values(x1, x2, x3, spec):
    return 1j * (_msq(x1, spec) * x1 + _msq(x2, spec) * x2 + _msq(x3, spec) * x3)


def _guarded_quotient(num, den):
    """-num/den with 0/0 mapped to 0; returns (values, resonant_mask)."""
    den = np.asarray(den)
    num = np.asarray(num)
    small = np.abs(den) <= _TINY
    safe = np.where(small, 1.0, den)
    values = np.where(small, 0.0, -num / safe)
    resonant = small & (np.abs(num) > _TINY)
    return values, resonant


def _sigma3_values(x1, x2, x3, spec, params, sign="+"):
    """sigma3 (sign '+') or sigma3^- (sign '-') on hyperplane arrays."""
    h3 = 3j * np.asarray(x1) * np.asarray(x2) * np.asarray(x3)
    beta = (
        np.abs(x1) ** (2 * params.alpha)
        + np.abs(x2) ** (2 * params.alpha)
        + np.abs(x3) ** (2 * params.alpha)
    )
    eps_term = params.epsilon * beta
    den = h3 - eps_term if sign == "+" else h3 + eps_term
    return _guarded_quotient(_m3_values(x1, x2, x3, spec), den)


_M4_PAIRINGS = (
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
    ((1, 2), (0, 3)),
    ((1, 3), (0, 2)),
    ((2, 3), (0, 1)),
)


def _m4_values(xs, spec, params):
    """M4 on hyperplane arrays; xs is a sequence of four broadcastable arrays."""
    total = 0.0
    resonant = np.zeros(np.broadcast(*xs).shape, dtype=bool)
    for (a, b), (c, d) in _M4_PAIRINGS:
        pair = xs[c] + xs[d]
        vals, res = _sigma3_values(xs[a], xs[b], pair, spec, params)
        total = total + vals * pair
        resonant |= res
    return (-1.5j / 6.0) * total, resonant


def _h4_values(xs):
    return 3j * (xs[0] + xs[1]) * (xs[0] + xs[2]) * (xs[0] + xs[3])


def _beta_values(xs, alpha):
    total = 0.0
    for x in xs:
        total = total + np.abs(x) ** (2 * alpha)
    return total


def _sigma4_values(xs, spec, params):
    num, resonant = _m4_values(xs, spec, params)
    den = _h4_values(xs) - params.epsilon * _beta_values(xs, params.alpha)
    values, res4 = _guarded_quotient(num, den)
    return values, resonant | res4


def _m5_values(xs, spec, params):
    total = 0.0
    resonant = np.zeros(np.broadcast(*xs).shape, dtype=bool)
    idx = range(5)
    for d in idx:
        for e in idx:
            if e <= d:
                continue
            rest = [xs[i] for i in idx if i not in (d, e)]
            pair = xs[d] + xs[e]
            vals, res = _sigma4_values((*rest, pair), spec, params)
            total = total + vals * pair
            resonant |= res
    return (-2j / 10.0) * total, resonant


# ---------------------------------------------------------------------------
# Scalar operations on explicit hyperplane tuples
# ---------------------------------------------------------------------------


def m_weight(xi: float, spec: IMultiplierSpec) -> float:
    """The smoothing weight m(xi): 1 below the cutoff, (|xi|/N)^s above."""
    return float(m_weight_array(np.asarray([xi]), spec)[0])


def resonance_h(t: HyperplaneTuple) -> complex:
    """h_k = i sum xi_j^3; equals 3i xi_1 xi_2 xi_3 (k=3) and
    3i (xi_1+xi_2)(xi_1+xi_3)(xi_1+xi_4) (k=4) on the hyperplane."""
    return complex(1j * sum(x**3 for x in t.xis))


def beta_alpha(t: HyperplaneTuple, alpha: float) -> float:
    """beta_{alpha,k} = sum |xi_j|^(2 alpha)."""
    if not 0 < alpha <= 1:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return float(sum(abs(x) ** (2 * alpha) for x in t.xis))


def _require_k(t: HyperplaneTuple, k: int, op: str) -> None:
    if t.k != k:
        raise ContractViolationError(f"{op} needs a {k}-tuple, got k = {t.k}")


def big_m3(t: HyperplaneTuple, spec: IMultiplierSpec) -> complex:
    """M3 = i sum m^2(xi_j) xi_j, fully permutation-symmetric."""
    _require_k(t, 3, "big_m3")
    return complex(_m3_values(*(np.asarray([x]) for x in t.xis), spec)[0])


def _scalar_from_guarded(values, resonant, op: str) -> complex:
    if bool(resonant.reshape(-1)[0]):
        raise ResonantDenominatorError(f"{op}: resonant denominator on this tuple")
    return complex(values.reshape(-1)[0])


def _check_resonant_set(t: HyperplaneTuple, params: ModelParams, op: str, pairs: bool) -> None:
    """Scalar evaluations reject the resonant zero set outright.

    With eps = 0 the denominators vanish when any frequency (and, for the
    quartic calculus, any pair sum) is zero; with eps > 0 only the
    all-zero tuple is degenerate.
    """
    scale = max(max(abs(x) for x in t.xis), _TINY)
    if params.epsilon == 0:
        if any(abs(x) <= 1e-9 * scale for x in t.xis):
            raise ResonantDenominatorError(
                f"{op}: eps = 0 with a vanishing frequency; exclude the zero set"
            )
        if pairs and any(
            abs(t.xis[i] + t.xis[j]) <= 1e-9 * scale
            for i in range(t.k)
            for j in range(i + 1, t.k)
        ):
            raise ResonantDenominatorError(
                f"{op}: eps = 0 with a vanishing pair sum; exclude the zero set"
            )
    elif all(x == 0 for x in t.xis):
        raise ResonantDenominatorError(f"{op}: all-zero tuple is degenerate")


def sigma3(
    t: HyperplaneTuple,
    spec: IMultiplierSpec,
    params: ModelParams,
    sign: str = "+",
) -> complex:
    """sigma3 = -M3 / (h3 - eps beta_3); sign '-' selects sigma3^- with
    the reflected denominator h3 + eps beta_3."""
    _require_k(t, 3, "sigma3")
    if sign not in ("+", "-"):
        raise ParameterError(f"sign must be '+' or '-', got {sign!r}")
    _check_resonant_set(t, params, "sigma3", pairs=False)
    arrays = tuple(np.asarray([x]) for x in t.xis)
    values, resonant = _sigma3_values(*arrays, spec, params, sign=sign)
    return _scalar_from_guarded(values, resonant, "sigma3")


def big_m4(
    t: HyperplaneTuple, spec: IMultiplierSpec, params: ModelParams
) -> complex:
    """M4 as the six-pairing symmetrization of sigma3 terms."""
    _require_k(t, 4, "big_m4")
    _check_resonant_set(t, params, "big_m4", pairs=True)
    arrays = tuple(np.asarray([x]) for x in t.xis)
    values, resonant = _m4_values(arrays, spec, params)
    return _scalar_from_guarded(values, resonant, "big_m4")


def sigma4(
    t: HyperplaneTuple, spec: IMultiplierSpec, params: ModelParams
) -> complex:
    """sigma4 = -M4 / (h4 - eps beta_4)."""
    _require_k(t, 4, "sigma4")
    _check_resonant_set(t, params, "sigma4", pairs=True)
    arrays = tuple(np.asarray([x]) for x in t.xis)
    values, resonant = _sigma4_values(arrays, spec, params)
    return _scalar_from_guarded(values, resonant, "sigma4")


def big_m5(
    t: HyperplaneTuple, spec: IMultiplierSpec, params: ModelParams
) -> complex:
    """M5 as the ten-pairing symmetrization of sigma4 terms."""
    _require_k(t, 5, "big_m5")
    _check_resonant_set(t, params, "big_m5", pairs=True)
    arrays = tuple(np.asarray([x]) for x in t.xis)
    values, resonant = _m5_values(arrays, spec, params)
    return _scalar_from_guarded(values, resonant, "big_m5")


# ---------------------------------------------------------------------------
# Sampled verification of the M4 pointwise bound
# ---------------------------------------------------------------------------


def _sample_annulus_tuples(
    rng: np.random.Generator,
    n1: float,
    ratios: tuple[float, float, float],
    count: int,
) -> tuple[np.ndarray, ...]:
    """Zero-sum 4-tuples with |xi_1| in [N1, 2N1], |xi_i| in [N_i, 2N_i].

    Rejection keeps the leading magnitude in its annulus and discards
    tuples within 1e-9 relative of a resonant zero (vanishing frequency
    or pair sum).
    """
    mags = np.array([n1 * r for r in ratios])
    out = []
    needed = count
    while needed > 0:
        batch = max(4 * needed, 1024)
        draws = rng.uniform(1.0, 2.0, size=(3, batch)) * mags[:, None]
        signs = rng.integers(0, 2, size=(3, batch)) * 2 - 1
        x234 = draws * signs
        x1 = -np.sum(x234, axis=0)
        ok = (np.abs(x1) >= n1) & (np.abs(x1) <= 2 * n1)
        xs = np.vstack([x1, x234])
        scale = np.max(np.abs(xs), axis=0)
        for i in range(4):
            ok &= np.abs(xs[i]) > 1e-9 * scale
            for j in range(i + 1, 4):
                ok &= np.abs(xs[i] + xs[j]) > 1e-9 * scale
        kept = xs[:, ok]
        out.append(kept[:, :needed])
        needed -= min(needed, kept.shape[1])
    xs = np.concatenate(out, axis=1)
    return tuple(xs[i] for i in range(4))


def m4_bound_sample(
    dyadic_config: DyadicConfig,
    spec: IMultiplierSpec,
    params: ModelParams,
    n_samples: int,
) -> BoundReport:
    """Sample the ratio of |M4| / |h4 - eps beta_4| to its pointwise
    envelope m^2(min magnitude) / prod (N + |xi_i|) over dyadic annuli.

    The envelope minimum runs over the four frequencies and the three
    distinct pair sums.  Reported are the per-ladder maxima and the
    least-squares slope of log max-ratio versus log N1.
    """
    if n_samples < 10_000:
        raise ParameterError(f"need n_samples >= 1e4, got {n_samples}")
    rng = np.random.default_rng(dyadic_config.seed)
    max_ratios = []
    for n1 in dyadic_config.n1_ladder:
        xs = _sample_annulus_tuples(rng, n1, dyadic_config.ratios, n_samples)
        lhs_num, resonant = _m4_values(xs, spec, params)
        den = _h4_values(xs) - params.epsilon * _beta_values(xs, params.alpha)
        lhs = np.abs(lhs_num) / np.abs(den)
        mags = [np.abs(x) for x in xs] + [
            np.abs(xs[0] + xs[1]),
            np.abs(xs[0] + xs[2]),
            np.abs(xs[0] + xs[3]),
        ]
        min_mag = np.minimum.reduce(mags)
        envelope = _msq(min_mag, spec)
        for x in xs:
            envelope = envelope / (spec.cutoff_n + np.abs(x))
        ratio = np.where(resonant, 0.0, lhs / envelope)
        max_ratios.append(float(np.max(ratio)))
    logs_n = np.log(np.asarray(dyadic_config.n1_ladder))
    logs_r = np.log(np.asarray(max_ratios))
    slope = float(np.polyfit(logs_n, logs_r, 1)[0])
    return BoundReport(
        dyadic_config=dyadic_config.describe(),
        samples=n_samples,
        max_ratio=float(np.max(max_ratios)),
        slope_vs_logn=slope,
        n1_ladder=dyadic_config.n1_ladder,
        max_ratios=tuple(max_ratios),
        seed=dyadic_config.seed,
    )


# ---------------------------------------------------------------------------
# Hyperplane functionals on the wavenumber lattice
# ---------------------------------------------------------------------------

_LAMBDA_MAX_MODES = {2: 4096, 3: 256, 4: 64, 5: 64}


def lambda_k(
    multiplier: Callable[..., np.ndarray],
    fields: Sequence[SpectralField],
) -> complex:
    """Discrete hyperplane functional
    Lambda_k = L^(1-k/2) sum_{k_1+...+k_k = 0} m(xi) u_1(k_1)...u_k(k_k).

    ``multiplier`` receives k broadcastable frequency arrays.  With unit
    multiplier and k = 2 this is the squared L2 norm.
    """
    k = len(fields)
    if not 2 <= k <= 5:
        raise ContractViolationError(f"lambda_k supports k = 2..5, got {k}")
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid.modes != grid.modes or f.grid.box_length != grid.box_length:
            raise ContractViolationError("lambda_k fields must share one grid")
    m_modes = grid.modes
    if m_modes > _LAMBDA_MAX_MODES[k]:
        raise ContractViolationError(
            f"lambda_k with k = {k} accepts at most {_LAMBDA_MAX_MODES[k]} modes"
        )
    kint = grid.integer_wavenumbers()
    dxi = 2.0 * np.pi / grid.box_length
    gamma = grid.box_length ** (1.0 - 0.5 * k)
    half = m_modes // 2

    coeffs = [f.coeffs for f in fields]

    if k == 2:
        k2 = -kint
        valid = (k2 >= -half) & (k2 <= half - 1)
        vals = multiplier(kint * dxi, k2 * dxi)
        prod = coeffs[0] * coeffs[1][k2 % m_modes]
        return complex(gamma * np.sum(np.where(valid, vals * prod, 0.0)))

    if k == 3:
        k1 = kint[:, None]
        k2 = kint[None, :]
        k3 = -(k1 + k2)
        valid = (k3 >= -half) & (k3 <= half - 1)
        vals = multiplier(k1 * dxi, k2 * dxi, k3 * dxi)
        prod = coeffs[0][:, None] * coeffs[1][None, :] * coeffs[2][k3 % m_modes]
        return complex(gamma * np.sum(np.where(valid, vals * prod, 0.0)))

    if k == 4:
        k1 = kint[:, None, None]
        k2 = kint[None, :, None]
        k3 = kint[None, None, :]
        k4 = -(k1 + k2 + k3)
        valid = (k4 >= -half) & (k4 <= half - 1)
        vals = multiplier(k1 * dxi, k2 * dxi, k3 * dxi, k4 * dxi)
        prod = (
            coeffs[0][:, None, None]
            * coeffs[1][None, :, None]
            * coeffs[2][None, None, :]
            * coeffs[3][k4 % m_modes]
        )
        return complex(gamma * np.sum(np.where(valid, vals * prod, 0.0)))

    # k == 5: chunk the leading index to bound memory at O(M^3)
    k2 = kint[:, None, None]
    k3 = kint[None, :, None]
    k4 = kint[None, None, :]
    inner = (
        coeffs[1][:, None, None]
        * coeffs[2][None, :, None]
        * coeffs[3][None, None, :]
    )
    total = 0.0 + 0.0j
    for lead in range(m_modes):
        c_lead = coeffs[0][lead]
        if c_lead == 0:
            continue
        k1 = np.full((1, 1, 1), kint[lead])
        k5 = -(kint[lead] + k2 + k3 + k4)
        valid = (k5 >= -half) & (k5 <= half - 1)
        vals = multiplier(k1 * dxi, k2 * dxi, k3 * dxi, k4 * dxi, k5 * dxi)
        prod = c_lead * inner * coeffs[4][k5 % m_modes]
        total += np.sum(np.where(valid, vals * prod, 0.0))
    return complex(gamma * total)


def modified_energy(
    order: int,
    u: SpectralField,
    spec: IMultiplierSpec,
    params: ModelParams,
) -> float:
    """E_I^2 = ||I u||^2, E_I^3 = E_I^2 + Lambda_3(sigma3),
    E_I^4 = E_I^3 + Lambda_4(sigma4).

    Orders 3 and 4 need nondegenerate denominators: order 3 with eps = 0
    requires a vanishing zero mode, and order 4 requires eps > 0 (the
    lattice contains opposite pairs, which are resonant for sigma4).
    """
    if order not in (2, 3, 4):
        raise ParameterError(f"order must be 2, 3, or 4, got {order}")
    xi = u.grid.wavenumbers()
    e2 = float(np.sum(_msq(xi, spec) * np.abs(u.coeffs) ** 2))
    if order == 2:
        return e2

    if params.epsilon == 0 and abs(u.coeffs[0]) > 1e-13 * max(u.l2_norm(), _TINY):
        raise ResonantDenominatorError(
            "order >= 3 with eps = 0 requires a zero-mode-free field"
        )

    def sigma3_mult(x1, x2, x3):
        values, resonant = _sigma3_values(x1, x2, x3, spec, params)
        if params.epsilon > 0 and np.any(resonant):
            raise ResonantDenominatorError("resonant sigma3 denominator on lattice")
        return values

    e3 = e2 + complex(lambda_k(sigma3_mult, [u, u, u])).real
    if order == 3:
        return float(e3)

    if params.epsilon == 0:
        raise ResonantDenominatorError(
            "E_I^4 needs eps > 0: opposite lattice pairs are sigma4-resonant"
        )

    def sigma4_mult(x1, x2, x3, x4):
        values, _ = _sigma4_values((x1, x2, x3, x4), spec, params)
        return values

    e4 = e3 + complex(lambda_k(sigma4_mult, [u, u, u, u])).real
    return float(e4)


def denergy_identity_residual(traj: Trajectory, spec: IMultiplierSpec) -> float:
    """Defect of the quadratic ledger identity along a trajectory.

    Compares the centered difference of E_I^2 = ||I u||^2 between
    snapshots against the instantaneous right-hand side

        -eps Lambda_2(m(xi_1) m(xi_2) beta_{alpha,2}) + (2/3) Lambda_3(M3),

    and returns the maximal defect over interior snapshots, divided by
    scale = max(sup |rhs|, sup E_I^2 / time span).
    """
    if len(traj.states) < 3:
        raise ResolutionError("need at least three snapshots for a centered difference")
    grid = traj.grid
    if grid.modes > 256:
        raise ContractViolationError(
            f"identity check accepts at most 256 modes, got {grid.modes}"
        )
    params = traj.params
    xi = grid.wavenumbers()
    msq = _msq(xi, spec)
    diss_weight = 2.0 * params.epsilon * msq * np.abs(xi) ** (2 * params.alpha)

    kint = grid.integer_wavenumbers()
    m_modes = grid.modes
    half = m_modes // 2
    k1 = kint[:, None]
    k2 = kint[None, :]
    k3 = -(k1 + k2)
    valid = (k3 >= -half) & (k3 <= half - 1)
    dxi = 2.0 * np.pi / grid.box_length
    x1 = k1 * dxi
    x2 = k2 * dxi
    x3 = k3 * dxi
    m3_vals = np.where(valid, _m3_values(x1, x2, x3, spec), 0.0)
    gather = k3 % m_modes
    gamma3 = grid.box_length ** (-0.5)

    energies = np.array(
        [float(np.sum(msq * np.abs(s.coeffs) ** 2)) for s in traj.states]
    )

    def rhs_at(c: np.ndarray) -> float:
        diss = float(np.sum(diss_weight * np.abs(c) ** 2))
        flux = gamma3 * np.sum(m3_vals * (c[:, None] * c[None, :]) * c[gather])
        return -diss + (2.0 / 3.0) * float(flux.real)

    rhs = np.array([rhs_at(s.coeffs) for s in traj.states])
    dts = traj.times[2:] - traj.times[:-2]
    lhs = (energies[2:] - energies[:-2]) / dts
    defects = np.abs(lhs - rhs[1:-1])
    span = traj.times[-1] - traj.times[0]
    scale = max(float(np.max(np.abs(rhs))), float(np.max(energies)) / span, _TINY)
    return float(np.max(defects) / scale)


def rearrangement_check(
    a: Sequence[float], b: Sequence[float]
) -> tuple[float, float]:
    """prod (a_i + b_i) for the given pairing versus both arrays sorted
    ascending; the given pairing always dominates."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractViolationError("rearrangement_check needs two equal-length 1-d arrays")
    if np.any(a < 0) or np.any(b < 0):
        raise ParameterError("rearrangement_check requires nonnegative entries")
    lhs = float(np.prod(a + b))
    rhs = float(np.prod(np.sort(a) + np.sort(b)))
    return lhs, rhs
