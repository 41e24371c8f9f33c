"""Membership tests for the canonical radial families.

Symbolic profiles are classified exactly by coefficient matching; numeric
profiles by linear least squares on a log-spaced grid with a residual
test.  Every ``classify_*`` function returns ``None`` for non-members.

Two Einstein-constant normalizations appear: ``einstein_constant`` is
defined by ``sigma = n - (lambda/2) y`` (so ``Ric = (lambda/2) g``), and the
solitonic constant of a trivial soliton equals half of it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import expr as ex
from .errors import DegreeRangeError, IllConditioned, ParamError, SignError
from .expr import ExpLaurentExpr, Y
from .geometry import Derivatives, RadialMetric, rho_k, sigma_from_psi

DEFAULT_TOL = 1e-8
DEFAULT_SAMPLES = 256
COND_LIMIT = 1e12


@dataclass(frozen=True)
class ExtremalParams:
    """``psi = y - A y^(1-n) - B y^(2-n) - C y^2 - D y^3``."""

    A: float
    B: float
    C: float
    D: float
    residual: float = 0.0


@dataclass(frozen=True)
class KEResult:
    einstein_constant: float
    defined_at_origin: bool
    space_form: bool
    flat: bool
    residual: float = 0.0
    notes: tuple[str, ...] = ()

    @property
    def solitonic_constant(self) -> float:
        return self.einstein_constant / 2.0


@dataclass(frozen=True)
class KrsParams:
    """Radial soliton data; ``k1`` is the extra constant of the ``n = 1`` case."""

    mu: float
    lam: float
    nu: float
    trivial: bool
    k1: float | None = None
    residual: float = 0.0


@dataclass(frozen=True)
class KcsckParams:
    """``((n - sigma)/y)^k = A_k + B_k y^-n`` with ``rho_k = A_k n!/(k!(n-k)!)``."""

    n: int
    k: int
    A_k: float
    B_k: float
    rho_k_value: float
    residual: float = 0.0

    def sigma(self, y):
        """``n - y (A_k + B_k y^-n)^(1/k)``; SignError for even roots of negatives."""
        y = np.asarray(y, dtype=float)
        rad = self.A_k + self.B_k / y**self.n
        if np.any(rad < 0):
            if self.k % 2 == 0:
                raise SignError("negative radicand under an even root")
            root = np.sign(rad) * np.abs(rad) ** (1.0 / self.k)
        else:
            root = rad ** (1.0 / self.k)
        return self.n - y * root


def _binom_ratio(n, k):
    return math.factorial(n) / (math.factorial(k) * math.factorial(n - k))


def _lstsq(columns, target):
    """Least squares with column equilibration; returns (x, residual, cond)."""
    M = np.column_stack(columns)
    norms = np.linalg.norm(M, axis=0)
    norms[norms == 0.0] = 1.0
    Ms = M / norms
    sv = np.linalg.svd(Ms, compute_uv=False)
    cond = (sv[0] / sv[-1]) ** 2 if sv[-1] > 0 else math.inf
    xs, *_ = np.linalg.lstsq(Ms, target, rcond=None)
    x = xs / norms
    res = float(np.max(np.abs(M @ x - target)))
    return x, res, cond


def _coefficient_system(columns, target):
    """Coefficient vectors of expressions over the union of their term keys."""
    keys = sorted({(r, p) for e in (*columns, target) for _, p, r in e.terms})
    index = {k: i for i, k in enumerate(keys)}

    def vec(e):
        v = np.zeros(len(keys))
        for c, p, r in e.terms:
            v[index[(r, p)]] = c
        return v

    return [vec(e) for e in columns], vec(target)


def _neg(x):
    # 0.0 - x keeps an exact zero positive, so reports never show -0.0
    return 0.0 - float(x)


# extremal -------------------------------------------------------------------

def _extremal_powers(n):
    return sorted({1.0 - n, 2.0 - n, 1.0, 2.0, 3.0})


def classify_extremal(m: RadialMetric, tol: float = DEFAULT_TOL,
                      samples: int = DEFAULT_SAMPLES) -> ExtremalParams | None:
    n = m.dim
    if m.symbolic:
        fit = ex.laurent_fit(m.profile, _extremal_powers(n))
        if fit is None:
            return None
        if n == 1:
            return ExtremalParams(_neg(fit[0.0]), 1.0 - fit[1.0], _neg(fit[2.0]), _neg(fit[3.0]))
        if abs(fit[1.0] - 1.0) > tol:
            return None
        return ExtremalParams(_neg(fit[1.0 - n]), _neg(fit[2.0 - n]), _neg(fit[2.0]), _neg(fit[3.0]))
    y = m.grid(samples)
    psi = np.asarray(m.psi(y), dtype=float)
    cols = [-(y ** (1.0 - n)), -(y ** (2.0 - n)), -(y**2), -(y**3)]
    (A, B, C, D), res, _ = _lstsq(cols, psi - y)
    if res > tol * np.max(np.abs(psi)):
        return None
    return ExtremalParams(float(A), float(B), float(C), float(D), res)


# Kahler-Einstein --------------------------------------------------------------

def classify_ke(m: RadialMetric, tol: float = DEFAULT_TOL,
                samples: int = DEFAULT_SAMPLES) -> KEResult | None:
    """KE iff ``sigma`` is affine with slope ``-lambda/2`` (intercept ``n`` when n >= 2)."""
    n = m.dim
    if m.symbolic:
        fit = ex.laurent_fit(sigma_from_psi(m), [0.0, 1.0])
        if fit is None:
            return None
        intercept, slope, res = fit[0.0], fit[1.0], 0.0
    else:
        y = m.grid(samples)
        s = np.asarray(Derivatives(m).sigma(y), dtype=float)
        (intercept, slope), res, _ = _lstsq([np.ones_like(y), y], s)
        if res > tol * max(1.0, np.max(np.abs(s))):
            return None
    if n >= 2 and abs(intercept - n) > tol * n:
        return None
    lam = _neg(2.0 * float(slope))
    notes = []
    ext = classify_extremal(m, max(tol, 1e-6) if not m.symbolic else tol, samples)
    if ext is None:
        notes.append("VIOLATION: Kahler-Einstein profile not recognized as extremal")
        A = math.nan
    else:
        A = ext.A
        if n >= 2:
            expected = 2.0 * ext.C * (n + 1)
            if abs(lam - expected) > 1e-6 * max(1.0, abs(lam)):
                notes.append(f"VIOLATION: einstein constant {lam!r} != 2C(n+1) = {expected!r}")
            if abs(ext.B) > 1e-6 or abs(ext.D) > 1e-6:
                notes.append("VIOLATION: Kahler-Einstein profile with B or D nonzero")
    a_tol = max(tol, 1e-6) * max(1.0, abs(lam))
    defined_at_origin = m.y_range[0] == 0.0 and abs(A) <= a_tol
    flat = abs(lam) <= tol * max(1.0, n) and (n == 1 or abs(A) <= a_tol)
    return KEResult(
        einstein_constant=lam,
        defined_at_origin=bool(defined_at_origin),
        space_form=bool(n == 1 or defined_at_origin),
        flat=bool(flat),
        residual=float(res),
        notes=tuple(notes),
    )


# Kahler-Ricci solitons ------------------------------------------------------

def krs_profile(n: int, mu: float, lam: float, nu: float, k1: float = 0.0) -> ExpLaurentExpr:
    """Explicit soliton profile for ``mu != 0``.

    n = 1: ``nu e^(mu y) + (lam/mu) y + lam/mu^2 - (k1+1)/mu``;
    n >= 2: ``nu e^(mu y)/y^(n-1) + (lam/mu) y
    + (lam-mu)/mu^(n+1) sum_j n!/j! mu^j y^(j+1-n)``.
    """
    if mu == 0.0:
        raise ParamError("mu = 0 is the trivial (Kahler-Einstein) branch; use kind='ke'")
    if n == 1:
        return ExpLaurentExpr([
            (nu, 0.0, mu),
            (lam / mu, 1.0, 0.0),
            (lam / mu**2 - (k1 + 1.0) / mu, 0.0, 0.0),
        ])
    pref = (lam - mu) / mu ** (n + 1)
    terms = [(nu, 1.0 - n, mu), (lam / mu, 1.0, 0.0)]
    terms += [
        (pref * math.factorial(n) / math.factorial(j) * mu**j, float(j + 1 - n), 0.0)
        for j in range(n)
    ]
    return ExpLaurentExpr(terms)


def krs_sigma(n: int, mu: float, lam: float, nu: float) -> ExpLaurentExpr:
    """Closed form of ``sigma`` for the soliton profile (n >= 2).

    ``mu nu e^(mu y)/y^(n-1) + n lam/mu
    + (lam-mu)/mu^(n+1) sum_{j=1}^{n-1} n!/(j-1)! mu^j y^(j-n)``.
    """
    pref = (lam - mu) / mu ** (n + 1)
    terms = [(mu * nu, 1.0 - n, mu), (n * lam / mu, 0.0, 0.0)]
    terms += [
        (pref * math.factorial(n) / math.factorial(j - 1) * mu**j, float(j - n), 0.0)
        for j in range(1, n)
    ]
    return ExpLaurentExpr(terms)


def krs_sigma_flipped(n: int, mu: float, lam: float, nu: float) -> ExpLaurentExpr:
    """Variant of :func:`krs_sigma` with ``y^(n-j)`` in the sum, kept for comparison."""
    pref = (lam - mu) / mu ** (n + 1)
    terms = [(mu * nu, 1.0 - n, mu), (n * lam / mu, 0.0, 0.0)]
    terms += [
        (pref * math.factorial(n) / math.factorial(j - 1) * mu**j, float(n - j), 0.0)
        for j in range(1, n)
    ]
    return ExpLaurentExpr(terms)


def krs_ode_residual(m: RadialMetric, mu: float, lam: float, sigma=None, k1: float = 0.0):
    """``sigma - n - mu psi + lam y`` (n >= 2) or ``psi' - mu psi - (k1+1) + lam y`` (n = 1)."""
    n = m.dim
    if m.symbolic:
        psi = m.profile
        if n == 1:
            return psi.diff() - mu * psi - (k1 + 1.0) + lam * Y
        s = sigma_from_psi(m) if sigma is None else sigma
        return s - n - mu * psi + lam * Y
    d = Derivatives(m)

    def res(y):
        y = np.asarray(y, dtype=float)
        if n == 1:
            return d.dpsi(y) - mu * d.psi(y) - (k1 + 1.0) + lam * y
        return d.sigma(y) - n - mu * d.psi(y) + lam * y

    return res


def krs_sigma_discrepancy(n: int, mu: float, lam: float, nu: float, samples: int = 64) -> dict:
    """Compare ``sigma`` derived from the soliton profile with both closed forms.

    Returns the max soliton-ODE residual of each on a grid over the
    profile's validity interval, and whether each matches the derived
    ``sigma`` term for term.
    """
    psi = krs_profile(n, mu, lam, nu)
    m = RadialMetric(n, psi)
    derived = sigma_from_psi(m)
    y = m.grid(samples)
    out = {"n": n, "mu": mu, "lambda": lam, "nu": nu}
    for name, s in (("derived", derived), ("closed_form", krs_sigma(n, mu, lam, nu)),
                    ("flipped_exponent", krs_sigma_flipped(n, mu, lam, nu))):
        r = np.asarray(krs_ode_residual(m, mu, lam, sigma=s)(y), dtype=float)
        scale = max(1.0, float(np.max(np.abs(derived(y)))))
        out[name] = {
            "ode_residual": float(np.max(np.abs(r)) / scale),
            "matches_derived": _close_terms(s, derived),
        }
    return out


def _close_terms(a: ExpLaurentExpr, b: ExpLaurentExpr, rel: float = 1e-12) -> bool:
    diff = a - b
    scale = max((abs(c) for c, _, _ in a.terms + b.terms), default=1.0)
    return all(abs(c) <= rel * scale for c, _, _ in diff.terms)


def _recover_nu(m, mu, lam, k1, y_mid):
    n = m.dim
    if m.symbolic:
        target_p = 0.0 if n == 1 else 1.0 - n
        for c, p, r in m.profile.terms:
            if r != 0.0 and p == target_p and abs(r - mu) <= 1e-6 * (1.0 + abs(mu)):
                return c, r
        return 0.0, mu
    rest = krs_profile(n, mu, lam, 0.0, k1 if k1 is not None else 0.0)
    val = float(m.psi(y_mid)) - float(rest(y_mid))
    return val * y_mid ** (n - 1) * math.exp(-mu * y_mid), mu


def classify_krs(m: RadialMetric, tol: float = DEFAULT_TOL,
                 samples: int = DEFAULT_SAMPLES) -> KrsParams | None:
    """Fit the soliton ODE, linear in ``(mu, lambda)`` (and ``k+1`` when n = 1).

    Raises IllConditioned when the fit is degenerate and the trivial
    ``mu = 0`` branch does not fit either.
    """
    n = m.dim
    if samples < 32:
        raise ValueError("classify_krs needs at least 32 grid points")
    y = m.grid(samples)
    d = Derivatives(m)
    psi = np.asarray(d.psi(y), dtype=float)
    dpsi = np.asarray(d.dpsi(y), dtype=float)
    bound = tol * (1.0 + np.max(np.abs(dpsi)))
    one = np.ones_like(y)
    if n == 1:
        target, cols = dpsi, [psi, one, -y]
    else:
        target, cols = np.asarray(d.sigma(y), dtype=float) - n, [psi, -y]
    if m.symbolic:
        # the equation is an identity between expressions; matching
        # coefficients gives the parameters exactly, the grid judges membership
        if n == 1:
            t_e, c_e = ex.differentiate(m.profile), [m.profile, ExpLaurentExpr.const(1.0), -Y]
        else:
            t_e, c_e = sigma_from_psi(m) - float(n), [m.profile, -Y]
        coef_cols, coef_target = _coefficient_system(c_e, t_e)
    else:
        coef_cols, coef_target = cols, target

    def fit(first):
        x, _, cond = _lstsq(coef_cols[first:], coef_target)
        res = float(np.max(np.abs(np.column_stack(cols[first:]) @ x - target)))
        return x, res, cond

    x, res, cond = fit(0)
    if cond > COND_LIMIT:
        # degenerate only when psi is proportional to y; try mu = 0
        x0, res0, _ = fit(1)
        if res0 > bound:
            raise IllConditioned(f"soliton fit condition number {cond:.3g} exceeds {COND_LIMIT:g}")
        x, res = np.concatenate([[0.0], x0]), res0
    if res > bound:
        return None
    mu, lam = float(x[0]), float(x[-1])
    k1 = float(x[1]) - 1.0 if n == 1 else None
    if abs(mu) <= tol:
        x0, res0, _ = fit(1)
        lam = float(x0[-1])
        k1 = float(x0[0]) - 1.0 if n == 1 else None
        return KrsParams(0.0, lam, 0.0, True, k1, max(res, res0))
    nu, mu = _recover_nu(m, mu, lam, k1, float(y[len(y) // 2]))
    scale_nu = tol * max(1.0, abs(lam))
    if n == 1:
        trivial = abs(nu) <= scale_nu
    else:
        trivial = abs(nu) <= scale_nu and abs(lam - mu) <= tol * max(1.0, abs(mu))
    return KrsParams(mu, lam, float(nu), bool(trivial), k1, res)


# generalized cscK --------------------------------------------------------------

def classify_kcsck(m: RadialMetric, k: int, tol: float = DEFAULT_TOL,
                   samples: int = DEFAULT_SAMPLES) -> KcsckParams | None:
    """``rho_k`` constant iff ``F = ((n-sigma)/y)^k`` is affine in ``y^-n``."""
    n = m.dim
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise DegreeRangeError(f"k={k} outside 1..{n}")
    k = int(k)
    if m.symbolic:
        u = (n - sigma_from_psi(m)) * ExpLaurentExpr.monomial(1.0, -1.0)
        fit = ex.laurent_fit(u**k, [0.0, float(-n)])
        if fit is None:
            return None
        a, b, res = fit[0.0], fit[float(-n)], 0.0
    else:
        y = m.grid(samples)
        u = (n - np.asarray(Derivatives(m).sigma(y), dtype=float)) / y
        F = u**k
        # relative weighting: y^-n spans decades, and unweighted rows at
        # small y would drown the constant A_k
        wt = 1.0 / np.maximum(1.0, np.abs(F))
        (a, b), _, _ = _lstsq([wt, wt * y ** float(-n)], wt * F)
        res = float(np.max(np.abs(a + b * y ** float(-n) - F)))
        if res > tol * max(1.0, np.max(np.abs(F))):
            return None
    return KcsckParams(n, k, float(a), float(b), float(a) * _binom_ratio(n, k), float(res))


# constructors ----------------------------------------------------------------

FAMILIES = ("extremal", "ke", "flat", "krs", "kcsck")


def construct_family(kind: str, n: int, **params) -> RadialMetric:
    """Build a metric of the given family.

    extremal: ``A, B, C, D`` (default 0).  ke: ``C`` and optional ``A``.
    flat: no parameters.  krs: ``mu != 0, lam, nu`` and ``k1`` for n = 1.
    kcsck: ``k, A_k, B_k, y0, psi0`` and optional ``y_span`` and ``tol``.
    ``y_seed`` selects the validity interval for symbolic families.
    """
    seed = params.pop("y_seed", None)
    if kind == "flat":
        return RadialMetric(n, Y, (0.0, math.inf))
    if kind in ("extremal", "ke"):
        A = params.get("A", 0.0)
        B = params.get("B", 0.0) if kind == "extremal" else 0.0
        C = params.get("C", 0.0)
        D = params.get("D", 0.0) if kind == "extremal" else 0.0
        psi = ExpLaurentExpr([
            (1.0, 1.0, 0.0), (-A, 1.0 - n, 0.0), (-B, 2.0 - n, 0.0),
            (-C, 2.0, 0.0), (-D, 3.0, 0.0),
        ])
        return _symbolic_metric(n, psi, seed)
    if kind == "krs":
        psi = krs_profile(n, params["mu"], params["lam"], params.get("nu", 0.0), params.get("k1", 0.0))
        return _symbolic_metric(n, psi, seed)
    if kind == "kcsck":
        return _kcsck_metric(n, **params)
    raise ParamError(f"unknown family {kind!r}; expected one of {FAMILIES}")


def _symbolic_metric(n, psi, seed):
    from .errors import DomainError

    try:
        return RadialMetric(n, psi, y_seed=seed)
    except DomainError as exc:
        raise ParamError(f"no validity interval: {exc}") from exc


def kcsck_span(n: int, A_k: float, B_k: float, y0: float, y_span=None) -> tuple[float, float]:
    """Part of ``y_span`` (default ``[y0/2, 2 y0]``) where ``A_k + B_k y^-n >= 0``."""
    a, b = y_span if y_span is not None else (y0 / 2.0, 2.0 * y0)
    if A_k * B_k < 0:
        ystar = (-B_k / A_k) ** (1.0 / n)
        if A_k < 0:
            b = min(b, ystar * (1 - 1e-9))
        else:
            a = max(a, ystar * (1 + 1e-9))
    return float(a), float(b)


def _kcsck_metric(n, k, A_k, B_k, y0, psi0, y_span=None, tol=1e-12):
    from .ode import kcsck_profile

    if not (1 <= k <= n):
        raise DegreeRangeError(f"k={k} outside 1..{n}")
    if psi0 <= 0 or y0 <= 0:
        raise ParamError("need y0 > 0 and psi0 > 0")
    if A_k + B_k / y0**n < 0:
        raise ParamError("radicand A_k + B_k y0^-n is negative at y0")
    a, b = kcsck_span(n, A_k, B_k, y0, y_span)
    if not a < y0 < b:
        raise ParamError("y0 lies on the boundary of the admissible interval")
    prof = kcsck_profile(n, k, A_k, B_k, y0, psi0, (a, b), tol)
    lo, hi = prof.y_range
    if not hi > lo:
        raise ParamError("empty validity interval")
    return RadialMetric(n, prof)


# aggregate report -------------------------------------------------------------

@dataclass
class ClassificationReport:
    n: int
    extremal: ExtremalParams | None
    ke: KEResult | None
    krs: KrsParams | None
    kcsck: dict[int, KcsckParams | None]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def block(obj, **extra):
            if obj is None:
                return {"member": False}
            d = {"member": True}
            d.update({k: v for k, v in asdict(obj).items() if k != "notes"})
            d.update(extra)
            return d

        ke_extra = {}
        if self.ke is not None:
            ke_extra["solitonic_constant"] = self.ke.solitonic_constant
        ext_extra = {}
        if self.extremal is not None:
            e = self.extremal
            ext_extra["flat"] = (e.C == 0 and e.D == 0) if self.n == 1 else not any((e.A, e.B, e.C, e.D))
        return {
            "extremal": block(self.extremal, **ext_extra),
            "ke": block(self.ke, **ke_extra),
            "krs": block(self.krs),
            "kcsck": {str(k): block(v) for k, v in sorted(self.kcsck.items())},
            "notes": list(self.notes),
        }


def classify(m: RadialMetric, tol: float = DEFAULT_TOL, samples: int = DEFAULT_SAMPLES) -> ClassificationReport:
    notes = []
    ext = classify_extremal(m, tol, samples)
    ke = classify_ke(m, tol, samples)
    if ke is not None:
        notes.extend(ke.notes)
    try:
        krs = classify_krs(m, tol, samples)
    except IllConditioned as exc:
        krs = None
        notes.append(f"krs: {exc}")
    kc = {k: classify_kcsck(m, k, tol, samples) for k in range(1, m.dim + 1)}
    if ke is not None and krs is not None:
        if not krs.trivial:
            notes.append("VIOLATION: Kahler-Einstein profile fitted as a nontrivial soliton")
        elif krs.mu == 0.0 and abs(ke.einstein_constant - 2 * krs.lam) > 1e-9 * max(1.0, abs(ke.einstein_constant)):
            notes.append("VIOLATION: einstein constant != 2 x solitonic constant")
    if ke is not None and krs is not None and krs.mu == 0.0:
        notes.append(f"einstein_constant = {ke.einstein_constant!r} = 2 x solitonic_constant {krs.lam!r}")
    return ClassificationReport(m.dim, ext, ke, krs, kc, notes)


# theorem verifier ---------------------------------------------------------------

VACUOUS, CONFIRMED, VIOLATED = "vacuous", "confirmed", "VIOLATED"


def verify_theorem(m: RadialMetric, tol: float = DEFAULT_TOL,
                   samples: int = DEFAULT_SAMPLES, report: ClassificationReport | None = None) -> dict:
    """Check the four intersection identities on one metric.

    (i) extremal and soliton implies KE; (ii) two constant generalized
    curvatures imply KE; (iii) extremal with constant rho_k, k > 1, implies
    KE; (iv) a soliton with some constant rho_k is KE.
    """
    rep = report if report is not None else classify(m, tol, samples)
    is_ke = rep.ke is not None
    consts = [k for k, v in rep.kcsck.items() if v is not None]

    def verdict(premise):
        if not premise:
            return VACUOUS
        return CONFIRMED if is_ke else VIOLATED

    results = {
        "i": verdict(rep.extremal is not None and rep.krs is not None),
        "ii": verdict(len(consts) >= 2),
        "iii": verdict(rep.extremal is not None and any(k > 1 for k in consts)),
        "iv": verdict(rep.krs is not None and bool(consts)),
    }
    if results["iv"] == CONFIRMED and rep.krs is not None and not rep.krs.trivial:
        results["iv"] = VIOLATED
    notes = list(rep.notes)
    krs = rep.krs
    if krs is not None and krs.mu != 0.0 and m.dim >= 2:
        disc = krs_sigma_discrepancy(m.dim, krs.mu, krs.lam, krs.nu)
        notes.append(
            "soliton sigma: derived polynomial part has exponents y^(j-n); "
            f"derived ODE residual {disc['derived']['ode_residual']:.3g}, "
            f"y^(n-j) variant residual {disc['flipped_exponent']['ode_residual']:.3g}"
        )
    return {
        "classification": rep.to_dict(),
        "implications": results,
        "violations": [k for k, v in results.items() if v == VIOLATED],
        "notes": notes,
    }
