"""Majorant recurrences, convergence-rate certificates and step-inequality audits.

Everything here works on the scalar recurrence

    r_n = eta * r_{n-1}^2 + lambda_{n-1} * r_{n-1} + rho_{n-1}

whose equality simulation dominates the true step norms of an outer run once
the problem constants are honest.  Certificates check the side conditions of
one decay regime over a finite horizon, then verify the bounds they are about
to assert against the equality simulation itself; `valid` means both held.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .schemes import SchemeKind
from .sequences import ScalarSequence, SequenceError

_OVERFLOW_CAP = 1e300
_REL_SLACK = 1e-12
_ABS_SLACK = 1e-300


class MajorantError(ValueError):
    pass


class PreconditionError(MajorantError):
    pass


class RecurrenceOverflowError(MajorantError):
    """The simulated recurrence left the representable range."""

    def __init__(self, index: int, partial: List[float]):
        super().__init__("recurrence diverged at index %d (last value %.6e)"
                         % (index, partial[-1] if partial else math.nan))
        self.index = index
        self.partial = partial


class NoValidMajorantError(MajorantError):
    pass


def _le(a: float, b: float) -> bool:
    """a <= b up to the blanket comparison slack."""
    return a <= b + _REL_SLACK * abs(b) + _ABS_SLACK


# ---------------------------------------------------------------------------
# problem constants and recurrence parameters


@dataclass(frozen=True)
class ProblemConstants:
    """Lipschitz data of A and of the scheme operators B_n on the working ball.

    M, K bound A and A'; M_star, K_star bound every B_n, B_n'.  M_seq/K_seq
    give per-step values when known (default: the starred constants).  eps is
    a bound for ||A(x0) - x0||; the three schedules bound the per-step
    value/derivative inexactness (see schemes module for index conventions).
    """

    M: float
    M_star: float
    K: float = 0.0
    K_star: float = 0.0
    eps: float = 0.0
    eps_seq: ScalarSequence = field(default_factory=ScalarSequence.zero)
    sigma_seq: ScalarSequence = field(default_factory=ScalarSequence.zero)
    gamma_seq: ScalarSequence = field(default_factory=ScalarSequence.zero)
    M_seq: Optional[ScalarSequence] = None
    K_seq: Optional[ScalarSequence] = None

    def __post_init__(self):
        for name in ("M", "M_star", "K", "K_star", "eps"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise PreconditionError("%s must be finite and >= 0, got %r" % (name, v))

    def m_at(self, n: int) -> float:
        return self.M_seq(n) if self.M_seq is not None else self.M_star

    def k_at(self, n: int) -> float:
        return self.K_seq(n) if self.K_seq is not None else self.K_star

    @property
    def q(self) -> float:
        if self.M_star >= 1.0:
            raise PreconditionError("q undefined: M_star = %r >= 1" % self.M_star)
        return (self.M + self.M_star) / (1.0 - self.M_star)


@dataclass(frozen=True)
class MajorantParams:
    """Coefficients of the scalar majorant recurrence plus its start value."""

    eta: float
    lam: ScalarSequence
    rho: ScalarSequence
    r0: float

    def __post_init__(self):
        if not math.isfinite(self.eta) or self.eta < 0:
            raise PreconditionError("eta must be finite and >= 0, got %r" % self.eta)
        if not math.isfinite(self.r0) or self.r0 < 0:
            raise PreconditionError("r0 must be finite and >= 0, got %r" % self.r0)

    def lam_values(self, N: int) -> List[float]:
        return self.lam.values(0, N)

    def rho_values(self, N: int) -> List[float]:
        return self.rho.values(0, N)


def recurrence_step(r_prev: float, eta: float, lam: float, rho: float) -> float:
    if r_prev < 0 or eta < 0 or lam < 0 or rho < 0:
        raise PreconditionError("recurrence inputs must be nonnegative")
    return eta * r_prev * r_prev + lam * r_prev + rho


def simulate_recurrence(p: MajorantParams, N: int) -> List[float]:
    """Equality simulation r_0..r_N; overflow raises RecurrenceOverflowError."""
    if N < 0:
        raise PreconditionError("N must be >= 0")
    values = [p.r0]
    for n in range(1, N + 1):
        nxt = recurrence_step(values[-1], p.eta, p.lam(n - 1), p.rho(n - 1))
        if not math.isfinite(nxt) or nxt > _OVERFLOW_CAP:
            raise RecurrenceOverflowError(n, values)
        values.append(nxt)
    return values


def simulate_capped(p: MajorantParams, N: int) -> Tuple[List[float], Optional[int]]:
    """Like simulate_recurrence but pads a diverged tail with +inf.

    Returns (values of length N+1, index of first overflow or None).
    """
    try:
        return simulate_recurrence(p, N), None
    except RecurrenceOverflowError as exc:
        vals = list(exc.partial)
        vals.extend([math.inf] * (N + 1 - len(vals)))
        return vals, exc.index


def majorant_from_constants(c: ProblemConstants, scheme: SchemeKind, r0: float,
                            horizon: int = 200) -> MajorantParams:
    """Translate the applicable step inequality into recurrence coefficients.

    contraction/custom use the Lipschitz inequality (eta = 0, lambda = q);
    newton uses the curvature inequality (eta from K, lambda from sigma);
    modified_newton first caps r_tilde via its own recurrence and a bounded
    certificate, which can legitimately fail -> NoValidMajorantError.
    """
    if not math.isfinite(r0) or r0 < 0:
        raise PreconditionError("r0 must be finite and >= 0")
    if c.M_star >= 1.0:
        raise PreconditionError(
            "no majorant: M_star = %r >= 1 (every route divides by 1 - M_star)" % c.M_star)
    denom = 1.0 - c.M_star
    rho = ScalarSequence.pair_sum(c.eps_seq, 1.0 / denom)

    if scheme in (SchemeKind.CONTRACTION, SchemeKind.CUSTOM):
        return MajorantParams(eta=0.0, lam=ScalarSequence.constant(c.q), rho=rho, r0=r0)

    eta = 0.5 * (c.K + c.K_star) / denom
    if scheme is SchemeKind.NEWTON:
        lam = c.sigma_seq.affine(1.0 / denom, 0.0)
        return MajorantParams(eta=eta, lam=lam, rho=rho, r0=r0)

    if scheme is SchemeKind.MODIFIED_NEWTON:
        # r_tilde obeys its own recurrence started at 0; cap it first.
        tilde = MajorantParams(
            eta=eta,
            lam=c.gamma_seq.affine(1.0 / denom, 0.0),
            rho=c.eps_seq.affine(1.0 / denom, c.eps / denom),
            r0=0.0)
        cap = cert_bounded(tilde, horizon)
        if not cap.valid:
            raise NoValidMajorantError(
                "r_tilde cap certificate failed: %s" % "; ".join(cap.detail))
        tilde_bound = cap.witnesses["C"]
        lam = c.gamma_seq.affine(1.0 / denom, (c.K + c.K_star) * tilde_bound / denom)
        return MajorantParams(eta=eta, lam=lam, rho=rho, r0=r0)

    raise PreconditionError("unknown scheme %r" % scheme)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class Certificate:
    """Outcome of one decay-regime check over a finite horizon.

    lower/upper are the per-index bounds the regime asserts for the equality
    simulation (index 0 carries the trivial start bounds).  valid is True only
    when every side condition held AND the asserted bounds were verified
    against the simulation itself.
    """

    regime: str
    witnesses: Dict[str, float]
    checked_horizon: int
    valid: bool
    premises_ok: bool
    bounds_ok: bool
    lower: List[float]
    upper: List[float]
    min_margin: float
    detail: List[str] = field(default_factory=list)


def _verify_bounds(sim: List[float], lower: List[float], upper: List[float],
                   first: int = 1) -> Tuple[bool, float]:
    ok = True
    margin = math.inf
    for j in range(first, len(sim)):
        if not _le(lower[j], sim[j]) or not _le(sim[j], upper[j]):
            ok = False
        if math.isfinite(upper[j]):
            margin = min(margin, upper[j] - sim[j])
        if math.isfinite(sim[j]):
            margin = min(margin, sim[j] - lower[j])
        else:
            margin = -math.inf
    return ok, margin


def _lambda_blanket(lam_vals: Sequence[float], detail: List[str]) -> bool:
    bad = [v for v in lam_vals if v < 0]
    if bad:
        detail.append("negative lambda value %r" % bad[0])
        return False
    sup = max(lam_vals)
    if sup >= 1.0:
        detail.append("sup lambda = %r >= 1 over the horizon" % sup)
        return False
    return True


def _roots(eta: float, lam: float, rho: float) -> Tuple[float, float, float]:
    """Lower/upper roots of eta z^2 - (1-lam) z + rho = 0 plus the discriminant.

    The rationalized lower-root formula is smooth at eta = 0 (limit
    rho/(1-lam)); the upper root is +inf there.
    """
    disc = (1.0 - lam) ** 2 - 4.0 * eta * rho
    if disc < 0.0:
        return math.nan, math.nan, disc
    s = math.sqrt(disc)
    denom_low = (1.0 - lam) + s
    low = 0.0 if rho == 0.0 else 2.0 * rho / denom_low
    up = math.inf if eta == 0.0 else denom_low / (2.0 * eta)
    return low, up, disc


def cert_bounded(p: MajorantParams, N: int) -> Certificate:
    """Uniform cap: r_n <= C with C between every lower root and every upper root."""
    lam = p.lam_values(N)
    rho = p.rho_values(N)
    detail: List[str] = []
    premises = _lambda_blanket(lam, detail)
    sup_low, inf_up = 0.0, math.inf
    if premises:
        for k in range(N):
            low, up, disc = _roots(p.eta, lam[k], rho[k])
            if disc <= 0.0:
                detail.append("discriminant (1-lambda_%d)^2 - 4*eta*rho_%d = %r not positive"
                              % (k, k, disc))
                premises = False
                break
            sup_low = max(sup_low, low)
            inf_up = min(inf_up, up)
    C = max(p.r0, sup_low)
    if premises and not _le(C, inf_up):
        detail.append("no admissible C: need %r <= C <= %r" % (max(p.r0, sup_low), inf_up))
        premises = False
    sim, diverged = simulate_capped(p, N)
    lower = [0.0] * (N + 1)
    upper = [C] * (N + 1)
    bounds_ok, margin = (False, -math.inf)
    if premises:
        bounds_ok, margin = _verify_bounds(sim, lower, upper, first=0)
        if diverged is not None:
            bounds_ok = False
    if premises and bounds_ok:
        detail.append("uniform cap C = %r holds on the simulation" % C)
    return Certificate("bounded", {"C": C}, N, premises and bounds_ok,
                       premises, bounds_ok, lower, upper, margin, detail)


def cert_uniform_max(p: MajorantParams, N: int) -> Certificate:
    """max{r0, upper root at (lambda_0, rho_0)} for nonincreasing lambda, rho.

    Additional side condition r0 <= upper root: beyond it the recurrence
    escapes and no uniform bound of this shape exists.
    """
    lam = p.lam_values(N)
    rho = p.rho_values(N)
    detail: List[str] = []
    premises = _lambda_blanket(lam, detail)
    if premises and not p.lam.nonincreasing_on(0, N):
        detail.append("lambda sequence is not nonincreasing")
        premises = False
    if premises and not p.rho.nonincreasing_on(0, N):
        detail.append("rho sequence is not nonincreasing")
        premises = False
    bound = math.nan
    if premises:
        low0, up0, disc0 = _roots(p.eta, lam[0], rho[0])
        # monotone sequences push later discriminants up, so index 0 decides
        if disc0 < 0.0:
            detail.append("discriminant at index 0 is %r < 0" % disc0)
            premises = False
        else:
            if p.eta == 0.0:
                bound = max(p.r0, rho[0] / (1.0 - lam[0]) if rho[0] else 0.0)
                detail.append("eta = 0: upper root degenerates, using the finite limit root")
            else:
                bound = max(p.r0, up0)
            if not _le(p.r0, up0):
                detail.append("r0 = %r exceeds the upper root %r: recurrence escapes"
                              % (p.r0, up0))
                premises = False
    sim, diverged = simulate_capped(p, N)
    lower = [0.0] * (N + 1)
    upper = [bound if premises else math.nan] * (N + 1)
    bounds_ok, margin = (False, -math.inf)
    if premises:
        bounds_ok, margin = _verify_bounds(sim, lower, upper, first=0)
        if diverged is not None:
            bounds_ok = False
    return Certificate("uniform_max", {"max_bound": bound}, N, premises and bounds_ok,
                       premises, bounds_ok, lower, upper, margin, detail)


def cert_sandwich(p: MajorantParams, N: int, C1: float, C2: float) -> Certificate:
    """Two-sided decay pinned to rho: rho_{n-1} <= r_n <= C_rho * rho_{n-1}.

    Side conditions as printed plus the start window
    eta r0^2 + lambda_0 r0 + rho_0 <= C_rho rho_0 (the induction base; the
    published window line is ambiguous, this is the reading that anchors the
    bound).  The asserted sandwich is the lag-one one, which is what the
    induction proves.
    """
    lam = p.lam_values(N + 1)
    rho = p.rho_values(N + 1)
    detail: List[str] = []
    premises = _lambda_blanket(lam[:N + 1], detail)
    if not (0.0 <= C1 < 1.0):
        detail.append("need 0 <= C1 < 1, got %r" % C1)
        premises = False
    disc_w = (1.0 - C1) ** 2 - 4.0 * p.eta * C2
    if C2 < 0.0 or disc_w < 0.0:
        detail.append("need 0 <= C2 <= (1-C1)^2/(4 eta), got C2 = %r" % C2)
        premises = False
    if premises and any(v <= 0.0 for v in rho):
        detail.append("rho must stay positive for ratio conditions")
        premises = False
    C_rho = math.nan
    if premises:
        if p.eta * C2 == 0.0:
            C_rho = 1.0 / (1.0 - C1)
            detail.append("eta*C2 = 0: using the finite limit root 1/(1-C1)")
        else:
            C_rho = ((1.0 - C1) + math.sqrt(disc_w)) / (2.0 * p.eta * C2)
        for k in range(N):
            ratio = rho[k + 1] / rho[k]
            if not _le(lam[k + 1], C1 * ratio):
                detail.append("lambda_%d = %r above C1*rho_%d/rho_%d = %r"
                              % (k + 1, lam[k + 1], k + 1, k, C1 * ratio))
                premises = False
                break
            if not _le(rho[k], C2 * ratio):
                detail.append("rho_%d = %r above C2*rho_%d/rho_%d = %r"
                              % (k, rho[k], k + 1, k, C2 * ratio))
                premises = False
                break
    if premises:
        start = p.eta * p.r0 ** 2 + lam[0] * p.r0 + rho[0]
        if not _le(start, C_rho * rho[0]):
            detail.append("start window fails: r_1 value %r above C_rho*rho_0 = %r"
                          % (start, C_rho * rho[0]))
            premises = False
    sim, diverged = simulate_capped(p, N)
    lower = [0.0] + [rho[j - 1] for j in range(1, N + 1)]
    upper = [p.r0] + [(C_rho * rho[j - 1]) if premises else math.nan for j in range(1, N + 1)]
    bounds_ok, margin = (False, -math.inf)
    if premises:
        bounds_ok, margin = _verify_bounds(sim, lower, upper)
        if diverged is not None:
            bounds_ok = False
    return Certificate("sandwich", {"C1": C1, "C2": C2, "C_rho": C_rho}, N,
                       premises and bounds_ok, premises, bounds_ok, lower, upper,
                       margin, detail)


def cert_geometric(p: MajorantParams, N: int, chi: float, mu: float,
                   lambda0_tilde: float, C_mu: float) -> Certificate:
    """Geometric sandwich r0 prod lambda <= r_n <= C_mu (1+mu)^n lt0 prod lambda.

    Checks the published premise scans and, in addition, the anchored set that
    actually carries the induction for the printed bound (base case with the
    lambda_0 factor; per-step eta and rho budgets against the bound value
    itself).  The published premises alone admit counterexamples.
    """
    lam = p.lam_values(N + 1)
    rho = p.rho_values(N + 1)
    detail: List[str] = []
    premises = _lambda_blanket(lam[:N + 1], detail)
    if premises and any(v <= 0.0 for v in lam[:N + 1]):
        detail.append("lambda must stay positive (products enter denominators)")
        premises = False
    lam_bar = max(lam[:N + 1]) if lam else 1.0
    if not (0.0 <= chi <= 1.0):
        detail.append("need chi in [0,1], got %r" % chi)
        premises = False
    if premises and not (0.0 <= mu <= 1.0 / lam_bar - 1.0):
        detail.append("need mu in [0, 1/sup(lambda) - 1] = [0, %r], got %r"
                      % (1.0 / lam_bar - 1.0, mu))
        premises = False
    if lambda0_tilde < 0 or C_mu < 0:
        detail.append("witnesses must be nonnegative")
        premises = False
    z = lambda0_tilde * C_mu
    # prefix[j] = prod_{k=0}^{j-1} lambda_k
    prefix = [1.0]
    for k in range(N):
        prefix.append(prefix[-1] * lam[k])
    r1_value = p.eta * p.r0 ** 2 + lam[0] * p.r0 + rho[0]
    if premises:
        if not _le(r1_value, (1.0 + mu) * z):
            detail.append("published base premise fails: %r > (1+mu)*lt0*C_mu = %r"
                          % (r1_value, (1.0 + mu) * z))
            premises = False
        elif not _le(p.eta * z, (1.0 - chi) * mu * lam[1]):
            detail.append("published eta premise fails at n = 1")
            premises = False
    if premises:
        prod1n = 1.0  # prod_{k=1}^{n} lambda_k
        for n in range(1, N):
            prod1n *= lam[n]
            if not _le(rho[n], chi * mu * z * prod1n):
                detail.append("published rho premise fails at n = %d" % n)
                premises = False
                break
            if not _le(p.eta * z * prod1n, (1.0 - chi) * mu * lam[n + 1]):
                detail.append("published eta premise fails at n = %d" % n)
                premises = False
                break
    upper = [p.r0] + [z * (1.0 + mu) ** j * prefix[j] for j in range(1, N + 1)]
    if premises:
        # anchored set: the induction that the printed bound actually needs
        if not _le(r1_value, upper[1]):
            detail.append("anchor fails: r_1 value %r above the printed bound %r"
                          % (r1_value, upper[1]))
            premises = False
        else:
            for n in range(1, N):
                if not _le(p.eta * upper[n], (1.0 - chi) * mu * lam[n]):
                    detail.append("anchored eta budget fails at n = %d" % n)
                    premises = False
                    break
                if not _le(rho[n], chi * mu * lam[n] * upper[n]):
                    detail.append("anchored rho budget fails at n = %d" % n)
                    premises = False
                    break
    sim, diverged = simulate_capped(p, N)
    lower = [p.r0 * prefix[j] for j in range(N + 1)]
    bounds_ok, margin = (False, -math.inf)
    if premises:
        bounds_ok, margin = _verify_bounds(sim, lower, upper)
        if diverged is not None:
            bounds_ok = False
    wit = {"chi": chi, "mu": mu, "lambda0_tilde": lambda0_tilde, "C_mu": C_mu}
    return Certificate("geometric", wit, N, premises and bounds_ok, premises,
                       bounds_ok, lower, upper, margin, detail)


def cert_quadratic(p: MajorantParams, N: int, chi: float, mu: float) -> Certificate:
    """Doubly exponential sandwich around (eta r0)^(2^n)/eta; needs eta*r0 < 1.

    The printed inflation (1+mu)^n is verified against the simulation because
    it is not inductively stable for mu > 0; valid reports what actually held.
    """
    lam = p.lam_values(N)
    rho = p.rho_values(N)
    detail: List[str] = []
    premises = True
    if p.eta <= 0.0:
        detail.append("quadratic regime needs eta > 0, got %r" % p.eta)
        premises = False
    theta = p.eta * p.r0
    if premises and not theta < 1.0:
        detail.append("needs eta*r0 < 1, got %r" % theta)
        premises = False
    if not (0.0 <= chi <= 1.0) or mu < 0.0:
        detail.append("need chi in [0,1] and mu >= 0")
        premises = False
    theta_pow = []  # theta^(2^j), underflow to 0 is fine
    if premises:
        t = theta
        for _ in range(N + 1):
            theta_pow.append(t)
            t = t * t
        for n in range(1, N + 1):
            if not _le(lam[n - 1], chi * mu * theta_pow[n - 1]):
                detail.append("lambda budget fails at index %d" % (n - 1))
                premises = False
                break
            if not _le(p.eta * rho[n - 1], (1.0 - chi) * mu * theta_pow[n]):
                detail.append("rho budget fails at index %d" % (n - 1))
                premises = False
                break
    if premises:
        lower = [theta_pow[j] / p.eta for j in range(N + 1)]
        upper = [(1.0 + mu) ** j * theta_pow[j] / p.eta for j in range(N + 1)]
    else:
        lower = [0.0] * (N + 1)
        upper = [math.nan] * (N + 1)
    sim, diverged = simulate_capped(p, N)
    bounds_ok, margin = (False, -math.inf)
    if premises:
        bounds_ok, margin = _verify_bounds(sim, lower, upper, first=0)
        if diverged is not None:
            bounds_ok = False
        if not bounds_ok:
            detail.append("printed inflation (1+mu)^n did not hold on the simulation")
    return Certificate("quadratic", {"chi": chi, "mu": mu}, N,
                       premises and bounds_ok, premises, bounds_ok, lower, upper,
                       margin, detail)


_REGIMES = ("bounded", "uniform_max", "sandwich", "geometric", "quadratic")


def certify(p: MajorantParams, regime: str, N: int,
            witnesses: Optional[Dict[str, float]] = None) -> Certificate:
    """Dispatch by regime name; witnesses=None triggers the grid search."""
    if regime not in _REGIMES:
        raise MajorantError("unknown regime %r (expected one of %s)" % (regime, ", ".join(_REGIMES)))
    if regime == "bounded":
        return cert_bounded(p, N)
    if regime == "uniform_max":
        return cert_uniform_max(p, N)
    if witnesses is None:
        found = search_witnesses(p, regime, N)
        if found is not None:
            return found
        # report the first grid candidate's failure rather than nothing
        if regime == "sandwich":
            return cert_sandwich(p, N, 0.5, _needed_c2(p, N))
        if regime == "geometric":
            return cert_geometric(p, N, 0.5, 0.0, 1.0, 1.0)
        return cert_quadratic(p, N, 0.5, 0.0)
    try:
        if regime == "sandwich":
            return cert_sandwich(p, N, witnesses["C1"], witnesses["C2"])
        if regime == "geometric":
            return cert_geometric(p, N, witnesses["chi"], witnesses["mu"],
                                  witnesses["lambda0_tilde"], witnesses["C_mu"])
        return cert_quadratic(p, N, witnesses["chi"], witnesses["mu"])
    except KeyError as exc:
        raise MajorantError("regime %r missing witness %s" % (regime, exc))


def _needed_c2(p: MajorantParams, N: int) -> float:
    rho = p.rho_values(N)
    vals = [rho[k] ** 2 / rho[k + 1] for k in range(N - 1) if rho[k + 1] > 0]
    return max(vals) * (1.0 + 1e-9) if vals else 0.0


def search_witnesses(p: MajorantParams, regime: str, N: int,
                     grid: int = 16) -> Optional[Certificate]:
    """Coarse witness search; returns the first valid certificate or None."""
    if regime == "bounded":
        c = cert_bounded(p, N)
        return c if c.valid else None
    if regime == "uniform_max":
        c = cert_uniform_max(p, N)
        return c if c.valid else None
    if regime == "sandwich":
        lam = p.lam_values(N)
        rho = p.rho_values(N)
        if any(v <= 0 for v in rho):
            return None
        need_c1 = max((lam[k + 1] * rho[k] / rho[k + 1] for k in range(N - 1)), default=0.0)
        need_c2 = _needed_c2(p, N)
        cand_c1 = [min(need_c1 * (1.0 + 1e-9), 0.999999)] + \
                  [i / grid for i in range(grid)]
        for c1 in cand_c1:
            if not 0.0 <= c1 < 1.0:
                continue
            hi = math.inf if p.eta == 0.0 else (1.0 - c1) ** 2 / (4.0 * p.eta)
            if need_c2 > hi:
                continue
            cand_c2 = [need_c2] + [need_c2 + (min(hi, need_c2 * 16 + 1.0) - need_c2) * i / grid
                                   for i in range(1, grid)]
            for c2 in cand_c2:
                cert = cert_sandwich(p, N, c1, c2)
                if cert.valid:
                    return cert
        return None
    if regime == "geometric":
        lam = p.lam_values(N + 1)
        if any(v <= 0 for v in lam) or max(lam) >= 1.0:
            return None
        mu_max = 1.0 / max(lam) - 1.0
        rho0 = p.rho(0)
        r1_value = p.eta * p.r0 ** 2 + lam[0] * p.r0 + rho0
        for i in range(1, grid + 1):
            mu = mu_max * i / grid
            for j in range(1, grid):
                chi = j / grid
                # anchor decides the smallest usable witness product
                z = r1_value / ((1.0 + mu) * lam[0]) * (1.0 + 1e-9)
                for scale in (1.0, 2.0, 4.0, 8.0):
                    cert = cert_geometric(p, N, chi, mu, 1.0, z * scale)
                    if cert.valid:
                        return cert
        if p.eta == 0.0 and all(v == 0.0 for v in p.rho_values(N)):
            z = max(p.r0, r1_value / lam[0] if lam[0] else 0.0)
            cert = cert_geometric(p, N, 0.0, 0.0, 1.0, z)
            if cert.valid:
                return cert
        return None
    if regime == "quadratic":
        cand = [(0.5, 0.0)]
        for i in range(1, grid + 1):
            for j in range(grid):
                cand.append((j / grid, i / grid))
        for chi, mu in cand:
            cert = cert_quadratic(p, N, chi, mu)
            if cert.valid:
                return cert
        return None
    raise MajorantError("unknown regime %r" % regime)


# ---------------------------------------------------------------------------
# a-posteriori tail bound and assumption precheck


def tail_bound(trace_r: Sequence[float], p: MajorantParams, n: int,
               horizon: int = 200) -> float:
    """Upper bound for ||x_n - x*|| = at most sum_{k>=n} r_k.

    Uses r_{n-1} from the measured trace and the majorant coefficients beyond
    it: with lambda_eff = sup lambda + eta * (uniform cap) < 1,
    tail <= (lambda_eff r_{n-1} + sum_{k>=n-1} rho_k) / (1 - lambda_eff).
    Returns +inf when the rho tail diverges; raises NoValidMajorantError when
    no lambda_eff < 1 can be certified.
    """
    if n < 1:
        raise PreconditionError("tail bound needs n >= 1")
    if len(trace_r) < n:
        raise PreconditionError("trace has %d step norms, need at least %d" % (len(trace_r), n))
    lam_sup = p.lam.sup_tail(n - 1)
    lam_eff = lam_sup
    if p.eta > 0.0:
        cap = cert_bounded(p, horizon)
        if not cap.valid:
            raise NoValidMajorantError(
                "eta > 0 and no uniform cap certificate: %s" % "; ".join(cap.detail))
        lam_eff = lam_sup + p.eta * cap.witnesses["C"]
    if lam_eff >= 1.0:
        raise NoValidMajorantError("effective lambda %r >= 1: tail not summable this way" % lam_eff)
    try:
        rho_tail = p.rho.tail_sum(n - 1)
    except SequenceError as exc:
        raise NoValidMajorantError("rho tail unavailable: %s" % exc)
    if math.isinf(rho_tail):
        return math.inf
    r_prev = trace_r[n - 1]
    return (lam_eff * r_prev + rho_tail) / (1.0 - lam_eff)


@dataclass
class PrecheckEntry:
    name: str
    status: str  # pass | fail | skipped
    detail: str


@dataclass
class PrecheckReport:
    entries: List[PrecheckEntry]

    @property
    def ok(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def entry(self, name: str) -> PrecheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


def precheck(c: ProblemConstants, r0: Optional[float] = None,
             horizon: int = 200) -> PrecheckReport:
    """Report pass/fail per standing assumption before trusting any majorant."""
    entries: List[PrecheckEntry] = []

    if c.M_star < 1.0:
        entries.append(PrecheckEntry("M_star < 1", "pass", "M_star = %r" % c.M_star))
        q = c.q
        entries.append(PrecheckEntry("q < 1", "pass" if q < 1.0 else "fail",
                                     "q = (M + M_star)/(1 - M_star) = %r" % q))
    else:
        entries.append(PrecheckEntry("M_star < 1", "fail", "M_star = %r" % c.M_star))
        entries.append(PrecheckEntry("q < 1", "fail", "undefined: M_star >= 1"))

    entries.append(_summability_entry(c.eps_seq, horizon))

    ks = c.K_star
    entries.append(PrecheckEntry("K_star finite", "pass" if math.isfinite(ks) else "fail",
                                 "K_star = %r" % ks))

    if r0 is None:
        entries.append(PrecheckEntry("first step bound", "skipped", "no measured r_0 given"))
    else:
        m0 = c.m_at(0)
        if m0 >= 1.0:
            entries.append(PrecheckEntry("first step bound", "fail",
                                         "M_0 = %r >= 1, bound undefined" % m0))
        else:
            bound = (c.eps + c.eps_seq(0)) / (1.0 - m0)
            ok = _le(r0, bound)
            entries.append(PrecheckEntry(
                "first step bound", "pass" if ok else "fail",
                "r_0 = %r vs (eps + eps_0)/(1 - M_0) = %r" % (r0, bound)))
    return PrecheckReport(entries)


def _summability_entry(seq: ScalarSequence, horizon: int) -> PrecheckEntry:
    name = "eps series summable"
    decided = seq.is_summable()
    if decided is True:
        return PrecheckEntry(name, "pass", "closed form is summable")
    if decided is False:
        why = "closed form diverges"
        if seq.kind == "power" and seq.p <= 1.0:
            why = "harmonic-or-slower decay (p = %r <= 1)" % seq.p
        return PrecheckEntry(name, "fail", why)
    # raw callable: scan the horizon
    vals = [seq(n) for n in range(1, horizon + 1)]
    if all(v == 0.0 for v in vals):
        return PrecheckEntry(name, "pass", "all sampled values are zero")
    scaled = [v * n for n, v in enumerate(vals, start=1) if v > 0.0]
    tail = scaled[len(scaled) // 2:]
    if tail and min(tail) >= 0.5 * max(tail) and min(tail) > 0.0:
        return PrecheckEntry(name, "fail", "harmonic lower bound detected over the horizon")
    ratios = [vals[i + 1] / vals[i] for i in range(len(vals) - 1) if vals[i] > 0.0]
    if ratios and max(ratios[len(ratios) // 2:]) < 0.999:
        return PrecheckEntry(name, "pass", "sampled ratios stay below 1 (heuristic)")
    return PrecheckEntry(name, "skipped", "cannot decide summability from samples")


# ---------------------------------------------------------------------------
# step-inequality audit


@dataclass
class AuditRow:
    part: int          # which step inequality (1, 2, 3, 4) was checked
    n: int
    lhs: float
    rhs: float
    ok: bool
    flagged: bool      # printed pairing failed but the index-shifted one held
    label: str = ""


@dataclass
class AuditReport:
    rows: List[AuditRow]

    @property
    def ok(self) -> bool:
        return all(row.ok or row.flagged for row in self.rows)

    @property
    def flags(self) -> int:
        return sum(1 for row in self.rows if row.flagged)

    def worst_margin(self) -> float:
        return min((row.rhs - row.lhs for row in self.rows), default=math.inf)


def audit_step_inequalities(trace_r: Sequence[float], trace_rtilde: Sequence[float],
                            c: ProblemConstants, scheme: SchemeKind,
                            slack: float = 1e-12) -> AuditReport:
    """Check each step of a run against the inequality its scheme satisfies.

    Index 0 always gets the start inequality r_0 <= M_0 r_0 + eps + eps_0.
    The M pairing is checked exactly as stated for the scheme; if only the
    index-shifted pairing holds at some step the row is flagged, not failed.
    """
    rows: List[AuditRow] = []
    r = list(trace_r)
    rt = list(trace_rtilde)
    eps = c.eps_seq

    if r:
        rhs = c.m_at(0) * r[0] + c.eps + eps(0)
        rows.append(AuditRow(1, 0, r[0], rhs, r[0] <= rhs + slack, False, "start"))

    for n in range(1, len(r)):
        rn, rp = r[n], r[n - 1]
        if scheme in (SchemeKind.CONTRACTION, SchemeKind.CUSTOM):
            common = (c.M + c.m_at(n - 1)) * rp + eps(n - 1) + eps(n)
            rhs = c.m_at(n) * rn + common
            ok = rn <= rhs + slack
            flagged = False
            if not ok:
                shifted = c.m_at(n - 1) * rn + common
                flagged = rn <= shifted + slack
            rows.append(AuditRow(2, n, rn, rhs, ok or flagged, flagged, "lipschitz"))
        elif scheme is SchemeKind.NEWTON:
            common = (0.5 * (c.K + c.k_at(n - 1)) * rp * rp
                      + c.sigma_seq(n - 1) * rp + eps(n - 1) + eps(n))
            rhs = c.m_at(n) * rn + common
            ok = rn <= rhs + slack
            flagged = False
            if not ok:
                flagged = rn <= c.m_at(n - 1) * rn + common + slack
            rows.append(AuditRow(3, n, rn, rhs, ok or flagged, flagged, "curvature"))
        elif scheme is SchemeKind.MODIFIED_NEWTON:
            # distance-from-start inequality, printed with M_{n-1} against r_tilde_n
            rtn, rtp = rt[n], rt[n - 1]
            common_t = (0.5 * (c.K + c.k_at(n - 1)) * rtp * rtp
                        + c.gamma_seq(n - 1) * rtp + c.eps + eps(n - 1))
            rhs_t = c.m_at(n - 1) * rtn + common_t
            ok_t = rtn <= rhs_t + slack
            flagged_t = False
            if not ok_t:
                flagged_t = rtn <= c.m_at(n) * rtn + common_t + slack
            rows.append(AuditRow(4, n, rtn, rhs_t, ok_t or flagged_t, flagged_t,
                                 "distance-from-start"))
            kk = c.K + c.k_at(n - 1)
            common = (0.5 * kk * rp * rp
                      + (c.gamma_seq(n - 1) + kk * rtp) * rp + eps(n - 1) + eps(n))
            rhs = c.m_at(n) * rn + common
            ok = rn <= rhs + slack
            flagged = False
            if not ok:
                flagged = rn <= c.m_at(n - 1) * rn + common + slack
            rows.append(AuditRow(4, n, rn, rhs, ok or flagged, flagged, "step"))
        else:
            raise PreconditionError("unknown scheme %r" % scheme)
    return AuditReport(rows)
