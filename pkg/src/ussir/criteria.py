"""Closed-form extinction/persistence thresholds and grid estimators.

Each named model family has a one-sided sufficient criterion built from
coefficient bounds over [0, oo): either an exponential decay rate for the
infected compartment (extinction) or a pair (lambda0, lambda) whose ratio
bounds the long-run time average of the infected compartment from below
(persistence).  The criteria are one-sided: when a gate fails the verdict
is "indeterminate", never the opposite classification.

All closed-form functions are pure functions of :class:`BoundsPair` inputs
and jump-constant suprema, so analytically-bounded and user-supplied bounds
share one code path.  The generic estimators evaluate the underlying
drift-diffusion-jump functional on explicit (t, state) grids with midpoint
quadrature in the mark variable; they produce grid lower bounds of the true
suprema, not certified values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .expr import BoundsPair, bounds
from .levy import LARGE, SMALL
from .models import ModelSpec

__all__ = [
    "CRITERIA_CSV_HEADER",
    "CriteriaReport",
    "SideCondition",
    "ex1_extinction",
    "ex1b_persistence",
    "ex34a_persistence",
    "ex34b_extinction",
    "generic_alpha_estimate",
    "generic_alpha_star_estimate",
    "k_value",
    "octant_grid",
    "report_for_model",
    "simplex_grid",
    "xc_report",
]

EXTINCT = "extinct"
PERSISTENT = "persistent"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class SideCondition:
    """One gate of a criterion, stated as lhs (< or >) rhs."""

    name: str
    satisfied: bool
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def _fmt(value) -> str:
    return "" if value is None else f"{value:.17g}"


@dataclass(frozen=True)
class CriteriaReport:
    """Outcome of one closed-form criterion.

    ``classification`` is one of extinct / persistent / indeterminate.
    Rate and threshold fields are populated whenever their formula is
    computable, even if a gate failed; the classification alone carries the
    verdict.
    """

    model_id: str
    classification: str
    extinction_rate_lb: Optional[float] = None
    lambda0: Optional[float] = None
    lam: Optional[float] = None
    mean_infected_lb: Optional[float] = None
    r_tilde: Optional[float] = None
    invariant_set_bound: Optional[float] = None
    side_conditions: tuple[SideCondition, ...] = ()

    def condition(self, name: str) -> SideCondition:
        for cond in self.side_conditions:
            if cond.name == name:
                return cond
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [
            f"model: {self.model_id}",
            f"classification: {self.classification}",
            f"extinction_rate_lb: {_fmt(self.extinction_rate_lb)}",
            f"lambda0: {_fmt(self.lambda0)}",
            f"lambda: {_fmt(self.lam)}",
            f"mean_infected_lb: {_fmt(self.mean_infected_lb)}",
            f"r_tilde: {_fmt(self.r_tilde)}",
            f"invariant_set_bound: {_fmt(self.invariant_set_bound)}",
        ]
        for cond in self.side_conditions:
            lines.append(
                f"side_condition: {cond.name} satisfied={'yes' if cond.satisfied else 'no'} "
                f"lhs={cond.lhs:.17g} rhs={cond.rhs:.17g}"
            )
        return "\n".join(lines) + "\n"

    def to_csv_row(self) -> list[str]:
        conds = ";".join(
            f"{c.name}:{'yes' if c.satisfied else 'no'}:{c.lhs:.17g}:{c.rhs:.17g}"
            for c in self.side_conditions
        )
        return [
            self.model_id,
            self.classification,
            _fmt(self.extinction_rate_lb),
            _fmt(self.lambda0),
            _fmt(self.lam),
            _fmt(self.mean_infected_lb),
            _fmt(self.r_tilde),
            _fmt(self.invariant_set_bound),
            conds,
        ]


CRITERIA_CSV_HEADER = [
    "model",
    "classification",
    "extinction_rate_lb",
    "lambda0",
    "lambda",
    "mean_infected_lb",
    "r_tilde",
    "invariant_set_bound",
    "side_conditions",
]


# --- the log-compensation functional ------------------------------------------

def k_value(model: ModelSpec, t: float, state, u) -> float:
    """Sum of small-jump per-compartment ratios minus the log of the product
    of their positivity factors.  Nonnegative wherever defined (log(1+x) is
    at most x)."""
    s = np.asarray(state, dtype=float)
    ratios = model.small_jump(t, s, u) / s
    factors = 1.0 + ratios
    if np.any(factors <= 0.0):
        raise ValueError(f"positivity factor not positive: {factors.tolist()}")
    return float(ratios.sum(axis=-1) - np.log1p(ratios).sum(axis=-1))


# --- closed-form criteria -------------------------------------------------------

def ex1_extinction(beta: BoundsPair, gamma: BoundsPair, g1: float) -> CriteriaReport:
    """Extinction rate bound for the power-law transmission proportions
    model: recovery infimum minus transmission supremum minus twice the
    large-jump cap."""
    rate = gamma.inf - beta.sup - 2.0 * g1
    gate = SideCondition(
        name="beta_sup_plus_2g1_lt_gamma_inf",
        satisfied=beta.sup + 2.0 * g1 < gamma.inf,
        lhs=beta.sup + 2.0 * g1,
        rhs=gamma.inf,
    )
    return CriteriaReport(
        model_id="ex1",
        classification=EXTINCT if gate.satisfied else INDETERMINATE,
        extinction_rate_lb=rate,
        side_conditions=(gate,),
    )


def ex1b_persistence(
    beta: BoundsPair,
    gamma1: BoundsPair,
    gamma2: BoundsPair,
    sigma: BoundsPair,
    h1: float,
    h2: float,
    g2: float,
) -> CriteriaReport:
    """Persistence pair for the linear-transmission proportions model."""
    bracket = sigma.sup**2 + h1 - math.log((1.0 - h2) * (1.0 - g2))
    lambda0 = gamma2.inf
    lam = gamma2.inf - gamma1.sup - 2.0 * bracket
    conds = (
        SideCondition(
            name="gamma1_sup_lt_beta_inf",
            satisfied=gamma1.sup < beta.inf,
            lhs=gamma1.sup,
            rhs=beta.inf,
        ),
        SideCondition(
            name="beta_inf_le_gamma2_inf",
            satisfied=beta.inf <= gamma2.inf,
            lhs=beta.inf,
            rhs=gamma2.inf,
        ),
        SideCondition(
            name="noise_bracket_lt_half_gap",
            satisfied=bracket < (gamma2.inf - gamma1.sup) / 2.0,
            lhs=bracket,
            rhs=(gamma2.inf - gamma1.sup) / 2.0,
        ),
    )
    ok = all(c.satisfied for c in conds)
    return CriteriaReport(
        model_id="ex1b",
        classification=PERSISTENT if ok else INDETERMINATE,
        lambda0=lambda0,
        lam=lam,
        mean_infected_lb=lam / lambda0,
        side_conditions=conds,
    )


def xc_report(
    Lambda: BoundsPair,
    mu: BoundsPair,
    beta: BoundsPair,
    gamma: BoundsPair,
    epsilon: BoundsPair,
    sigma: BoundsPair,
) -> CriteriaReport:
    """Threshold report for the demography model: two extinction regimes
    (noise-adjusted reproduction threshold below one, or dominant noise)
    and one persistence regime, plus the invariant-set bound."""
    if mu.inf <= 0.0:
        raise ValueError("mortality infimum must be positive")
    invariant_bound = Lambda.sup / mu.inf
    denom_ext = mu.inf + gamma.inf + epsilon.inf
    sigma_inf_sq = sigma.inf**2
    r_ext = (
        beta.sup * Lambda.sup / (mu.inf * denom_ext)
        - sigma_inf_sq * Lambda.sup**2 / (2.0 * mu.inf**2 * denom_ext)
    )
    low_noise_cap = mu.inf * beta.sup / Lambda.sup
    high_noise_floor = max(low_noise_cap, beta.sup**2 / (2.0 * denom_ext))
    denom_pers = mu.sup + gamma.sup + epsilon.sup
    r_pers = (
        beta.inf * Lambda.inf / (mu.sup * denom_pers)
        - sigma.sup**2 * Lambda.sup**2 / (2.0 * mu.inf**2 * denom_pers)
    )
    conds = (
        SideCondition(
            name="sigma_inf_sq_le_low_noise_cap",
            satisfied=sigma_inf_sq <= low_noise_cap,
            lhs=sigma_inf_sq,
            rhs=low_noise_cap,
        ),
        SideCondition(
            name="r_tilde_lt_one",
            satisfied=r_ext < 1.0,
            lhs=r_ext,
            rhs=1.0,
        ),
        SideCondition(
            name="sigma_inf_sq_gt_high_noise_floor",
            satisfied=sigma_inf_sq > high_noise_floor,
            lhs=high_noise_floor,
            rhs=sigma_inf_sq,
        ),
        SideCondition(
            name="r_tilde_pers_gt_one",
            satisfied=r_pers > 1.0,
            lhs=1.0,
            rhs=r_pers,
        ),
    )
    case_low_noise = conds[0].satisfied and conds[1].satisfied
    case_high_noise = conds[2].satisfied
    case_persistent = conds[3].satisfied
    if case_low_noise:
        return CriteriaReport(
            model_id="xc",
            classification=EXTINCT,
            extinction_rate_lb=denom_ext * (1.0 - r_ext),
            r_tilde=r_ext,
            invariant_set_bound=invariant_bound,
            side_conditions=conds,
        )
    if case_high_noise:
        return CriteriaReport(
            model_id="xc",
            classification=EXTINCT,
            extinction_rate_lb=denom_ext - beta.sup**2 / (2.0 * sigma_inf_sq),
            r_tilde=r_ext,
            invariant_set_bound=invariant_bound,
            side_conditions=conds,
        )
    if case_persistent:
        mean_lb = mu.sup * (r_pers - 1.0) / beta.inf
        lambda0 = beta.inf * denom_pers / mu.sup
        return CriteriaReport(
            model_id="xc",
            classification=PERSISTENT,
            lambda0=lambda0,
            lam=lambda0 * mean_lb,
            mean_infected_lb=mean_lb,
            r_tilde=r_pers,
            invariant_set_bound=invariant_bound,
            side_conditions=conds,
        )
    return CriteriaReport(
        model_id="xc",
        classification=INDETERMINATE,
        r_tilde=r_ext,
        invariant_set_bound=invariant_bound,
        side_conditions=conds,
    )


def ex34a_persistence(
    mu: BoundsPair,
    gamma2: BoundsPair,
    gamma3: BoundsPair,
    sigma1: BoundsPair,
    sigma2: BoundsPair,
    h1: float,
    h2: float,
    g2: float,
    cap: float,
) -> CriteriaReport:
    """Persistence pair for the truncated power-law population model."""
    growth_floor = min(cap, gamma2.inf - mu.sup)
    noise = sigma1.sup**2 + sigma2.sup**2
    log_term = h1 - math.log((1.0 - h2) * (1.0 - g2))
    lambda0 = gamma3.sup + 1.0
    lam = growth_floor - (noise / 2.0 + log_term)
    conds = (
        SideCondition(
            name="mu_sup_lt_gamma2_inf",
            satisfied=mu.sup < gamma2.inf,
            lhs=mu.sup,
            rhs=gamma2.inf,
        ),
        SideCondition(
            name="noise_lt_twice_growth_floor",
            satisfied=noise + 2.0 * log_term < 2.0 * growth_floor,
            lhs=noise + 2.0 * log_term,
            rhs=2.0 * growth_floor,
        ),
    )
    ok = all(c.satisfied for c in conds)
    return CriteriaReport(
        model_id="ex34a",
        classification=PERSISTENT if ok else INDETERMINATE,
        lambda0=lambda0,
        lam=lam,
        mean_infected_lb=lam / lambda0,
        side_conditions=conds,
    )


def ex34b_extinction(mu: BoundsPair, beta: BoundsPair, gamma2: BoundsPair, g1: float) -> CriteriaReport:
    """Extinction rate bound for the truncated linear-transmission
    population model."""
    rate = gamma2.inf + mu.inf - beta.sup - 2.0 * g1
    gate = SideCondition(
        name="beta_sup_plus_2g1_lt_gamma2_inf_plus_mu_inf",
        satisfied=beta.sup + 2.0 * g1 < gamma2.inf + mu.inf,
        lhs=beta.sup + 2.0 * g1,
        rhs=gamma2.inf + mu.inf,
    )
    return CriteriaReport(
        model_id="ex34b",
        classification=EXTINCT if gate.satisfied else INDETERMINATE,
        extinction_rate_lb=rate,
        side_conditions=(gate,),
    )


def report_for_model(model: ModelSpec) -> CriteriaReport:
    """Compute the closed-form report for a built named model, deriving
    coefficient bounds from its time functions."""
    b = {name: bounds(fn) for name, fn in model.params.items()}
    j = model.jump_constants
    if model.model_id == "ex1":
        return ex1_extinction(b["beta"], b["gamma"], j["g1"])
    if model.model_id == "ex1b":
        return ex1b_persistence(b["beta"], b["gamma1"], b["gamma2"], b["sigma"], j["h1"], j["h2"], j["g2"])
    if model.model_id == "xc":
        return xc_report(b["Lambda"], b["mu"], b["beta"], b["gamma"], b["epsilon"], b["sigma"])
    if model.model_id == "ex34a":
        return ex34a_persistence(
            b["mu"], b["gamma2"], b["gamma3"], b["sigma1"], b["sigma2"],
            j["h1"], j["h2"], j["g2"], model.truncation_cap,
        )
    if model.model_id == "ex34b":
        return ex34b_extinction(b["mu"], b["beta"], b["gamma2"], j["g1"])
    raise ValueError(
        f"no closed-form criterion for model {model.model_id!r}; "
        "use generic_alpha_estimate on explicit grids instead"
    )


# --- grid estimators --------------------------------------------------------------

def simplex_grid(nx: int = 200, ny: int = 200, y_min: float = 1e-3, margin: float = 1e-3) -> np.ndarray:
    """Interior grid of the proportions simplex with the infected component
    bounded away from zero.  Returns an (N, 3) state block."""
    xs = np.linspace(margin, 1.0 - y_min - 2.0 * margin, nx)
    fractions = np.linspace(0.0, 1.0, ny)
    x = np.repeat(xs, ny)
    span = 1.0 - x - margin - y_min
    y = y_min + np.tile(fractions, nx) * span
    z = 1.0 - x - y
    grid = np.stack([x, y, z], axis=-1)
    keep = (grid > 0.0).all(axis=1) & (grid[:, 1] >= y_min)
    return grid[keep]


def octant_grid(hi: float, n_per_axis: int = 25, y_min: float = 1e-3, lo: float = 1e-3) -> np.ndarray:
    """Box grid of the positive octant up to ``hi`` per component."""
    axis = np.linspace(lo, hi, n_per_axis)
    y_axis = np.linspace(max(lo, y_min), hi, n_per_axis)
    X, Y, Z = np.meshgrid(axis, y_axis, axis, indexing="ij")
    return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)


def _jump_integral(model: ModelSpec, pv, states, region: str, transform, quad_nodes: int, u_chunk: int = 64) -> float:
    """integral over the region of sup over states of transform(ratio),
    against the intensity measure, by chunked midpoint quadrature."""
    nodes, weights = model.measure.quadrature(region, nodes_per_piece=quad_nodes)
    if nodes.size == 0:
        return 0.0
    ratio_fn = (
        model.infected_small_jump_ratio if region == SMALL else model.infected_large_jump_ratio
    )
    total = 0.0
    for start in range(0, nodes.size, u_chunk):
        u = nodes[start : start + u_chunk, None]
        ratios = ratio_fn(pv, states, u)
        if np.any(ratios <= -1.0):
            raise ValueError("jump ratio at or below -1 on the grid; positivity violated")
        total += float(weights[start : start + u_chunk] @ transform(ratios).max(axis=1))
    return total


def generic_alpha_estimate(
    model: ModelSpec,
    t_grid: Sequence[float],
    state_grid: np.ndarray,
    quad_nodes: int = 1001,
) -> float:
    """Grid estimate of the decay functional: the maximum over times of the
    state supremum of per-capita infected drift minus half the squared
    per-capita diffusion, plus the mark integrals of the compensated
    log-ratio (small region) and log-ratio (large region).

    A grid estimate is a lower bound of the true supremum; refine the grids
    to tighten it.  The state grid must keep the infected component away
    from zero because the functional divides by it.
    """
    states = np.asarray(state_grid, dtype=float)
    if states.ndim != 2 or states.shape[1] != 3:
        raise ValueError("state_grid must have shape (N, 3)")
    if np.any(states <= 0.0):
        raise ValueError("state_grid must be strictly positive")
    best = -math.inf
    for t in np.asarray(t_grid, dtype=float):
        pv = model.param_values(float(t))
        drift_pc = model.infected_drift_per_capita(pv, states)
        diff_pc = model.infected_diffusion_per_capita(pv, states)
        bracket = float((drift_pc - 0.5 * (diff_pc**2).sum(axis=-1)).max())
        small = _jump_integral(
            model, pv, states, SMALL, lambda r: np.log1p(r) - r, quad_nodes
        )
        large = _jump_integral(model, pv, states, LARGE, np.log1p, quad_nodes)
        best = max(best, bracket + small + large)
    return best


def generic_alpha_star_estimate(
    model: ModelSpec,
    t_grid: Sequence[float],
    state_grid: np.ndarray,
    quad_nodes: int = 1001,
) -> float:
    """Grid estimate of the strengthened decay functional available when the
    infected drift splits into nonnegative gain and loss parts: gain squared
    over twice the squared diffusion row, minus per-capita loss, plus the
    same mark integrals.  Never smaller than the plain estimate on matching
    grids.

    States where the diffusion row vanishes are excluded from the supremum
    (the strengthened form needs nondegenerate noise there).
    """
    if not model.has_drift_split:
        raise ValueError("model does not expose a gain/loss drift split")
    states = np.asarray(state_grid, dtype=float)
    best = -math.inf
    for t in np.asarray(t_grid, dtype=float):
        pv = model.param_values(float(t))
        gain = model.infected_gain_pc_fn(pv, states)
        loss = model.infected_loss_pc_fn(pv, states)
        denom = (model.infected_diffusion_per_capita(pv, states) ** 2).sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = gain**2 / (2.0 * denom) - loss
        vals = vals[np.isfinite(vals)]
        if vals.size == 0:
            raise ValueError("diffusion row vanishes on the whole grid")
        bracket = float(vals.max())
        small = _jump_integral(
            model, pv, states, SMALL, lambda r: np.log1p(r) - r, quad_nodes
        )
        large = _jump_integral(model, pv, states, LARGE, np.log1p, quad_nodes)
        best = max(best, bracket + small + large)
    return best
