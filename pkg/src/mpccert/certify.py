"""Runtime performance certificates.

Everything here is built from one measured quantity: over a stretch of
applied controls, the drop in the finite-horizon value compared against
the stage cost paid.  The ratio of the two is the certified degree of
suboptimality ``alpha``; its surplus over a required threshold
``alpha_bar``, weighted by the cost paid, is the slack ``rho`` that the
watchdog variants bank and spend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CertificateError, ConfigError
from .riccati import OpenLoopSolution

#: Default tolerance for acceptance inequalities evaluated in floating point.
DEFAULT_CERT_SLACK = 1e-10

_CSV_COLUMNS = ("n", "sigma_n", "m_n", "v_before", "v_after", "cost_sum", "alpha", "rho", "s_n")


def alpha_m_step(v_before: float, v_after: float, cost_sum: float) -> float:
    """Certified suboptimality degree over one stretch.

    ``(v_before - v_after) / cost_sum``; a stretch with zero cost is at
    the equilibrium already and certifies 1.  Negative cost sums are
    rejected, stage costs are nonnegative by construction.
    """
    if cost_sum < 0.0:
        raise ConfigError(f"cost_sum must be nonnegative, got {cost_sum}")
    if cost_sum == 0.0:
        return 1.0
    return (v_before - v_after) / cost_sum


def rho(v_before: float, v_after: float, cost_sum: float, alpha_bar: float) -> float:
    """Slack of the relaxed descent inequality at threshold ``alpha_bar``."""
    if cost_sum < 0.0:
        raise ConfigError(f"cost_sum must be nonnegative, got {cost_sum}")
    return v_before - v_after - alpha_bar * cost_sum


@dataclass(frozen=True)
class Certificate:
    """Descent record for one closed interval of applied controls.

    Attributes
    ----------
    n : int
        Interval index, counting from 0.
    sigma : int
        Closed-loop time at which the interval starts.
    m : int
        Number of applied steps in the interval.
    v_before, v_after : float
        Finite-horizon value at the interval's endpoints.
    cost_sum : float
        Stage cost paid over the interval.
    alpha : float
        ``(v_before - v_after) / cost_sum`` (1 on a zero-cost interval).
    rho : float
        ``v_before - v_after - alpha_bar * cost_sum``.
    """

    n: int
    sigma: int
    m: int
    v_before: float
    v_after: float
    cost_sum: float
    alpha: float
    rho: float

    @classmethod
    def build(
        cls,
        n: int,
        sigma: int,
        m: int,
        v_before: float,
        v_after: float,
        cost_sum: float,
        alpha_bar: float,
    ) -> "Certificate":
        return cls(
            n=n,
            sigma=sigma,
            m=m,
            v_before=v_before,
            v_after=v_after,
            cost_sum=cost_sum,
            alpha=alpha_m_step(v_before, v_after, cost_sum),
            rho=rho(v_before, v_after, cost_sum, alpha_bar),
        )


@dataclass
class SlackAccumulator:
    """Running sum of interval slacks, with its full history.

    ``values[i]`` is the accumulated slack after interval ``i``;
    ``total`` is the current sum (0 before anything is added).
    """

    total: float = 0.0
    values: list[float] = field(default_factory=list)

    def add(self, rho_value: float) -> float:
        self.total += rho_value
        self.values.append(self.total)
        return self.total


def update_acceptable(
    sol_old: OpenLoopSolution,
    sol_new: OpenLoopSolution,
    j: int,
    m: int,
    alpha_bar: float,
    *,
    end_value: float,
    cert_slack: float = DEFAULT_CERT_SLACK,
) -> bool:
    """Decide whether a mid-stretch re-plan may replace the running plan.

    ``sol_old`` is the committed plan, of which ``j`` steps have been
    applied; ``sol_new`` is a fresh plan from the state reached after
    those ``j`` steps.  The candidate applies ``m - j`` steps of the new
    plan, ending at a state whose finite-horizon value the caller passes
    as ``end_value``.  Accept when the budget inequality

        end_value + alpha_bar * (paid + planned) <= sol_old.value

    holds up to ``cert_slack``, where ``paid`` is the cost of the old
    prefix and ``planned`` the cost of the new segment.
    """
    if not 1 <= j < m:
        raise ConfigError(f"need 1 <= j < m, got j={j}, m={m}")
    if m - j > sol_new.horizon:
        raise ConfigError(
            f"candidate needs {m - j} steps but the new plan has {sol_new.horizon}"
        )
    paid = float(np.sum(sol_old.stage_costs[:j]))
    planned = float(np.sum(sol_new.stage_costs[: m - j]))
    return end_value + alpha_bar * (paid + planned) <= sol_old.value + cert_slack


def splice_control(
    sol_old: OpenLoopSolution, sol_new: OpenLoopSolution, j: int
) -> np.ndarray:
    """Concatenate the first ``j`` old controls with the whole new plan.

    The new plan must start at the state the old plan predicts after
    ``j`` steps; anchors further apart than 1e-10 are rejected.
    """
    if not 1 <= j <= sol_old.horizon:
        raise ConfigError(f"splice offset {j} outside [1, {sol_old.horizon}]")
    anchor_gap = np.max(np.abs(sol_new.trajectory[0] - sol_old.trajectory[j]))
    if anchor_gap > 1e-10:
        raise CertificateError(
            f"mismatched anchor: new plan starts {anchor_gap:.3e} away from the "
            f"old plan's state after {j} steps"
        )
    return np.vstack([sol_old.controls[:j], sol_new.controls])


def alpha_from_slack(v0: float, v_end: float, s: float, alpha_bar: float) -> float:
    """Improved a-posteriori degree from banked slack.

    ``(v0 - v_end) * alpha_bar / (v0 - v_end - s)``.  With no slack this
    returns ``alpha_bar`` unchanged.  The denominator vanishing means
    the paid cost was certified at no cost at all; that is reported as
    an error rather than an infinite degree.
    """
    denominator = v0 - v_end - s
    if denominator == 0.0:
        raise CertificateError("zero denominator: slack equals the whole value drop")
    return (v0 - v_end) * alpha_bar / denominator


def alpha_asymptotic(v0: float, theta: float, alpha_bar: float) -> float:
    """A-posteriori degree when the accumulated slack admits a floor.

    Requires ``v0 > theta``; returns ``alpha_bar * v0 / (v0 - theta)``.
    """
    if not v0 > theta:
        raise ConfigError(f"need v0 > theta, got v0={v0}, theta={theta}")
    return alpha_bar * v0 / (v0 - theta)


def certificates_to_csv(certificates, slack_values, path) -> None:
    """Write interval certificates as CSV, one row per interval.

    ``slack_values[i]`` is the accumulated slack after interval ``i``
    (as kept by :class:`SlackAccumulator`).
    """
    if len(slack_values) != len(certificates):
        raise ConfigError(
            f"{len(certificates)} certificates but {len(slack_values)} slack values"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(_CSV_COLUMNS) + "\n")
        for cert, s in zip(certificates, slack_values):
            row = (
                f"{cert.n:d},{cert.sigma:d},{cert.m:d},"
                f"{cert.v_before:.17g},{cert.v_after:.17g},{cert.cost_sum:.17g},"
                f"{cert.alpha:.17g},{cert.rho:.17g},{s:.17g}"
            )
            fh.write(row + "\n")
