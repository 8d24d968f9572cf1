"""Neighborhood-tuned portfolios and the final local-vs-global choice."""
from __future__ import annotations

from dataclasses import dataclass

from .errors import UsageError
from .portfolio import PENALTY_COEFF, EafSource, Portfolio, greedy_build, perf
from .similarity import Neighborhood, weights

QUADRANTS = ("LL", "LG", "GL", "GG")


@dataclass(frozen=True)
class SelectionOutcome:
    target_function_id: int
    neighborhood: Neighborhood
    scheme: str
    ksbp_star: Portfolio
    sbp_star_ref: Portfolio
    local_perf_ksbp: float
    local_perf_sbp: float
    chosen: str  # "local" or "global"
    final_perf_ksbp: float | None = None
    final_perf_sbp: float | None = None

    @property
    def chosen_portfolio(self) -> Portfolio:
        return self.ksbp_star if self.chosen == "local" else self.sbp_star_ref

    @property
    def final_perf_chosen(self) -> float | None:
        return self.final_perf_ksbp if self.chosen == "local" else self.final_perf_sbp

    @property
    def quadrant(self) -> str | None:
        """Winner on the neighborhood, then winner on the target ("L"/"G")."""
        if self.final_perf_ksbp is None:
            return None
        local = "L" if self.local_perf_ksbp > self.local_perf_sbp else "G"
        final = "L" if self.final_perf_ksbp > self.final_perf_sbp else "G"
        return local + final


def build_ksbp_star(neighborhood: Neighborhood, scheme: str, eaf: EafSource, total_budget: int,
                    budgets, algorithms, penalty_coeff: float = PENALTY_COEFF) -> Portfolio:
    w = weights(scheme, neighborhood)
    return greedy_build(list(neighborhood.neighbor_ids), w, total_budget, budgets, algorithms, eaf,
                        penalty_coeff=penalty_coeff,
                        provenance={"method": "k-SBP*", "k": neighborhood.k, "scheme": scheme,
                                    "target": neighborhood.target_function_id})


def select_final(target_function_id: int, ksbp_star: Portfolio, sbp_star: Portfolio,
                 neighborhood: Neighborhood, scheme: str, eaf: EafSource,
                 diagnostics: bool = True) -> SelectionOutcome:
    """Pick whichever portfolio scores higher on the weighted neighborhood.

    Ties go to the global portfolio. The target's own data is read only
    afterwards, and only when ``diagnostics`` is set.
    """
    if int(target_function_id) != neighborhood.target_function_id:
        raise UsageError("neighborhood was computed for a different target")
    nbrs = list(neighborhood.neighbor_ids)
    w = weights(scheme, neighborhood)
    local_k = perf(nbrs, ksbp_star, w, eaf)
    local_g = perf(nbrs, sbp_star, w, eaf)
    chosen = "local" if local_k > local_g else "global"
    final_k = final_g = None
    if diagnostics:
        final_k = perf([target_function_id], ksbp_star, None, eaf)
        final_g = perf([target_function_id], sbp_star, None, eaf)
    return SelectionOutcome(int(target_function_id), neighborhood, scheme, ksbp_star, sbp_star,
                            local_k, local_g, chosen, final_k, final_g)


def quadrant_summary(outcomes) -> dict[str, float]:
    outcomes = list(outcomes)
    if not outcomes:
        raise UsageError("quadrant summary of zero outcomes")
    counts = dict.fromkeys(QUADRANTS, 0)
    for o in outcomes:
        q = o.quadrant
        if q is None:
            raise UsageError("outcome lacks target diagnostics")
        counts[q] += 1
    return {q: c / len(outcomes) for q, c in counts.items()}
