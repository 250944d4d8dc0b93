"""Clarke error grid zoning and the +/-15 mg/dL, +/-20 % acceptability rule.

Zone regions follow the 1987 Clarke error grid. Points on a boundary go to
the more benign neighbour (A before B before C before D before E), with one
exception: the lower-left A region is ``reference < 70`` so that every
Zone-A point at or above 70 mg/dL really is within 20 % of the reference.
All comparisons are scaled by 5 to stay exact on integer inputs.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

ZONES = ("A", "B", "C", "D", "E")
GLUCOSE_MAX = 600.0


def _check(reference, predicted):
    for name, v in (("reference", reference), ("predicted", predicted)):
        if not (0 <= v <= GLUCOSE_MAX):
            raise RangeError(f"{name}={v} outside [0, {GLUCOSE_MAX:g}] mg/dL")


def clarke_zone(reference, predicted):
    """Clarke zone letter for one (reference, predicted) pair in mg/dL."""
    _check(reference, predicted)
    r, p = float(reference), float(predicted)
    # within 20 %, or both hypoglycaemic
    if 4 * r <= 5 * p <= 6 * r or (r < 70 and p <= 70):
        return "A"
    if 70 <= r < 290 and p > r + 110:
        return "C"
    if 130 < r <= 180 and 5 * p < 7 * r - 910:
        return "C"
    if r > 240 and 70 <= p < 180:
        return "D"
    if r < 70 and 70 < p <= 180:
        return "D"
    if (r < 70 and p > 180) or (r > 180 and p < 70):
        return "E"
    return "B"


def clinical_acceptability(reference, predicted):
    """True when within 15 mg/dL below a 75 mg/dL reference, else within 20 %."""
    _check(reference, predicted)
    err = abs(predicted - reference)
    if reference < 75:
        return err <= 15
    return 5 * err <= reference


@dataclass(frozen=True)
class ClarkeSummary:
    counts: dict
    percentages: dict
    n: int
    zones: tuple = ()


def clarke_summary(pairs):
    """Per-zone counts and percentages for ``(reference, predicted)`` pairs."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("no (reference, predicted) pairs to summarise")
    zones = tuple(clarke_zone(r, p) for r, p in pairs)
    n = len(zones)
    counts = {z: zones.count(z) for z in ZONES}
    percentages = {z: 100.0 * counts[z] / n for z in ZONES}
    return ClarkeSummary(counts, percentages, n, zones)


def clarke_boundaries(limit=400.0):
    """Zone boundary segments ``[(x0, y0), (x1, y1)]`` for plotting, clipped to ``limit``."""
    segs = [
        ("A", [(0.0, 70.0), (175.0 / 3.0, 70.0)]),
        ("A", [(175.0 / 3.0, 70.0), (limit / 1.2, limit)]),
        ("A", [(70.0, 0.0), (70.0, 56.0)]),
        ("A", [(70.0, 56.0), (limit, 0.8 * limit)]),
        ("D", [(70.0, 84.0), (70.0, limit)]),
        ("E", [(0.0, 180.0), (70.0, 180.0)]),
        ("C", [(70.0, 180.0), (limit - 110.0, limit)]),
        ("E", [(180.0, 0.0), (180.0, 70.0)]),
        ("E", [(180.0, 70.0), (limit, 70.0)]),
        ("D", [(240.0, 70.0), (240.0, 180.0)]),
        ("D", [(240.0, 180.0), (limit, 180.0)]),
        ("C", [(130.0, 0.0), (180.0, 70.0)]),
    ]
    return segs


ZONE_LABEL_POSITIONS = {
    "A": [(30, 15), (370, 260)],
    "B": [(280, 370), (260, 130)],
    "C": [(160, 370), (160, 15)],
    "D": [(30, 140), (370, 120)],
    "E": [(30, 370), (370, 15)],
}


@dataclass(frozen=True)
class EvaluationReport:
    sep: float
    rmsep: float
    bias: float
    zone_counts: dict
    zone_percentages: dict
    clinically_acceptable_fraction: float
    n: int

    def to_dict(self):
        return {
            "sep": self.sep,
            "rmsep": self.rmsep,
            "bias": self.bias,
            "zone_counts": dict(self.zone_counts),
            "zone_percentages": dict(self.zone_percentages),
            "clinically_acceptable_fraction": self.clinically_acceptable_fraction,
            "n": self.n,
        }


def evaluate(y_pred, y_ref):
    """SEP/RMSEP plus Clarke and acceptability summaries for paired predictions.

    Predictions outside the physiological range are clipped to ``[0, 600]``
    before zoning; the error metrics use the raw values.
    """
    from .regression import sep

    y_pred = np.asarray(y_pred, dtype=float)
    y_ref = np.asarray(y_ref, dtype=float)
    err = sep(y_pred, y_ref)
    clipped = np.clip(y_pred, 0.0, GLUCOSE_MAX)
    summary = clarke_summary(zip(y_ref, clipped))
    ok = [clinical_acceptability(r, p) for r, p in zip(y_ref, clipped)]
    return EvaluationReport(
        sep=err.sep,
        rmsep=err.rmsep,
        bias=err.bias,
        zone_counts=summary.counts,
        zone_percentages=summary.percentages,
        clinically_acceptable_fraction=float(np.mean(ok)),
        n=summary.n,
    )
