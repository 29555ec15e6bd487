"""Paired and independent t-tests with exact Student-t p-values.

The two-sided p-value is computed through the regularized incomplete beta
function, evaluated with a Lentz-style continued fraction.  scipy is not
used here on purpose: feature selection must not drift with external
library versions, and the continued fraction is checked against an
independent quadrature oracle in the tests.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlignmentError,
    DegenerateError,
    InsufficientDataError,
    NumericalError,
    SchemaError,
    ShapeError,
)
from .validation import as_float_array

log = logging.getLogger(__name__)

ALPHA_DEFAULT = 0.05
KIND_PAIRED = "paired"
KIND_INDEPENDENT = "independent"

_CF_TOL = 1e-12
_CF_MAX_ITER = 300


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    dof: float
    p_two_sided: float
    kind: str


@dataclass(frozen=True)
class SelectionMask:
    """Per-feature significance mask at level alpha."""

    names: tuple
    selected: np.ndarray  # bool, True iff p <= alpha
    p_values: np.ndarray  # nan where degenerate
    t_values: np.ndarray  # nan where degenerate
    degenerate: np.ndarray  # bool, True where the test was undefined
    alpha: float
    kind: str

    def __post_init__(self):
        if not (len(self.names) == len(self.selected) == len(self.p_values)
                == len(self.t_values) == len(self.degenerate)):
            raise ShapeError("SelectionMask arrays must be parallel to names")

    @property
    def n_selected(self):
        return int(self.selected.sum())

    @property
    def n_degenerate(self):
        return int(self.degenerate.sum())

    def selected_names(self):
        return tuple(n for n, s in zip(self.names, self.selected) if s)


# ---------------------------------------------------------------------------
# Regularized incomplete beta
# ---------------------------------------------------------------------------


def _beta_continued_fraction(a, b, x):
    """Continued fraction for the incomplete beta, modified Lentz method."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise NumericalError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def betainc_regularized(a, b, x):
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0 and b > 0):
        raise ValueError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only on one side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def student_t_p(t, dof):
    """Two-sided Student-t p-value: I_{dof/(dof+t^2)}(dof/2, 1/2)."""
    if not math.isfinite(t):
        raise ValueError("t statistic must be finite")
    if not dof > 0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    x = dof / (dof + t * t)
    return betainc_regularized(dof / 2.0, 0.5, x)


# ---------------------------------------------------------------------------
# t-tests
# ---------------------------------------------------------------------------


def paired_ttest(x, y):
    """Paired t-test on aligned samples.

    t = mean(d) / (sd(d) / sqrt(n)) with d = x - y, sample std, dof = n - 1.
    Zero-variance differences are degenerate, not a division by zero.
    """
    x = as_float_array(x, "x", ndim=1)
    y = as_float_array(y, "y", ndim=1)
    if len(x) != len(y):
        raise ShapeError("paired samples must have equal length")
    n = len(x)
    if n < 2:
        raise InsufficientDataError("paired t-test needs n >= 2")
    d = x - y
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise DegenerateError("differences have zero variance")
    t = float(d.mean()) / (sd / math.sqrt(n))
    dof = float(n - 1)
    return TTestResult(t_stat=t, dof=dof, p_two_sided=student_t_p(t, dof),
                       kind=KIND_PAIRED)


def independent_ttest(x, y):
    """Welch's unequal-variance t-test with Welch-Satterthwaite dof."""
    x = as_float_array(x, "x", ndim=1)
    y = as_float_array(y, "y", ndim=1)
    n_x, n_y = len(x), len(y)
    if n_x < 2 or n_y < 2:
        raise InsufficientDataError("independent t-test needs n >= 2 per group")
    v_x = float(x.var(ddof=1))
    v_y = float(y.var(ddof=1))
    se2 = v_x / n_x + v_y / n_y
    if se2 == 0.0:
        raise DegenerateError("both groups have zero variance")
    t = (float(x.mean()) - float(y.mean())) / math.sqrt(se2)
    dof = se2**2 / (
        (v_x / n_x) ** 2 / (n_x - 1) + (v_y / n_y) ** 2 / (n_y - 1)
    )
    return TTestResult(t_stat=t, dof=dof, p_two_sided=student_t_p(t, dof),
                       kind=KIND_INDEPENDENT)


# ---------------------------------------------------------------------------
# Per-feature selection over feature vectors
# ---------------------------------------------------------------------------


def _stack(vectors):
    names = vectors[0].names
    for vec in vectors:
        if vec.names != names:
            raise SchemaError("feature vectors disagree on feature names")
    return names, np.stack([vec.values for vec in vectors])


def select_features(wet, dry, kind=KIND_PAIRED, alpha=ALPHA_DEFAULT):
    """Per-feature t-test between conditions; selects p <= alpha.

    For the paired kind, wet and dry are aligned by patient_id before
    testing; mismatched patient sets raise AlignmentError.  Degenerate
    features are skipped with a warning and left unselected.
    """
    if kind not in (KIND_PAIRED, KIND_INDEPENDENT):
        raise ValueError(f"unknown test kind {kind!r}")
    if not wet or not dry:
        raise InsufficientDataError("both condition groups must be non-empty")
    names, wet_matrix = _stack(list(wet))
    dry_names, dry_matrix = _stack(list(dry))
    if dry_names != names:
        raise SchemaError("wet and dry vectors disagree on feature names")

    if kind == KIND_PAIRED:
        wet_by_pid = {vec.recording_ref[0]: i for i, vec in enumerate(wet)}
        dry_by_pid = {vec.recording_ref[0]: i for i, vec in enumerate(dry)}
        if len(wet_by_pid) != len(wet) or len(dry_by_pid) != len(dry):
            raise AlignmentError("duplicate patient_id within a condition group")
        if set(wet_by_pid) != set(dry_by_pid):
            raise AlignmentError("paired selection needs matching patient sets")
        order = sorted(wet_by_pid)
        wet_matrix = wet_matrix[[wet_by_pid[p] for p in order]]
        dry_matrix = dry_matrix[[dry_by_pid[p] for p in order]]
        test = lambda j: paired_ttest(wet_matrix[:, j], dry_matrix[:, j])
    else:
        test = lambda j: independent_ttest(wet_matrix[:, j], dry_matrix[:, j])

    n_features = len(names)
    p_values = np.full(n_features, np.nan)
    t_values = np.full(n_features, np.nan)
    degenerate = np.zeros(n_features, dtype=bool)
    for j in range(n_features):
        try:
            result = test(j)
        except DegenerateError:
            degenerate[j] = True
            continue
        p_values[j] = result.p_two_sided
        t_values[j] = result.t_stat
    if degenerate.any():
        log.warning("%d degenerate features excluded from %s selection",
                    int(degenerate.sum()), kind)
    selected = np.zeros(n_features, dtype=bool)
    ok = ~degenerate
    selected[ok] = p_values[ok] <= alpha
    return SelectionMask(names=names, selected=selected, p_values=p_values,
                         t_values=t_values, degenerate=degenerate,
                         alpha=alpha, kind=kind)


def selection_report(masks):
    """Tabulate selection counts from {(task, sex, kind): SelectionMask}.

    Rows are (sex, kind) combinations, columns are tasks; cells hold the
    selected-feature count or "-" where no mask was computed.
    """
    tasks = sorted({task for task, _, _ in masks})
    row_keys = sorted({(sex, kind) for _, sex, kind in masks})
    rows = []
    for sex, kind in row_keys:
        cells = {}
        for task in tasks:
            mask = masks.get((task, sex, kind))
            cells[task] = mask.n_selected if mask is not None else "-"
        rows.append({"sex": sex, "kind": kind, "counts": cells})
    return {"tasks": tasks, "rows": rows}
