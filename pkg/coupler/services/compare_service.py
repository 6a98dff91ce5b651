import json
import logging
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import GridMismatchError

logger = logging.getLogger(__name__)

# Columns a comparison looks at, in report order
COMPARABLE = ('a', 'b', 'n_a', 'n_b', 'ab', 'adag_bdag', 'bb', 'X_A', 'P_A', 'X_B', 'P_B')

DEFAULT_TOLERANCE = 1e-4
FLOOR_FRACTION = 1e-3


@dataclass
class CompareReport:
    columns: dict = field(default_factory=dict)
    notes: str = ''

    @property
    def passed(self):
        return bool(self.columns) and all(entry['passed'] for entry in self.columns.values())

    @property
    def verdict(self):
        return 'PASS' if self.passed else 'FAIL'

    def as_dict(self):
        return {'verdict': self.verdict, 'columns': self.columns, 'notes': self.notes}

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


class CompareService:
    @staticmethod
    def relative_error(analytic, reference):
        """
        |analytic - reference| / max(|reference|, floor), with the floor at 1e-3 of the
        column's largest magnitude so zero crossings do not dominate.
        """
        analytic = np.asarray(analytic)
        reference = np.asarray(reference)
        floor = max(FLOOR_FRACTION * float(np.max(np.abs(reference), initial=0.0)), 1e-300)
        return np.abs(analytic - reference) / np.maximum(np.abs(reference), floor)

    @staticmethod
    def compare(analytic_series, oracle_series, tolerances=None, notes=''):
        """
        Per-column max/mean relative error of analytic against oracle, judged against
        a tolerance table (a dict per column, or one number for all columns).
        """
        if analytic_series.t.shape != oracle_series.t.shape or not np.allclose(
            analytic_series.t, oracle_series.t, rtol=1e-12, atol=1e-12
        ):
            raise GridMismatchError("analytic and oracle series are sampled on different time grids")

        if tolerances is None or isinstance(tolerances, (int, float)):
            default, table = (DEFAULT_TOLERANCE if tolerances is None else float(tolerances)), {}
        else:
            default, table = DEFAULT_TOLERANCE, dict(tolerances)

        report = CompareReport(notes=notes)
        for name in COMPARABLE:
            if name not in analytic_series.columns or name not in oracle_series.columns:
                continue
            errors = CompareService.relative_error(
                analytic_series.columns[name], oracle_series.columns[name],
            )
            tolerance = table.get(name, default)
            max_err = float(np.max(errors)) if errors.size else 0.0
            report.columns[name] = {
                'max_rel_error': max_err,
                'mean_rel_error': float(np.mean(errors)) if errors.size else 0.0,
                'tolerance': tolerance,
                'passed': bool(max_err <= tolerance),
            }
        if not report.columns:
            raise GridMismatchError("series share no comparable columns")
        logger.info("comparison verdict %s over %s", report.verdict, ', '.join(report.columns))
        return report
