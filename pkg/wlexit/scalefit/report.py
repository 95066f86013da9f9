import json
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, Field

from wlexit.common.entities import ScalingFit

# Published reference values: rate mu0 of the plain chain, rates a(dx) for
# alpha = 1 and gamma_star = 8 against the bin width, rates mu_gamma for
# alpha = 1 against gamma_star, and exponents mu_alpha for alpha < 1.
MU0 = 2.32
BIN_WIDTH_RATES: Dict[float, float] = {0.025: 1.47, 0.05: 1.21, 0.1: 0.92, 0.2: 0.63}
GAMMA_STAR_RATES: Dict[float, float] = {0.0: 2.32, 1.0: 1.74, 2.0: 1.51, 4.0: 1.25, 8.0: 0.92}
ALPHA_EXPONENTS: Dict[float, float] = {0.125: 1.11, 0.25: 1.30, 0.375: 1.55, 0.5: 2.02, 0.625: 2.72, 0.75: 4.06}

REFERENCE_TABLES: Dict[str, Dict[float, float]] = {
    "bin-width": BIN_WIDTH_RATES,
    "gamma-star": GAMMA_STAR_RATES,
    "alpha": ALPHA_EXPONENTS,
}


class TableReport(BaseModel):
    rows: List[Dict[str, Any]] = Field(description="One record per fit, JSON-ready")
    text: str = Field(description="Aligned plain-text rendering of the rows")

    def to_json(self) -> str:
        return json.dumps(self.rows, indent=2)


def _relative_error(value: float, reference: Optional[float]) -> Optional[float]:
    if reference is None or reference == 0.0:
        return None
    return abs(value - reference) / abs(reference)


def table_report(
    fits: Sequence[Tuple[Any, ScalingFit]],
    references: Optional[Mapping[Any, float]] = None,
    label: str = "label",
) -> TableReport:
    """Fitted vs expected vs published slope per row.

    fits pairs a row label (alpha, gamma_star, bin width, ...) with its fit;
    references maps the same labels to published values.
    """
    if references and len(references) != len(fits):
        raise ValueError(f"{len(fits)} fits but {len(references)} reference values")
    rows = []
    for key, fit in fits:
        row: Dict[str, Any] = {label: key, **fit.model_dump()}
        if references:
            if key not in references:
                raise ValueError(f"no reference value for {label}={key}")
            row["reference"] = references[key]
            row["rel_err_reference"] = _relative_error(fit.slope, references[key])
        rows.append(row)

    columns = [label, "kind", "slope", "slope_stderr", "r_squared", "n_points", "expected", "rel_err"]
    if references:
        columns += ["reference", "rel_err_reference"]
    frame = pd.DataFrame(rows, columns=columns)
    text = frame.to_string(index=False, float_format=lambda v: f"{v:.4g}", na_rep="-")
    return TableReport(rows=rows, text=text)
