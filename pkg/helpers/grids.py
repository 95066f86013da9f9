import re
from typing import List

import numpy as np

_RANGE = re.compile(r"^\s*([^:]+):([^:]+):(log|lin)(\d+)\s*$")


def _to_float(token: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"invalid grid value {token!r}") from None


def parse_grid(text: str) -> List[float]:
    """Parse `lo:hi:logN`, `lo:hi:linN` or a comma-separated list into grid values.

    `lo:hi:logN` gives N log-spaced points from lo to hi inclusive (either order),
    `lo:hi:linN` N evenly spaced ones.
    """
    match = _RANGE.match(text)
    if match is None:
        values = [_to_float(token) for token in text.split(",") if token.strip()]
        if not values:
            raise ValueError(f"empty grid {text!r}")
        return values

    lo, hi = _to_float(match.group(1)), _to_float(match.group(2))
    spacing, count = match.group(3), int(match.group(4))
    if count < 1:
        raise ValueError(f"grid {text!r} needs at least one point")
    if count == 1:
        return [lo]
    if spacing == "log":
        if lo <= 0.0 or hi <= 0.0:
            raise ValueError(f"log grid {text!r} needs positive endpoints")
        return [float(v) for v in np.geomspace(lo, hi, count)]
    return [float(v) for v in np.linspace(lo, hi, count)]
