"""cpsforge: symbolic covariant-phase-space calculus with numeric cross-checks."""

from .chart import Chart, JetOrderError, MultiIndex, NonTangentError
from .forms import Form, d_h, d_v_anti, dd, hodge, iota_ev, iota_x, lie_ev, lie_x, vol, wedge

__all__ = [
    "Chart",
    "Form",
    "JetOrderError",
    "MultiIndex",
    "NonTangentError",
    "d_h",
    "d_v_anti",
    "dd",
    "hodge",
    "iota_ev",
    "iota_x",
    "lie_ev",
    "lie_x",
    "vol",
    "wedge",
]
