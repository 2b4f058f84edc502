"""Treatment/control groups for waiting-list randomizations."""
from .combinatorics import (
    ExactRational,
    LotteryParams,
    binom,
    exact_test_pvalue,
    exact_test_tail_pvalue,
    expected_share,
    prob_T,
    variance_ratio,
)
from .kernels import BACKEND
from .waitlist import OrderingPattern, draw_ordering, run_waitlist, shares

__version__ = "0.1.0"
