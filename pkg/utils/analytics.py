"""
Trajectory Analytics

This module provides explainable statistics for Mann trajectories:
- Residual / fixed-point-distance tables
- Observed asymptotic-regularity indices
- Predicted-versus-observed comparisons for rate certificates
- Statistical summaries of residual decay
"""

import math
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from utils.iteration import Trajectory, check_fejer
from utils.rates import RateCertificate


# ========================================
# DATA PREPARATION
# ========================================

def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """
    Tabulate a trajectory.

    Returns:
        pd.DataFrame: columns n, residual, fix_distance (n_max + 1 rows)
    """
    return pd.DataFrame({
        "n": np.arange(len(trajectory.residuals), dtype=np.int64),
        "residual": np.asarray(trajectory.residuals, dtype=float),
        "fix_distance": np.asarray(trajectory.fix_distances, dtype=float),
    })


# ========================================
# OBSERVED REGULARITY
# ========================================

def empirical_regularity_index(trajectory: Trajectory, eps: float) -> Optional[int]:
    """
    First n after which every recorded residual is <= eps.

    Returns:
        int or None: None when the last residual still exceeds eps
    """
    residuals = np.asarray(trajectory.residuals)
    suffix_max = np.maximum.accumulate(residuals[::-1])[::-1]
    below = np.nonzero(suffix_max <= eps)[0]
    if below.size == 0:
        return None
    return int(below[0])


def observed_decay_rate(trajectory: Trajectory) -> Optional[float]:
    """
    Geometric-mean contraction factor of the residuals over their positive range.

    Formula:
        rate = (r_last / r_0) ** (1 / last), over the prefix with r_n > 0
    """
    residuals = np.asarray(trajectory.residuals)
    positive = np.nonzero(residuals > 0)[0]
    if positive.size < 2 or residuals[0] <= 0:
        return None
    last = int(positive[-1])
    if last == 0:
        return None
    return float(math.exp((math.log(residuals[last]) - math.log(residuals[0])) / last))


def compare_certificates(trajectory: Trajectory, certificates: List[RateCertificate]) -> List[Dict]:
    """
    Put each predicted index next to the index actually observed.

    Returns:
        list: [{
            'variant': str, 'epsilon': float,
            'predicted_index': int, 'observed_index': int or None,
            'slack': float or None (predicted / observed, >= 1 when sound),
            'status': str
        }, ...]
    """
    rows = []
    for cert in certificates:
        observed = empirical_regularity_index(trajectory, cert.epsilon)
        if observed is None:
            slack = None
        else:
            slack = cert.predicted_index / max(observed, 1)
        rows.append({
            "variant": cert.variant,
            "epsilon": cert.epsilon,
            "predicted_index": cert.predicted_index,
            "observed_index": observed,
            "slack": slack,
            "status": cert.status,
        })
    return rows


# ========================================
# STATISTICAL SUMMARIES
# ========================================

def summarize_trajectory(trajectory: Trajectory) -> Dict:
    """
    Summary statistics of a trajectory.

    Status Levels:
        - Converged: the last residual is exactly 0 or the run went stationary
        - Decaying: last residual below the first
        - Stalled: otherwise

    Returns:
        dict: {
            'operator', 'n_max', 'initial_residual', 'final_residual',
            'min_residual', 'quartiles', 'decay_rate', 'fejer_ok',
            'fejer_first_violation', 'stationary_from', 'status'
        }
    """
    residuals = np.asarray(trajectory.residuals)
    fejer_ok, fejer_index = check_fejer(trajectory)

    if residuals[-1] == 0 or trajectory.stationary_from is not None:
        status = "Converged"
    elif residuals[-1] < residuals[0]:
        status = "Decaying"
    else:
        status = "Stalled"

    return {
        "operator": trajectory.operator_label,
        "n_max": trajectory.n_max,
        "initial_residual": float(residuals[0]),
        "final_residual": float(residuals[-1]),
        "min_residual": float(np.min(residuals)),
        "quartiles": {
            "Q1": float(np.percentile(residuals, 25)),
            "Q2": float(np.percentile(residuals, 50)),
            "Q3": float(np.percentile(residuals, 75)),
        },
        "decay_rate": observed_decay_rate(trajectory),
        "fejer_ok": fejer_ok,
        "fejer_first_violation": fejer_index,
        "stationary_from": trajectory.stationary_from,
        "status": status,
    }
