"""Ground-state search for mean-field spin glasses.

Thin wrapper over the compiled extension; everything heavy lives in C++.
"""

try:
    from ._skamp import *  # noqa: F401,F403  (installed layout)
    from . import _skamp as _core  # noqa: F401
except ImportError:  # build-tree layout: extension sits next to the package dir
    from _skamp import *  # noqa: F401,F403
    import _skamp as _core  # noqa: F401

__version__ = "0.1.0"


def ground_state(array, beta, seed=1, K=32, delta=0.01):
    """Approximate ground state of a symmetric coupling array.

    Returns (sigma, energy_per_site). Convenience path for small inputs;
    for sweeps and caching use run_sk / ExperimentConfig.
    """
    A = _core.matrix_from_dense(array)
    res = _core.minimize_parisi(beta, K)
    oracle = _core.solve_pde(beta, res.measure)
    params = _core.IampParams()
    params.beta = beta
    params.delta = delta
    out = _core.run_iamp(A, oracle, params, seed)
    rounded = _core.sequential_round(A, out.z)
    return rounded.sigma, rounded.energy_after
