"""Classical simulation of fermionic linear optics.

Modules: ``grassmann`` (symbolic Grassmann algebra), ``skewlin``
(Pfaffians and antisymmetric normal forms), ``gaussian`` (Gaussian states,
operators and maps), ``flo`` (circuits, measurement, sampling), ``oracle``
(dense Jordan-Wigner reference) and ``cli``.
"""

from .flo import (
    Circuit,
    ImpossibleOutcome,
    Measure,
    QuadraticHamiltonian,
    Unitary,
    apply_measurement,
    evolve_unitary,
    exact_distribution,
    hamiltonian_to_generator,
    outcome_probabilities,
    run_shots,
    run_trajectory,
)
from .gaussian import (
    GaussianMap,
    GaussianOperator,
    GaussianState,
    apply_map,
    certify,
    compose,
    dual_state,
    maximally_mixed_state,
    vacuum_state,
)
from .skewlin import block_diagonalize, pfaffian

__version__ = "0.1.0"
