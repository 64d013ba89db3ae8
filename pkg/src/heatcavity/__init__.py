"""Numerical laboratory for recovering a cavity in a 2D heat conductor.

The package synthesizes boundary measurement operators for transient heat
conduction with and without an interior cavity, and locates the cavity
from those operators alone through a spectral probe indicator.

Layout
------
``geometry``
    Parametric boundary curves, arclength quadrature, point classification.
``kernels``
    Heat kernel, its gradients, and exact time integrals over lag windows.
``forward``
    Space-time boundary-element solver for interior Neumann problems.
``oracles``
    Independent reference solutions (radial finite differences, separation
    of variables) used only to validate the solver.
``ndmap``
    Flux-to-trace operator assembly: measurement maps, virtual
    measurements, time reversal, symmetrization, noise.
``recon``
    Spectral cutoff, probe indicator, sampling grids, cavity masks.
``verify``
    Self-contained checks of the discrete theory on a benchmark geometry.
``io``
    On-disk formats for operators, spectra, indicator grids, and records.
``cli``
    The ``simulate`` / ``reconstruct`` / ``spectrum`` / ``verify`` driver.
"""

from .forward import (
    BoundaryField,
    LayerDensity,
    RetardedBlocks,
    SolverError,
    TimeGrid,
    assemble_blocks,
    green_probe_traces,
    normal_derivative_on,
    solve_neumann,
    trace_on,
)
from .geometry import (
    BoundaryCurve,
    CurveSpec,
    GeometryError,
    OnBoundaryError,
    distance_to_curve,
    make_curve,
    point_in_region,
    winding_number,
)
from .ndmap import (
    NoiseSpec,
    ProblemSetup,
    SpaceTimeOperator,
    add_noise,
    apply_FL,
    apply_L,
    apply_Lhat,
    apply_Lprime,
    assemble_FL,
    assemble_L,
    assemble_Lhat,
    assemble_N,
    assemble_lambda,
    gram_weights,
    lprime_from_duality,
    symmetrize,
    time_reversal,
)
from .recon import (
    EigenSystem,
    IndicatorGrid,
    ProbePoint,
    SamplingSpec,
    eigendecompose,
    jaccard,
    picard_indicator,
    reconstruct,
    sampling_points,
)

__all__ = [
    "BoundaryCurve",
    "BoundaryField",
    "CurveSpec",
    "EigenSystem",
    "GeometryError",
    "IndicatorGrid",
    "LayerDensity",
    "NoiseSpec",
    "OnBoundaryError",
    "ProbePoint",
    "ProblemSetup",
    "RetardedBlocks",
    "SamplingSpec",
    "SolverError",
    "SpaceTimeOperator",
    "TimeGrid",
    "add_noise",
    "apply_FL",
    "apply_L",
    "apply_Lhat",
    "apply_Lprime",
    "assemble_FL",
    "assemble_L",
    "assemble_Lhat",
    "assemble_N",
    "assemble_blocks",
    "assemble_lambda",
    "distance_to_curve",
    "eigendecompose",
    "gram_weights",
    "green_probe_traces",
    "jaccard",
    "lprime_from_duality",
    "make_curve",
    "normal_derivative_on",
    "picard_indicator",
    "point_in_region",
    "reconstruct",
    "sampling_points",
    "solve_neumann",
    "symmetrize",
    "time_reversal",
    "trace_on",
    "winding_number",
]

__version__ = "0.1.0"
