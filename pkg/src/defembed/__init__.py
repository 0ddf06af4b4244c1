"""Order-by-order extension of embeddings over deformation families.

Given a chart presentation of a family of compact complex manifolds and an
embedding of the central fiber into an ambient manifold, build the extended
map as a truncated power series in the deformation parameters, verify the
glue equation exactly at every order, and check majorant bounds that
certify convergence.
"""
from .series import (
    StructureError,
    TruncatedSeries,
    ZPoly,
    compose_ambient,
    compose_fiber,
    congruent_mod,
    homogeneous_part,
    jacobian_at_center,
    tail_from,
)
from .cover import CoverSpec, load_cover, validate_ambient_cocycle, validate_fiber_cocycle
from .cech import (
    JacobianTwist,
    Obstruction,
    ObstructionError,
    OneCochain,
    ZeroCochain,
    coboundary,
    cocycle_check,
    split_cocycle,
)
from .extension import (
    ExtensionState,
    compute_defect,
    extend_one_order,
    immersion_spot_check,
    init,
    run_to_order,
)
from .fixtures import load_fixture
from .majorant import CanonicalA, ConvergenceCertificate, Majorant, auto_parameters, certify, dominates

__version__ = "0.1.0"
