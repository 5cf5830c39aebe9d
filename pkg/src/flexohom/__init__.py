"""Linear flexoelectric finite elements with C1 Bell triangles and
second-order computational homogenization of RVEs."""
from .constitutive import TABLE1, MaterialParams, build_material_matrices
from .homogenization import DBC, PBC, RVE, EffectiveTangents, effective_tangents, parameter_sweep
from .mesh import HoleSpec, generate_inclusion_rve, generate_square_rve, read_mesh, write_mesh
from .rve_bc import MacroState
from .two_scale import run_two_scale

__version__ = "0.1.0"

__all__ = [
    "TABLE1",
    "MaterialParams",
    "build_material_matrices",
    "PBC",
    "DBC",
    "RVE",
    "EffectiveTangents",
    "effective_tangents",
    "parameter_sweep",
    "HoleSpec",
    "generate_square_rve",
    "generate_inclusion_rve",
    "read_mesh",
    "write_mesh",
    "MacroState",
    "run_two_scale",
]
