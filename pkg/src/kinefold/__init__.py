"""Kinetostatic-compliance folding simulator for reduced-DOF protein chains.

The protein is an open kinematic linkage whose dihedral joints comply
under torques derived from electrostatic, van der Waals, and
SASA-based implicit-solvation forces.  Per-iteration work stays
expected-linear through spatial hashing, a bond-tree interaction
classifier, offset-sphere surface enumeration, and suffix-sum torque
aggregation.
"""

__version__ = "0.1.0"

from .chain import (
    Chain,
    Conformation,
    PeptideGeometry,
    apply_deltas,
    build_chain,
    forward_kinematics,
    kinematic_state,
    link_transforms,
)
from .errors import KinefoldError
from .forcefield import (
    AtomParams,
    DielectricModel,
    EnergyBreakdown,
    elec_energy,
    elec_forces,
    vdw_energy,
    vdw_forces,
)
from .geometry import dihedral_angle, rotation_about_axis
from .kcm import (
    Field,
    FieldConfig,
    JointTorques,
    StepConfig,
    Trajectory,
    fold,
    hinge_scan,
    joint_torques,
    kcm_step,
    link_wrenches,
    ramachandran_scan,
    single_point,
)
from .pdbio import (
    ParamSet,
    RunLog,
    StructureRecord,
    load_params,
    read_pdb,
    read_sequence,
    write_manifest,
    write_pdb,
)
from .residues import ResidueSpec, default_templates
from .solvation import (
    SampleSphere,
    SasaResult,
    SolvationConfig,
    generate_samples,
    sasa_pass,
    solvation_forces,
)
from .spatial import (
    Cutoffs,
    GridConfig,
    HashGrid,
    NeighborTable,
    build_grid,
    build_neighbor_table,
    filtered_lists,
    filtered_pairs,
)
from .topology import (
    BondTree,
    InteractionClass,
    TreeWeights,
    UniformWeights,
    WeightTable,
    build_tree,
    classify,
)
