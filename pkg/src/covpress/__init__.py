"""Pressure of commuting lattice actions on finite and discretized spaces.

The package computes the four cover-based pressure quantities (weighted
minimal subcovers, separated and spanning sums), measure-theoretic pressure,
and the admissibility bookkeeping that keeps boundary complexity from leaking
into the numbers.  See README.md for the experiment drivers.
"""

from covpress.coveralg import (
    AdmissibilityReport,
    ClosenessGraph,
    CoverBudgetError,
    PartitionAdmissibilityReport,
    SetFamily,
    classify_admissible,
    classify_admissible_partition,
    closeness_graph,
    cover_from_partition,
    join,
    membership_partition,
    orbit_join,
    potential_cover,
    preimage_family,
    refines,
)
from covpress.dynsys import (
    FiniteSystem,
    Potential,
    apply_power,
    birkhoff_field,
    birkhoff_sum,
    cycle_structure,
    make_circle_doubling,
    make_disk_system,
    power_system,
)
from covpress.fullshift import (
    FullShiftSpec,
    bernoulli_pressure,
    cylinder_sum,
    exact_pressure,
    gibbs_optimizer,
)
from covpress.lattice import (
    Box,
    TileDecomposition,
    box_cardinality,
    decompose,
    diagonal,
    enumerate_box,
    sym_diff_cardinality,
)
from covpress.measpressure import (
    FiniteMeasure,
    conditional_entropy,
    empirical_measures,
    entropy_rate,
    invariance_defect,
    is_invariant,
    ks_entropy,
    measure_pressure,
    partition_entropy,
    pushforward,
    separated_entropy_link_check,
)
from covpress.solvers import (
    SolveResult,
    WeightedCoverInstance,
    max_weight_independent_set,
    min_subcover_value,
)
from covpress.toppressure import (
    PressureEstimate,
    PressureSample,
    cover_pressure_value,
    pressure_quadruple,
    rate_sequence,
    separated_value,
    spanning_value,
    topological_pressure,
)

__all__ = [
    "AdmissibilityReport",
    "Box",
    "ClosenessGraph",
    "CoverBudgetError",
    "FiniteMeasure",
    "FiniteSystem",
    "FullShiftSpec",
    "PartitionAdmissibilityReport",
    "Potential",
    "PressureEstimate",
    "PressureSample",
    "SetFamily",
    "SolveResult",
    "TileDecomposition",
    "WeightedCoverInstance",
    "apply_power",
    "bernoulli_pressure",
    "birkhoff_field",
    "birkhoff_sum",
    "box_cardinality",
    "classify_admissible",
    "classify_admissible_partition",
    "closeness_graph",
    "conditional_entropy",
    "cover_from_partition",
    "cover_pressure_value",
    "cycle_structure",
    "cylinder_sum",
    "decompose",
    "diagonal",
    "empirical_measures",
    "entropy_rate",
    "enumerate_box",
    "exact_pressure",
    "gibbs_optimizer",
    "invariance_defect",
    "is_invariant",
    "join",
    "ks_entropy",
    "make_circle_doubling",
    "make_disk_system",
    "max_weight_independent_set",
    "measure_pressure",
    "membership_partition",
    "min_subcover_value",
    "orbit_join",
    "partition_entropy",
    "potential_cover",
    "power_system",
    "preimage_family",
    "pressure_quadruple",
    "pushforward",
    "rate_sequence",
    "refines",
    "separated_entropy_link_check",
    "separated_value",
    "spanning_value",
    "sym_diff_cardinality",
    "topological_pressure",
]

__version__ = "0.1.0"
