"""Progression counting, exact extremal values and constructions for k-AP-free integer sets."""

from .intset import (
    IntSet,
    Progression,
    count_s_aps,
    difference_set,
    find_progression,
    is_k_ap_free,
    iterated_sumset,
    normalize,
    sumset,
    window_ap_count_exact,
    window_ap_count_closed_form,
)
from .exact import Cache, FskEntry, SolverEntry, find_N, fsk_windowed_max, rk_exact, verify_table_inequalities
from .constructions import (
    BlockParams,
    block_random_construct,
    expected_sap_lower_bound,
    final_lower_bound,
    monte_carlo_expected_saps,
    product_construct,
    threeapfree_seed,
)
from .structure import (
    APGraph,
    FreimanMap,
    build_ap_graph,
    count_paths4,
    freiman_iso_check,
    partial_sumset,
    plunnecke_check,
    rich_subset,
    verify_bsg,
)

__version__ = "0.1.0"
