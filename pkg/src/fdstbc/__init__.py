"""Fast-decodable full-rate 2x2 space-time block code toolkit."""

from .codes import (
    DesignCoefficient,
    DifferenceTuple,
    build_codeword,
    build_codeword_general,
    build_codeword_golden,
    case2_lower_bound,
    det_closed_form,
    det_direct,
)
from .constellations import (
    Constellation,
    DifferenceSet,
    GridApskSpec,
    NORMALIZATIONS,
    constellation_by_id,
    difference_set,
    make_apsk16_dvbs2,
    make_apsk8_conventional,
    make_apsk_grid,
    make_apsk_grid_preset,
    make_psk,
    make_qam,
    normalize,
)
from .gain import (
    GainReport,
    coding_gain,
    coding_gain_scaled,
    golden_coding_gain,
    pair_triples,
    vanishing_probe,
)
from .number_theory import (
    FourSquareWitness,
    check_cross_term_divisibility,
    classify_four_square,
    euler_four_square,
    min_offset,
    run_sweeps,
    verify_lemma1_bound,
)
from .optimizer import (
    CaseOneInvariantTable,
    OptimizationResult,
    analytic_integer_optimum,
    build_case1_table,
    optimize,
    optimize_step1,
    verify_step2,
)
from .simulate import (
    SimConfig,
    SimPoint,
    SimResult,
    diversity_slope,
    equivalent_channel,
    fast_decode,
    ml_decode_exhaustive,
    run_ber,
    transmit,
)

__version__ = "0.1.0"
