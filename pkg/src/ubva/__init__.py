"""SVD-based individualized and summary measures of multi-collinearity."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DegenerateRowWarning,
    DegenerateSpectrumWarning,
    EmptyPanelError,
    FlatDecayWarning,
    InputError,
    LowRankApproximationWarning,
    NumericalError,
    OutOfRangeError,
    ParseError,
    RankDeficientError,
    RegimeError,
    UnsortedPositionsWarning,
)
from .matrix import (  # noqa: E402
    StandardizedMatrix,
    SvdFactors,
    correlation_matrix,
    correlation_row,
    decompose,
    gram_svd,
    standardize,
    thin_svd,
)
from .severity import (  # noqa: E402
    SeverityReport,
    SummaryMeasures,
    compute_SL,
    compute_SR,
    compute_summary,
    compute_weights,
    detection_threshold,
    expected_SR,
    expected_sR,
    measure,
    scale_measures,
    severity_report,
    sR_bounds,
)
from .baselines import (  # noqa: E402
    BaselinePanel,
    baseline_panel,
    condition_indices,
    condition_number,
    effective_counts,
    ld_adj,
    ld_score,
    red,
    vif,
)
from .covariance import (  # noqa: E402
    CovarianceSpec,
    MvnSampler,
    ScenarioReport,
    realize_covariance,
    run_scenario,
    sample_mvn,
    scenario_spec,
    solve_spike_decay,
)
from .genomics import (  # noqa: E402
    ChromosomeReport,
    GenotypePanel,
    chromosome_measures,
    compute_maf,
    export_manhattan,
    filter_snps,
    panel_pcs,
    parse_panel,
    pc_scores,
    simulate_block_panel,
)

__all__ = [name for name in dir() if not name.startswith("_")]
