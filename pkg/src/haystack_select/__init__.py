"""Query-aware submodular subset selection over embedding sets.

Pick a small subset of a large embedding collection that is maximally
informative about a query, and benchmark how reliably greedy subset
selection keeps a sought item ("needle") inside shrinking subsets of ever
larger haystacks.
"""

from .bench import (
    RANDOM_BASELINE,
    BenchReport,
    SweepGrid,
    SynthConfig,
    TrialConfig,
    TrialError,
    TrialOutcome,
    World,
    gen_synthetic,
    load_world,
    make_world,
    run_sweep,
    run_trial,
    success_fraction,
    trial_seed,
)
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    DuplicateIdError,
    EmbeddingFormatError,
    HaystackSelectError,
    ManifestError,
    NonFiniteValueError,
    NumericalError,
    QueryParseError,
    UnknownClassError,
    ZeroNormRowError,
)
from .kernel import (
    DEFAULT_GROUND_CAP,
    DEFAULT_JITTER,
    GroundSimilarity,
    KernelConfig,
    QueryKernel,
    build_query_kernel,
    cosine,
    kernel_block,
)
from .objectives import (
    OBJECTIVE_KINDS,
    PREFERRED_TRANSFORMS,
    MixtureComponent,
    ObjectiveSpec,
    SelectionProblem,
    flvmi_value,
    gcmi_value,
    logdetmi_value,
    marginal_gain,
)
from .optimizer import (
    STRATEGIES,
    SelectionResult,
    greedy_select,
    subset_fraction_to_k,
)
from .querykit import ParsedQuery, QuerySet, build_query_set, parse_query, render_query
from .store import (
    EmbeddingMatrix,
    ReferenceStore,
    load_embeddings,
    load_reference_store,
    lookup_references,
    normalize_rows,
    write_embeddings,
)

__version__ = "0.1.0"

__all__ = [
    "RANDOM_BASELINE",
    "BenchReport",
    "SweepGrid",
    "SynthConfig",
    "TrialConfig",
    "TrialError",
    "TrialOutcome",
    "World",
    "gen_synthetic",
    "load_world",
    "make_world",
    "run_sweep",
    "run_trial",
    "success_fraction",
    "trial_seed",
    "ConfigurationError",
    "DimensionMismatchError",
    "DuplicateIdError",
    "EmbeddingFormatError",
    "HaystackSelectError",
    "ManifestError",
    "NonFiniteValueError",
    "NumericalError",
    "QueryParseError",
    "UnknownClassError",
    "ZeroNormRowError",
    "DEFAULT_GROUND_CAP",
    "DEFAULT_JITTER",
    "GroundSimilarity",
    "KernelConfig",
    "QueryKernel",
    "build_query_kernel",
    "cosine",
    "kernel_block",
    "OBJECTIVE_KINDS",
    "PREFERRED_TRANSFORMS",
    "MixtureComponent",
    "ObjectiveSpec",
    "SelectionProblem",
    "flvmi_value",
    "gcmi_value",
    "logdetmi_value",
    "marginal_gain",
    "STRATEGIES",
    "SelectionResult",
    "greedy_select",
    "subset_fraction_to_k",
    "ParsedQuery",
    "QuerySet",
    "build_query_set",
    "parse_query",
    "render_query",
    "EmbeddingMatrix",
    "ReferenceStore",
    "load_embeddings",
    "load_reference_store",
    "lookup_references",
    "normalize_rows",
    "write_embeddings",
    "__version__",
]
