from .ancestry import ANCESTRY_COLUMNS, AncestryIntegrityError, AncestryTable, LodEntry, extract_lod  # noqa: F401
from .config import (  # noqa: F401
    DEFAULT_SEED_CONNECTION_RANGE,
    DEFAULT_SEED_GENOME_LENGTH,
    PROBE_OFFSET,
    PopulationConfig,
    calibrated_rates,
)
from .population import (  # noqa: F401
    EvolutionResult,
    GenerationResult,
    PopulationEvaluation,
    advance_generation,
    build_founders,
    draw_seed_genome,
    evaluate_population,
    run_evolution,
)
from .selection import select_parents  # noqa: F401
from .sinks import (  # noqa: F401
    Checkpoint,
    CheckpointMismatchError,
    CompositeSink,
    EvolutionSink,
    MemorySink,
    PopulationStore,
)
from .stats import EXTRA_STATS_COLUMNS, STATS_COLUMNS, GenerationStats, summarize_generation  # noqa: F401
