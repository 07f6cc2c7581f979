from .base import (  # noqa: F401
    MAX_GENOME_LENGTH,
    MIN_GENOME_LENGTH,
    NUCLEOTIDES,
    START_CODON,
    Genome,
    find_gene_starts,
    random_seed_genome,
)
from .io import dump_genomes, load_genomes  # noqa: F401
from .mutations import MutationCounts, MutationRates, mutate, mutate_with_counts  # noqa: F401
