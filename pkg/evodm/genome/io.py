from typing import Iterable, List

from evodm.genome.base import Genome


def dump_genomes(path: str, genomes: Iterable[Genome]) -> None:
    # One genome per line, nucleotides as digits with no separators
    with open(path, "w") as f:
        for g in genomes:
            f.write(g.to_string() + "\n")


def load_genomes(path: str) -> List[Genome]:
    with open(path) as f:
        return [Genome.from_string(line) for line in f if line.strip()]
