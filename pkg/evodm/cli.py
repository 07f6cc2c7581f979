import click

from .analysis.correlation import correlate
from .analysis.probe import probe
from .analysis.trajectories import lod
from .harness.experiment import evolve
from .validation import validate


@click.group()
def main() -> None:
    pass


main.add_command(evolve)
main.add_command(lod)
main.add_command(probe)
main.add_command(correlate)
main.add_command(validate)
