from ._base import SWEEP_FLAGS, ScenarioCommand
from ...exceptions import ConfigError
from ...services.output_service import OutputService
from ...services.sweep_service import SweepService


class Command(ScenarioCommand):
    help = "Evaluates change_ratio, d3 or eb1_overlap over a (J/kappa, kappa t) grid."
    extra_flags = SWEEP_FLAGS
    defaults = {'quantity': 'change_ratio'}

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--variant', choices=['NOISY', 'NOISELESS'], default='NOISY')
        parser.add_argument('--workers', type=int, help="Worker processes (default COUPLER SWEEP_WORKERS)")

    def run(self, *args, **options):
        config = self.build_config(options)
        if not config.sweep:
            raise ConfigError("sweep needs --sweep-j-min and --sweep-j-max")
        surface = SweepService.sweep(config, workers=options.get('workers'))
        if surface.meta['nan_cells']:
            self.stdout.write(self.style.WARNING(f"{surface.meta['nan_cells']} cell(s) undefined, see reason column"))
        self.report(OutputService.write(surface, config))
