from ._base import ScenarioCommand

EVOLVE_VARIANTS = ['NOISY', 'NOISELESS', 'MEANFIELD']


class Command(ScenarioCommand):
    help = "Kerr coupler evolution: noise-averaged analytics (NOISY), noiseless non-Hermitian analytics or the mean-field baseline."

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--variant', choices=EVOLVE_VARIANTS, default='NOISY')
