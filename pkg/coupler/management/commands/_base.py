from django.core.management.base import BaseCommand, CommandError

from ...exceptions import CouplerError
from ...forms import ScenarioForm
from ...services.scenario_service import ScenarioService

# (flag, form field, type)
SCENARIO_FLAGS = [
    ('--name', 'name', str),
    ('--kappa', 'kappa', float),
    ('--j', 'j', float),
    ('--chi', 'chi', float),
    ('--alpha0-re', 'alpha0_re', float),
    ('--alpha0-im', 'alpha0_im', float),
    ('--quantity', 'quantity', str),
    ('--t-max', 't_max', float),
    ('--n-samples', 'n_samples', int),
    ('--output', 'output', str),
    ('--fmt', 'fmt', str),
]

SWEEP_FLAGS = [
    ('--sweep-j-min', 'sweep_j_min', float),
    ('--sweep-j-max', 'sweep_j_max', float),
    ('--sweep-steps', 'sweep_steps', int),
]

ORACLE_FLAGS = [
    ('--oracle-n-a', 'oracle_n_a', int),
    ('--oracle-n-b', 'oracle_n_b', int),
    ('--oracle-dt', 'oracle_dt', float),
]


class CouplerCommand(BaseCommand):
    """
    Base for the simulator commands. Subclasses implement run(); any CouplerError
    becomes a CommandError carrying the error's exit code.
    """

    def handle(self, *args, **options):
        try:
            return self.run(*args, **options)
        except CouplerError as exc:
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, *args, **options):
        raise NotImplementedError

    def report(self, paths):
        for path in paths:
            self.stdout.write(self.style.SUCCESS(f"wrote {path}"))


class ScenarioCommand(CouplerCommand):
    """Commands that build one ScenarioConfig from --config and/or flags."""
    variant = None
    extra_flags = []
    defaults = {}

    def add_arguments(self, parser):
        parser.add_argument('--config', help="JSON file with scenario fields; flags override it")
        for flag, dest, kind in SCENARIO_FLAGS + self.extra_flags:
            parser.add_argument(flag, dest=dest, type=kind)
        parser.add_argument('--no-eb1', dest='include_eb1', action='store_false', default=None,
                            help="Drop the noise-driven EB1 term from NOISY results")

    def scenario_data(self, options):
        data = ScenarioService.load_config_file(options['config']) if options.get('config') else {}
        for _, dest, _ in SCENARIO_FLAGS + self.extra_flags:
            if options.get(dest) is not None:
                data[dest] = options[dest]
        if options.get('include_eb1') is not None:
            data['include_eb1'] = options['include_eb1']
        if self.variant:
            data['variant'] = self.variant
        elif options.get('variant'):
            data['variant'] = options['variant']
        for name, value in self.defaults.items():
            data.setdefault(name, value)
        # unbound form fields fall back to their initial values
        for name, field in ScenarioForm.base_fields.items():
            if name not in data and field.initial is not None:
                data[name] = field.initial
        return data

    def build_config(self, options):
        return ScenarioService.config_from_data(self.scenario_data(options))

    def run(self, *args, **options):
        config = self.build_config(options)
        self.report(ScenarioService.run_scenario(config))
