from ._base import CouplerCommand
from ...exceptions import ConfigError
from ...services.scenario_service import ScenarioService


class Command(CouplerCommand):
    help = "Regenerates the data series of a named figure preset."

    def add_arguments(self, parser):
        parser.add_argument('name', nargs='?', help="Preset name, e.g. fig4")
        parser.add_argument('--output-dir')
        parser.add_argument('--list', action='store_true', help="List the available presets")

    def run(self, *args, **options):
        if options['list']:
            for name in ScenarioService.preset_names():
                self.stdout.write(name)
            return
        if not options.get('name'):
            raise ConfigError("figure needs a preset name; see --list")
        self.report(ScenarioService.run_figure(options['name'], options.get('output_dir')))
